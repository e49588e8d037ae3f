#include "sp/synth.hpp"

#include "sp/csv.hpp"

namespace sp {

void SynthParams::validate() const {
  require(seen >= 1 && unseen >= 1, "synth: class counts must be at least 1");
  require(dim >= 1, "synth: dimension must be at least 1");
  require(train_per_class >= 1 && test_per_class >= 1, "synth: per-class sample counts must be at least 1");
  require(centroid_scale > 0.0 && image_noise >= 0.0 && seen_offset >= 0.0, "synth: invalid scale or noise");
  require(!sources.empty(), "synth: at least one semantic source is required");
  for (const auto& s : sources) {
    require(!s.name.empty() && s.dim >= 1 && s.noise >= 0.0, "synth: invalid source specification");
  }
}

Dataset generate_synthetic(const SynthParams& p) {
  p.validate();
  Rng rng(p.seed);
  const int classes = p.seen + p.unseen;

  // Rows [seen..., unseen...].
  Matrix centroids(classes, p.dim);
  for (Eigen::Index i = 0; i < centroids.size(); ++i) centroids.data()[i] = p.centroid_scale * rng.normal();
  if (p.seen_between_unseen) {
    for (int s = 0; s < p.seen; ++s) {
      const auto a = static_cast<Eigen::Index>(p.seen + rng.below(static_cast<std::uint64_t>(p.unseen)));
      auto b = a;
      if (p.unseen > 1) {
        b = static_cast<Eigen::Index>(p.seen + rng.below(static_cast<std::uint64_t>(p.unseen - 1)));
        if (b >= a) ++b;
      }
      const double t = rng.uniform();
      for (int d = 0; d < p.dim; ++d)
        centroids(s, d) = t * centroids(a, d) + (1.0 - t) * centroids(b, d) + p.seen_offset * rng.normal();
    }
  }

  Dataset ds;
  for (int c = 0; c < p.seen; ++c) ds.seen.push_back(p.first_class_id + c);
  for (int c = 0; c < p.unseen; ++c) ds.unseen.push_back(p.first_class_id + p.seen + c);

  const double map_scale = 1.0 / std::sqrt(static_cast<double>(p.dim));
  for (const auto& source : p.sources) {
    Matrix projection(source.dim, p.dim);
    for (Eigen::Index i = 0; i < projection.size(); ++i) projection.data()[i] = map_scale * rng.normal();
    Matrix table = centroids * projection.transpose();
    for (Eigen::Index i = 0; i < table.size(); ++i) table.data()[i] += source.noise * rng.normal();
    ds.semantic[source.name] = std::move(table);
  }

  const auto total = static_cast<Eigen::Index>(p.seen) * p.train_per_class +
                     static_cast<Eigen::Index>(p.unseen) * p.test_per_class;
  ds.features.resize(total, p.dim);
  Eigen::Index row = 0;
  const auto emit = [&](int c, ClassId label, ClassId truth) {
    for (int d = 0; d < p.dim; ++d) ds.features(row, d) = centroids(c, d) + p.image_noise * rng.normal();
    ds.labels.push_back(label);
    ds.true_labels.push_back(truth);
    ++row;
  };
  for (int c = 0; c < p.seen; ++c)
    for (int i = 0; i < p.train_per_class; ++i) emit(c, ds.seen[c], ds.seen[c]);
  for (int u = 0; u < p.unseen; ++u)
    for (int i = 0; i < p.test_per_class; ++i) emit(p.seen + u, kHiddenLabel, ds.unseen[u]);

  ds.validate();
  return ds;
}

nlohmann::ordered_json to_json(const SynthParams& p) {
  nlohmann::ordered_json j;
  j["seen"] = p.seen;
  j["unseen"] = p.unseen;
  j["dim"] = p.dim;
  j["train_per_class"] = p.train_per_class;
  j["test_per_class"] = p.test_per_class;
  j["centroid_scale"] = p.centroid_scale;
  j["image_noise"] = p.image_noise;
  j["seen_between_unseen"] = p.seen_between_unseen;
  j["seen_offset"] = p.seen_offset;
  j["sources"] = nlohmann::ordered_json::array();
  for (const auto& s : p.sources) j["sources"].push_back({{"name", s.name}, {"dim", s.dim}, {"noise", s.noise}});
  j["seed"] = p.seed;
  j["first_class_id"] = p.first_class_id;
  return j;
}

SynthParams synth_params_from_json(const nlohmann::json& j) {
  SynthParams p;
  try {
    p.seen = j.at("seen").get<int>();
    p.unseen = j.at("unseen").get<int>();
    p.dim = j.at("dim").get<int>();
    p.train_per_class = j.at("train_per_class").get<int>();
    p.test_per_class = j.at("test_per_class").get<int>();
    p.centroid_scale = j.at("centroid_scale").get<double>();
    p.image_noise = j.at("image_noise").get<double>();
    p.seen_between_unseen = j.value("seen_between_unseen", true);
    p.seen_offset = j.value("seen_offset", 0.1);
    p.sources.clear();
    for (const auto& s : j.at("sources"))
      p.sources.push_back({s.at("name").get<std::string>(), s.at("dim").get<int>(), s.at("noise").get<double>()});
    p.seed = j.at("seed").get<std::uint64_t>();
    p.first_class_id = j.value("first_class_id", ClassId{1});
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("malformed synthetic manifest: ") + e.what());
  }
  p.validate();
  return p;
}

void write_synthetic(const std::filesystem::path& dir, const SynthParams& params) {
  const auto ds = generate_synthetic(params);
  save_dataset(dir, ds);
  csv::write_text(dir / "manifest.json", to_json(params).dump(2) + "\n");
}

}  // namespace sp
