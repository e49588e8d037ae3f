#include "sp/data.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "sp/csv.hpp"
#include "sp/kernels.hpp"

namespace fs = std::filesystem;

namespace sp {

namespace {

bool same_matrix(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

std::vector<ClassId> parse_split_line(std::string_view line, const fs::path& path, std::size_t line_no) {
  const auto colon = line.find(':');
  if (colon == std::string_view::npos) fail("malformed split line in " + path.string());
  std::vector<ClassId> ids;
  const auto rest = line.substr(colon + 1);
  for (auto field : csv::split_fields(rest)) {
    if (field.empty()) continue;
    ids.push_back(csv::parse_id(field, path, line_no));
  }
  return ids;
}

struct Splits {
  std::vector<ClassId> seen;
  std::vector<ClassId> unseen;
};

Splits read_splits(const fs::path& path) {
  const std::string text = csv::read_text(path);
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::vector<ClassId>> seen, unseen;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    while (!view.empty() && (view.front() == ' ' || view.front() == '\t')) view.remove_prefix(1);
    if (view.empty() || view == "\r") continue;
    if (view.starts_with("seen")) {
      seen = parse_split_line(view, path, line_no);
    } else if (view.starts_with("unseen")) {
      unseen = parse_split_line(view, path, line_no);
    } else {
      fail("unrecognized split line " + std::to_string(line_no) + " in " + path.string());
    }
  }
  if (!seen || !unseen) fail("splits file must define both 'seen' and 'unseen': " + path.string());
  return {*seen, *unseen};
}

std::vector<ClassId> sorted_unique(std::vector<ClassId> ids, const std::string& what) {
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) fail("duplicate class id in " + what + " split");
  return ids;
}

std::string source_name(const fs::path& file) { return file.stem().string(); }

Matrix read_semantic_table(const fs::path& path, const std::vector<ClassId>& order) {
  const auto rows = csv::read_numeric(path);
  if (rows.size() != order.size()) {
    fail("embedding row count mismatch in " + path.string() + ": got " + std::to_string(rows.size()) +
         ", expected " + std::to_string(order.size()));
  }
  std::map<ClassId, const std::vector<double>*> by_id;
  std::size_t width = 0;
  for (const auto& row : rows) {
    if (row.size() < 2) fail("semantic row without embedding values in " + path.string());
    const double raw_id = row.front();
    const auto id = static_cast<ClassId>(raw_id);
    if (static_cast<double>(id) != raw_id) fail("non-integer class id in " + path.string());
    if (width == 0) width = row.size() - 1;
    if (row.size() - 1 != width) fail("dimension mismatch between rows of " + path.string());
    if (!by_id.emplace(id, &row).second) {
      fail("duplicate class row " + std::to_string(id) + " in " + path.string());
    }
  }
  const std::set<ClassId> known(order.begin(), order.end());
  for (const auto& [id, row] : by_id) {
    if (!known.count(id)) fail("unknown class " + std::to_string(id) + " in " + path.string());
  }
  Matrix table(static_cast<Eigen::Index>(order.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto it = by_id.find(order[i]);
    if (it == by_id.end()) fail("missing embedding for class " + std::to_string(order[i]) + " in " + path.string());
    for (std::size_t d = 0; d < width; ++d) table(i, d) = (*it->second)[d + 1];
  }
  return table;
}

}  // namespace

bool operator==(const Dataset& a, const Dataset& b) {
  if (!same_matrix(a.features, b.features)) return false;
  if (a.labels != b.labels || a.true_labels != b.true_labels || a.seen != b.seen || a.unseen != b.unseen) return false;
  if (a.semantic.size() != b.semantic.size()) return false;
  for (const auto& [name, table] : a.semantic) {
    auto it = b.semantic.find(name);
    if (it == b.semantic.end() || !same_matrix(table, it->second)) return false;
  }
  return true;
}

std::vector<std::size_t> Dataset::train_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t n = 0; n < labels.size(); ++n)
    if (labels[n] != kHiddenLabel) out.push_back(n);
  return out;
}

std::vector<std::size_t> Dataset::test_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t n = 0; n < labels.size(); ++n)
    if (labels[n] == kHiddenLabel) out.push_back(n);
  return out;
}

std::optional<std::size_t> Dataset::seen_index(ClassId id) const {
  auto it = std::lower_bound(seen.begin(), seen.end(), id);
  if (it == seen.end() || *it != id) return std::nullopt;
  return static_cast<std::size_t>(it - seen.begin());
}

std::optional<std::size_t> Dataset::unseen_index(ClassId id) const {
  auto it = std::lower_bound(unseen.begin(), unseen.end(), id);
  if (it == unseen.end() || *it != id) return std::nullopt;
  return static_cast<std::size_t>(it - unseen.begin());
}

void Dataset::validate() const {
  require(features.rows() >= 1 && features.cols() >= 1, "dataset needs at least one sample and one feature");
  require(!seen.empty(), "dataset needs at least one seen class");
  require(!unseen.empty(), "dataset needs at least one unseen class");
  require(std::is_sorted(seen.begin(), seen.end()) && std::is_sorted(unseen.begin(), unseen.end()),
          "class splits must be sorted");
  for (auto id : seen) require(!unseen_index(id), "class " + std::to_string(id) + " is both seen and unseen");
  require(static_cast<Eigen::Index>(labels.size()) == features.rows(),
          "dimension mismatch: " + std::to_string(labels.size()) + " labels for " +
              std::to_string(features.rows()) + " feature rows");
  for (auto label : labels) {
    if (label == kHiddenLabel) continue;
    require(seen_index(label).has_value(), "unknown class " + std::to_string(label) + " (training labels must be seen)");
  }
  if (has_truth()) {
    require(true_labels.size() == labels.size(), "dimension mismatch between labels and true labels");
    for (std::size_t n = 0; n < labels.size(); ++n) {
      if (labels[n] == kHiddenLabel) {
        require(unseen_index(true_labels[n]).has_value(),
                "true label " + std::to_string(true_labels[n]) + " of a test sample is not an unseen class");
      } else {
        require(true_labels[n] == labels[n], "true label disagrees with training label at row " + std::to_string(n));
      }
    }
  }
  const auto classes = seen.size() + unseen.size();
  for (const auto& [name, table] : semantic) {
    require(static_cast<std::size_t>(table.rows()) == classes, "embedding row count mismatch for source " + name);
    require(table.cols() >= 1, "empty embedding for source " + name);
  }
}

void write_binary_features(const fs::path& dir, const Matrix& features) {
  std::ofstream out(dir / "features.bin", std::ios::binary | std::ios::trunc);
  if (!out) fail("cannot write file: " + (dir / "features.bin").string());
  for (Eigen::Index i = 0; i < features.size(); ++i) {
    auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(features.data()[i]));
    unsigned char bytes[4];
    for (int b = 0; b < 4; ++b) bytes[b] = static_cast<unsigned char>(bits >> (8 * b));
    out.write(reinterpret_cast<const char*>(bytes), 4);
  }
  csv::write_text(dir / "shape.txt", std::to_string(features.rows()) + " " + std::to_string(features.cols()) + "\n");
}

Matrix read_binary_features(const fs::path& dir) {
  std::istringstream shape(csv::read_text(dir / "shape.txt"));
  long long rows = -1, cols = -1;
  shape >> rows >> cols;
  if (!shape || rows < 0 || cols < 0) fail("malformed shape.txt in " + dir.string());
  const std::string raw = csv::read_text(dir / "features.bin");
  const auto expected = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) * 4;
  if (raw.size() != expected) {
    fail("dimension mismatch: features.bin holds " + std::to_string(raw.size()) + " bytes, shape.txt implies " +
         std::to_string(expected));
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b)
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(raw[static_cast<std::size_t>(4 * i + b)])) << (8 * b);
    m.data()[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
  return m;
}

Dataset load_dataset(const fs::path& dir, const IngestConfig& config) {
  if (!fs::is_directory(dir)) fail("missing dataset directory: " + dir.string());

  Dataset ds;
  const auto splits = read_splits(dir / "splits.csv");
  ds.seen = sorted_unique(splits.seen, "seen");
  ds.unseen = sorted_unique(splits.unseen, "unseen");

  const bool have_csv = fs::exists(dir / "features.csv");
  const bool have_bin = fs::exists(dir / "features.bin");
  if (have_bin && (config.prefer_binary || !have_csv)) {
    ds.features = read_binary_features(dir);
  } else {
    ds.features = csv::read_matrix(dir / "features.csv");
  }

  const auto raw_labels = csv::read_id_column(dir / "labels.csv");
  if (static_cast<Eigen::Index>(raw_labels.size()) != ds.features.rows()) {
    fail("dimension mismatch: labels.csv has " + std::to_string(raw_labels.size()) + " rows, features have " +
         std::to_string(ds.features.rows()));
  }

  // Unseen ids in labels.csv are treated as test samples with known truth.
  std::vector<ClassId> implicit_truth(raw_labels.size(), kHiddenLabel);
  bool every_test_has_truth = true;
  ds.labels.resize(raw_labels.size());
  for (std::size_t n = 0; n < raw_labels.size(); ++n) {
    const auto id = raw_labels[n];
    if (id == kHiddenLabel) {
      ds.labels[n] = kHiddenLabel;
      every_test_has_truth = false;
    } else if (ds.seen_index(id)) {
      ds.labels[n] = id;
      implicit_truth[n] = id;
    } else if (ds.unseen_index(id)) {
      ds.labels[n] = kHiddenLabel;
      implicit_truth[n] = id;
    } else {
      fail("unknown class " + std::to_string(id) + " in " + (dir / "labels.csv").string());
    }
  }

  const auto truth_path = dir / "labels_true.csv";
  if (fs::exists(truth_path)) {
    ds.true_labels = csv::read_id_column(truth_path);
    if (ds.true_labels.size() != raw_labels.size()) {
      fail("dimension mismatch: labels_true.csv has " + std::to_string(ds.true_labels.size()) + " rows, expected " +
           std::to_string(raw_labels.size()));
    }
    for (auto id : ds.true_labels) {
      if (!ds.seen_index(id) && !ds.unseen_index(id)) fail("unknown class " + std::to_string(id) + " in " + truth_path.string());
    }
  } else if (every_test_has_truth) {
    ds.true_labels = implicit_truth;
  }

  std::vector<ClassId> order = ds.seen;
  order.insert(order.end(), ds.unseen.begin(), ds.unseen.end());

  const auto semantic_dir = dir / "semantic";
  if (!config.sources.empty()) {
    for (const auto& name : config.sources) {
      const auto path = semantic_dir / (name + ".csv");
      if (!fs::exists(path)) fail("missing file: " + path.string());
      ds.semantic[name] = read_semantic_table(path, order);
    }
  } else if (fs::is_directory(semantic_dir)) {
    for (const auto& entry : fs::directory_iterator(semantic_dir)) {
      if (entry.path().extension() != ".csv") continue;
      ds.semantic[source_name(entry.path())] = read_semantic_table(entry.path(), order);
    }
  }

  ds.validate();
  return ds;
}

void save_dataset(const fs::path& dir, const Dataset& ds) {
  ds.validate();
  fs::create_directories(dir / "semantic");
  csv::write_matrix(dir / "features.csv", ds.features);
  csv::write_id_column(dir / "labels.csv", ds.labels);
  if (ds.has_truth()) csv::write_id_column(dir / "labels_true.csv", ds.true_labels);

  const auto join = [](const std::vector<ClassId>& ids) {
    std::string s;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i) s += ',';
      s += std::to_string(ids[i]);
    }
    return s;
  };
  csv::write_text(dir / "splits.csv", "seen: " + join(ds.seen) + "\nunseen: " + join(ds.unseen) + "\n");

  std::vector<ClassId> order = ds.seen;
  order.insert(order.end(), ds.unseen.begin(), ds.unseen.end());
  for (const auto& [name, table] : ds.semantic) {
    std::string out;
    for (Eigen::Index r = 0; r < table.rows(); ++r) {
      out += std::to_string(order[static_cast<std::size_t>(r)]);
      for (Eigen::Index c = 0; c < table.cols(); ++c) {
        out += ',';
        out += csv::format(table(r, c));
      }
      out += '\n';
    }
    csv::write_text(dir / "semantic" / (name + ".csv"), out);
  }
}

std::size_t ClassPrototypes::num_present() const {
  return static_cast<std::size_t>(std::count(present.begin(), present.end(), 1));
}

ClassPrototypes class_prototypes(const Matrix& features, std::span<const std::ptrdiff_t> assignment,
                                 std::span<const ClassId> classes) {
  ClassPrototypes out;
  out.space = SpaceKind::image;
  out.classes.assign(classes.begin(), classes.end());
  std::vector<std::size_t> counts;
  kernels::class_sums(features, assignment, static_cast<Eigen::Index>(classes.size()), out.vectors, counts);
  out.present.assign(classes.size(), 0);
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (counts[c] == 0) continue;
    out.present[c] = 1;
    out.vectors.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(counts[c]);
  }
  return out;
}

ClassPrototypes semantic_prototypes(const Dataset& dataset, const std::string& source,
                                    std::span<const ClassId> classes) {
  auto it = dataset.semantic.find(source);
  if (it == dataset.semantic.end()) fail("unknown source name: " + source);
  ClassPrototypes out;
  out.space = SpaceKind::semantic;
  out.source = source;
  out.classes.assign(classes.begin(), classes.end());
  out.vectors.resize(static_cast<Eigen::Index>(classes.size()), it->second.cols());
  out.present.assign(classes.size(), 1);
  const auto S = dataset.num_seen();
  for (std::size_t i = 0; i < classes.size(); ++i) {
    std::size_t row = 0;
    if (auto s = dataset.seen_index(classes[i])) {
      row = *s;
    } else if (auto u = dataset.unseen_index(classes[i])) {
      row = S + *u;
    } else {
      fail("unknown class " + std::to_string(classes[i]));
    }
    out.vectors.row(static_cast<Eigen::Index>(i)) = it->second.row(static_cast<Eigen::Index>(row));
  }
  return out;
}

}  // namespace sp
