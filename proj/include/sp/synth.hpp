#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sp/data.hpp"
#include "sp/random.hpp"

namespace sp {

struct SourceSpec {
  std::string name;
  int dim = 8;
  double noise = 0.0;  // std-dev of additive embedding noise
};

// Desk-scale zero-shot instances. Unseen centroids are Gaussian in image
// space. Seen centroids are either Gaussian too or, with `seen_between_unseen`,
// a random point on the segment between two random unseen centroids plus a
// Gaussian offset. Samples are centroid plus isotropic noise, and each
// semantic source embeds a class as a fixed random linear map of its centroid
// plus noise.
struct SynthParams {
  int seen = 12;
  int unseen = 4;
  int dim = 16;
  int train_per_class = 20;
  int test_per_class = 20;
  double centroid_scale = 1.0;
  double image_noise = 0.3;
  bool seen_between_unseen = true;
  double seen_offset = 0.1;  // std-dev of the offset added to mixed seen centroids
  std::vector<SourceSpec> sources{{"att", 8, 0.0}};
  std::uint64_t seed = kDefaultSeed;
  ClassId first_class_id = 1;

  void validate() const;
};

Dataset generate_synthetic(const SynthParams& params);

// Writes the dataset layout plus manifest.json recording the generator parameters.
void write_synthetic(const std::filesystem::path& dir, const SynthParams& params);

nlohmann::ordered_json to_json(const SynthParams& params);
SynthParams synth_params_from_json(const nlohmann::json& j);

}  // namespace sp
