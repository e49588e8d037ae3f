#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sp/core.hpp"

namespace sp {

// A labeled image-feature collection with its class partition and per-class
// semantic embeddings.
//
// Class order is canonical: seen and unseen ids are each sorted ascending, and
// every semantic table stores its rows as [seen..., unseen...] in that order.
// Test samples carry kHiddenLabel in `labels`; their ground truth (when
// known) lives in `true_labels` and must only ever reach evaluation code.
struct Dataset {
  Matrix features;                      // N x D
  std::vector<ClassId> labels;          // N; seen class id or kHiddenLabel
  std::vector<ClassId> true_labels;     // empty, or N entries
  std::vector<ClassId> seen;            // S, sorted
  std::vector<ClassId> unseen;          // U, sorted
  std::map<std::string, Matrix> semantic;  // (S+U) x D_src

  std::size_t num_samples() const { return labels.size(); }
  std::size_t num_seen() const { return seen.size(); }
  std::size_t num_unseen() const { return unseen.size(); }
  Eigen::Index dim() const { return features.cols(); }

  bool has_truth() const { return !true_labels.empty(); }

  std::vector<std::size_t> train_indices() const;
  std::vector<std::size_t> test_indices() const;

  // Dense index of a seen class (position in `seen`), or nullopt.
  std::optional<std::size_t> seen_index(ClassId id) const;
  std::optional<std::size_t> unseen_index(ClassId id) const;

  // Throws Error describing the first violated invariant.
  void validate() const;

  // Exact equality of every field, including matrix shapes.
  friend bool operator==(const Dataset& a, const Dataset& b);
};

struct IngestConfig {
  // Semantic sources to load; empty loads every table under semantic/.
  std::vector<std::string> sources;
  // Prefer features.bin + shape.txt over features.csv when both exist.
  bool prefer_binary = false;
};

Dataset load_dataset(const std::filesystem::path& dir, const IngestConfig& config = {});

// Writes the directory layout read by load_dataset (CSV features).
void save_dataset(const std::filesystem::path& dir, const Dataset& dataset);

// Little-endian float32 features plus "N D" in shape.txt.
void write_binary_features(const std::filesystem::path& dir, const Matrix& features);
Matrix read_binary_features(const std::filesystem::path& dir);

enum class SpaceKind { semantic, image };

struct ClassPrototypes {
  SpaceKind space = SpaceKind::image;
  std::string source;             // semantic source name; empty for image
  std::vector<ClassId> classes;
  Matrix vectors;                 // |classes| x dim; zero rows where absent
  std::vector<char> present;      // 1 where the class has a prototype

  std::size_t num_present() const;
};

// Mean of the rows assigned to each class. `assignment[n]` is a position in
// `classes` or -1 to exclude the sample. Sums run in ascending sample order,
// so recomputation is bitwise reproducible.
ClassPrototypes class_prototypes(const Matrix& features, std::span<const std::ptrdiff_t> assignment,
                                 std::span<const ClassId> classes);

// Semantic embeddings for the given classes (all present).
ClassPrototypes semantic_prototypes(const Dataset& dataset, const std::string& source,
                                    std::span<const ClassId> classes);

}  // namespace sp
