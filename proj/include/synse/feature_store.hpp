#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "synse/matrix.hpp"

namespace synse {

using ClassId = std::int64_t;

// Visual feature vectors with one class label per row. `indices` records each
// row's position in the originally loaded set so disjointness can be audited
// after partitioning.
struct LabeledFeatureSet {
  Matrix features;
  std::vector<ClassId> labels;
  std::vector<std::size_t> indices;
  std::vector<ClassId> catalog;  // sorted class ids this set may reference
  std::string source_tag;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }

  // Throws Data / Catalog errors on the first broken invariant.
  void validate() const;
  LabeledFeatureSet subset(const std::vector<std::size_t>& rows) const;
};

LabeledFeatureSet make_feature_set(Matrix features, std::vector<ClassId> labels,
                                   std::vector<ClassId> catalog, std::string source_tag);

// expected_dim == 0 accepts any width.
LabeledFeatureSet load_feature_set(const std::filesystem::path& path, std::size_t expected_dim);
void save_feature_set(const LabeledFeatureSet& set, const std::filesystem::path& path);

struct SplitSpec {
  std::vector<ClassId> seen_ids;
  std::vector<ClassId> unseen_ids;
  double gate_train_fraction = 0.05;
  double gate_val_fraction = 0.05;
  double test_seen_fraction = 0.2;
  std::uint64_t seed = 0;

  void validate() const;  // throws Split
};

struct SplitResult {
  LabeledFeatureSet train;
  LabeledFeatureSet test_unseen;
  LabeledFeatureSet test_seen;
  LabeledFeatureSet gate_train;
  LabeledFeatureSet gate_val;
};

SplitResult partition(const LabeledFeatureSet& data, const SplitSpec& spec);

struct Violation {
  std::string subset;
  std::size_t sample_index = 0;
  std::string rule;
};

std::vector<Violation> validate_zero_shot(const SplitResult& result, const SplitSpec& spec);

}  // namespace synse
