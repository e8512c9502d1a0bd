#pragma once

// Compositional verb x noun benchmark. Each class is a (verb, noun) pair; its
// PoS embeddings are the verb and noun base vectors and its visual features
// are a fixed linear map of [verb base | noun base] plus isotropic Gaussian
// noise. Unseen classes are novel pairings of individually seen words.

#include <cstdint>
#include <utility>
#include <vector>

#include "synse/feature_store.hpp"
#include "synse/text_pipeline.hpp"

namespace synse {

struct SynthSpec {
  std::size_t num_verbs = 4;
  std::size_t num_nouns = 5;
  std::size_t visual_dim = 64;
  std::size_t embed_dim = 32;
  std::size_t samples_per_class = 200;
  double noise_std = 0.1;
  // Standard deviation of the entries of the visual mixing map A.
  double mixing_std = 0.3;
  std::vector<std::pair<std::size_t, std::size_t>> unseen_pairs{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
  std::uint64_t seed = 0;

  void validate() const;  // throws Spec
  ClassId class_of(std::size_t verb, std::size_t noun) const {
    return static_cast<ClassId>(verb * num_nouns + noun);
  }

  friend bool operator==(const SynthSpec&, const SynthSpec&) = default;
};

struct SynthDataset {
  LabeledFeatureSet data;
  PosEmbeddingTable table;
  SplitSpec split;
  std::vector<ClassDescription> descriptions;
  std::vector<std::pair<ClassId, std::string>> class_names;
  WordVectors word_vectors;
  PosLexicon lexicon;
  Matrix mixing;       // visual_dim x 2*embed_dim
  Matrix class_means;  // true generative mean per class, row = class id
};

SynthDataset generate(const SynthSpec& spec);

enum class OracleScope { UnseenCandidates, AllClasses };

// Nearest-true-mean classification of every unseen-class sample; returns the
// class-balanced accuracy in percent. AllClasses searches every class mean;
// UnseenCandidates restricts the search to the unseen classes, which is the
// Bayes-optimal reference for the zero-shot task under isotropic noise.
double oracle_ceiling(const SynthDataset& dataset, const SynthSpec& spec,
                      OracleScope scope = OracleScope::AllClasses);

}  // namespace synse
