#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "synse/alignment.hpp"

namespace synse {

struct LatentSampleSet {
  Matrix latents;
  std::vector<ClassId> labels;
  std::size_t per_class_count = 0;
};

// Single affine layer + softmax over an ordered class list.
struct SoftmaxClassifier {
  Matrix weight;  // input width x class count
  Vector bias;
  std::vector<ClassId> class_ids;

  std::size_t input_dim() const { return weight.rows(); }
  std::size_t num_classes() const { return class_ids.size(); }

  Matrix logits(const Matrix& x) const;
  Matrix probabilities(const Matrix& x) const;
  std::vector<ClassId> predict(const Matrix& x) const;
  std::size_t column_of(ClassId id) const;

  void validate() const;
  void save(const std::filesystem::path& path) const;
  static SoftmaxClassifier load(const std::filesystem::path& path);

  friend bool operator==(const SoftmaxClassifier&, const SoftmaxClassifier&) = default;
};

// Row-wise softmax; stable under large logits.
Matrix softmax_rows(const Matrix& logits);
// Lowest index wins ties.
std::size_t argmax(std::span<const double> v);

struct SoftmaxTrainConfig {
  std::size_t epochs = 300;
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
};

// Draws per_class_count reparameterized z_l = [z_v | z_n] rows per class.
// Passing zero_noise collapses every draw to [mu_v | mu_n].
LatentSampleSet generate_unseen_latents(const AlignedModel& model, const PosEmbeddingTable& table,
                                        const std::vector<ClassId>& unseen_ids,
                                        std::size_t per_class_count, std::uint64_t seed,
                                        bool zero_noise = false);

SoftmaxClassifier initialize_softmax(std::size_t input_dim, std::vector<ClassId> class_ids,
                                     std::uint64_t seed);
// Output columns follow ascending class id.
SoftmaxClassifier train_softmax(const Matrix& inputs, const std::vector<ClassId>& labels,
                                const SoftmaxTrainConfig& config);
SoftmaxClassifier train_softmax(const LatentSampleSet& samples, const SoftmaxTrainConfig& config);

// Mean visual latent mu_s of each row; no sampling.
Matrix visual_latent_means(const AlignedModel& model, const Matrix& x_s);
std::vector<ClassId> zsl_predict(const AlignedModel& model, const SoftmaxClassifier& classifier,
                                 const Matrix& x_s);

// Gate-free ablation: one classifier over seen and unseen classes trained on
// sampled visual latents of real seen data plus generated unseen latents. Each
// seen class contributes seen_per_class encoder samples drawn from its rows
// with replacement (0 -> the unseen per-class count, so classes are balanced).
SoftmaxClassifier train_joint_classifier(const AlignedModel& model,
                                         const LabeledFeatureSet& seen_data,
                                         const LatentSampleSet& unseen_latents,
                                         const SoftmaxTrainConfig& config,
                                         std::size_t seen_per_class = 0);

}  // namespace synse
