#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "synse/feature_store.hpp"
#include "synse/generative_core.hpp"
#include "synse/text_pipeline.hpp"

namespace synse {

// Cyclic KL annealing with a delayed, constant cross-modal weight. Within each
// cycle beta ramps linearly from zero once beta_start_epoch is reached and
// alpha switches on at alpha_start_epoch.
struct AnnealSchedule {
  std::int64_t cycle_length_epochs = 1700;
  std::int64_t beta_start_epoch = 1000;
  double beta_rate_per_epoch = 0.0021;
  std::int64_t alpha_start_epoch = 1400;
  double alpha_value = 1.0;
  std::int64_t num_cycles = 2;

  static AnnealSchedule ntu60();
  static AnnealSchedule ntu120();
  std::int64_t total_epochs() const { return num_cycles * cycle_length_epochs; }
  void validate() const;  // throws Parameter

  friend bool operator==(const AnnealSchedule&, const AnnealSchedule&) = default;
};

struct AnnealCoefficients {
  double beta = 0.0;
  double alpha = 0.0;
};

AnnealCoefficients anneal_coefficients(std::int64_t global_epoch, const AnnealSchedule& schedule);

struct LatentDims {
  std::size_t skeleton = 100;
  std::size_t pos = 50;

  friend bool operator==(const LatentDims&, const LatentDims&) = default;
};

struct TrainConfig {
  double learning_rate = 1e-4;
  std::size_t batch_size = 64;
  AnnealSchedule schedule;
  LatentDims latent_dims;
  std::uint64_t seed = 0;

  void validate() const;  // throws Parameter

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct EpochRecord {
  std::int64_t epoch = 0;
  double beta = 0.0;
  double alpha = 0.0;
  double total_loss = 0.0;
  double vae_loss = 0.0;
  double cmr_loss = 0.0;
};

struct AlignedModel {
  VaePair vae_s;
  VaePair vae_v;
  VaePair vae_n;
  TrainConfig config;
  std::int64_t trained_epochs = 0;
  std::vector<EpochRecord> trajectory;

  static AlignedModel initialize(std::size_t visual_dim, std::size_t embed_dim,
                                 const TrainConfig& config);
  // Geometry: width(z_l) == width(z_s) and the skeleton latent splits evenly.
  void validate() const;

  void save(const std::filesystem::path& path) const;
  static AlignedModel load(const std::filesystem::path& path);
};

Matrix concat_pos_latents(const Matrix& z_v, const Matrix& z_n);
std::pair<Matrix, Matrix> split_skeleton_latent(const Matrix& z_s);

struct AlignmentBatch {
  Matrix x_s;
  Matrix e_v;
  Matrix e_n;
};

struct AlignmentNoise {
  Matrix s;
  Matrix v;
  Matrix n;
};

// Mean over the batch of the sum of the three unsquared residual norms:
// ||x_s - D_s(z_l)|| + ||e_v - D_v(z_sv)|| + ||e_n - D_n(z_sn)||.
double cross_modal_loss(const Matrix& x_s, const Matrix& e_v, const Matrix& e_n,
                        const Matrix& z_l, const Matrix& z_sv, const Matrix& z_sn,
                        const AlignedModel& model);

double total_loss(double vae_terms, double cmr_term, double alpha);

// Added under the square root of each residual norm so the gradient stays
// finite at an exact reconstruction.
inline constexpr double kNormEpsilon = 1e-12;

struct ObjectiveWeights {
  double vae = 1.0;  // multiplier on the summed per-modality VAE losses
  double beta = 0.0;
  double alpha = 0.0;
};

struct ObjectiveValue {
  double vae = 0.0;  // sum of the three vae_loss terms (unweighted)
  double cmr = 0.0;  // cross_modal_loss (unweighted)
  double total = 0.0;
};

struct ModelGradient {
  VaeGradient s;
  VaeGradient v;
  VaeGradient n;
};

// Evaluates weights.vae * sum_m vae_loss_m + weights.alpha * cmr for one batch
// and, when `grad` is non-null, its gradient with respect to every parameter.
// The cross-modal path is skipped entirely when alpha == 0.
ObjectiveValue evaluate_objective(const AlignedModel& model, const AlignmentBatch& batch,
                                  const AlignmentNoise& noise, const ObjectiveWeights& weights,
                                  ModelGradient* grad);

struct TrainOptions {
  // Called once per finished epoch; returning false stops training early.
  std::function<bool(const EpochRecord&)> on_epoch;
};

// Mini-batch Adam on the total objective over num_cycles * cycle_length epochs.
// Each sample's language inputs are its class's (e_v, e_n). Deterministic for a
// fixed config seed: batch order and the three modalities' noise draws each
// come from their own seeded stream.
AlignedModel train(AlignedModel model, const LabeledFeatureSet& train_data,
                   const PosEmbeddingTable& embeddings, const TrainOptions& options = {});

// Trains one VAE on its own with the exact batch order and noise stream that
// train() would use for that modality.
VaePair train_single_vae(VaePair vae, const Matrix& per_sample_inputs, const TrainConfig& config);

}  // namespace synse
