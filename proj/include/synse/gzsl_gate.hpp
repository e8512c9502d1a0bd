#pragma once

// Confidence-gated generalized zero-shot prediction.
//
// The gate is a binary logistic regression on the top-k temperature-scaled
// seen-classifier probabilities concatenated with the top-k unseen-classifier
// probabilities. It outputs g = p(seen | features). Hard mode routes the sample
// to the seen classifier when g >= threshold and to the unseen classifier
// otherwise; soft mode mixes the two distributions with weights (g, 1 - g).

#include <filesystem>
#include <string>
#include <vector>

#include "synse/zsl_head.hpp"

namespace synse {

enum class GateMode { Hard, Soft };

std::string to_string(GateMode mode);
GateMode gate_mode_from_string(const std::string& s);

struct GateFeatures {
  Vector values;  // length 2k: top-k seen, descending, then top-k unseen, descending
};

struct GateModel {
  double temperature = 1.0;
  std::size_t k = 1;
  Vector weight;  // length 2k
  double bias = 0.0;
  double threshold = 0.5;
  GateMode mode = GateMode::Hard;
  double regularization = 1.0;  // C

  double seen_probability(const GateFeatures& f) const;
  void validate() const;
  void save(const std::filesystem::path& path) const;
  static GateModel load(const std::filesystem::path& path);
};

Vector temperature_scale(std::span<const double> logits, double temperature);

GateFeatures build_gate_features(std::span<const double> c_s, std::span<const double> c_u,
                                 std::size_t k);

struct LogisticFit {
  Vector weight;
  double bias = 0.0;
  std::size_t iterations = 0;
};

// L2-regularized logistic regression, label 1 = seen:
//   minimize 0.5 * ||w||^2 + C * sum_i log(1 + exp(-y_i (w.x_i + b)))
// with an unpenalized intercept, solved by damped Newton iterations.
LogisticFit train_gate(const std::vector<GateFeatures>& seen_examples,
                       const std::vector<GateFeatures>& unseen_examples,
                       double regularization = 1.0);

// Raw classifier outputs for one sample, before any temperature or gating.
struct GateInput {
  Vector seen_logits;
  Vector unseen_probabilities;
  ClassId label = 0;
  bool is_seen = true;
};

struct GzslDecision {
  ClassId label = 0;
  double gate_seen = 0.0;
  Vector distribution;  // over seen classes (seen classifier order) then unseen
};

GzslDecision gzsl_combine(const GateInput& input, const GateModel& gate,
                          const std::vector<ClassId>& seen_ids,
                          const std::vector<ClassId>& unseen_ids);

// Runs both classifiers on visual features.
std::vector<GateInput> make_gate_inputs(const Matrix& x_s, const std::vector<ClassId>& labels,
                                        bool is_seen, const SoftmaxClassifier& seen_classifier,
                                        const AlignedModel& model,
                                        const SoftmaxClassifier& zsl_classifier);

std::vector<GzslDecision> gzsl_predict(const Matrix& x_s, const SoftmaxClassifier& seen_classifier,
                                       const AlignedModel& model,
                                       const SoftmaxClassifier& zsl_classifier,
                                       const GateModel& gate);

// Pseudo visual features for unseen classes: z_l drawn from the PoS encoders,
// decoded through the skeleton decoder. Used as the unseen side of gate
// training and validation, since no real unseen sample may be touched.
LabeledFeatureSet synthesize_unseen_visuals(const AlignedModel& model,
                                            const PosEmbeddingTable& table,
                                            const std::vector<ClassId>& unseen_ids,
                                            std::size_t per_class_count, std::uint64_t seed);

struct GateTuning {
  std::vector<double> temperatures{1, 2, 3, 5, 10};
  std::vector<double> thresholds{0.30, 0.35, 0.40, 0.45, 0.50, 0.55, 0.60, 0.65, 0.70};
  std::size_t k = 0;  // 0 -> number of unseen classes
  double regularization = 1.0;
  GateMode mode = GateMode::Hard;
};

struct TunedGate {
  GateModel gate;
  double validation_harmonic = 0.0;
};

// For each temperature, fits the gate on `train`, then scores every threshold
// on `validation` by harmonic mean of per-class seen/unseen accuracy. Ties go
// to the smallest temperature, then the smallest threshold.
TunedGate tune_gate(const std::vector<GateInput>& train, const std::vector<GateInput>& validation,
                    const std::vector<ClassId>& seen_ids, const std::vector<ClassId>& unseen_ids,
                    const GateTuning& tuning);

// Harmonic mean of a fixed gate on labelled inputs.
double gate_harmonic_mean(const std::vector<GateInput>& inputs, const GateModel& gate,
                          const std::vector<ClassId>& seen_ids,
                          const std::vector<ClassId>& unseen_ids);

}  // namespace synse
