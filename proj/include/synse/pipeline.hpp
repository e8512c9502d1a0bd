#pragma once

// End-to-end orchestration shared by the CLI and the acceptance harness.

#include <string>
#include <vector>

#include "synse/config.hpp"
#include "synse/metrics.hpp"

namespace synse {

struct PreparedData {
  LabeledFeatureSet data;
  PosEmbeddingTable table;
  SplitSpec split;
  SplitResult parts;
};

// Loads or generates the data, builds the PoS table and partitions it.
PreparedData prepare_data(const RunConfig& config);

AlignedModel train_stage(const RunConfig& config, const PreparedData& data,
                         const TrainOptions& options = {});

struct ZslOutcome {
  LatentSampleSet latents;
  SoftmaxClassifier classifier;
  std::vector<ClassId> predictions;  // over parts.test_unseen
  MetricsReport report;
};

ZslOutcome run_zsl(const RunConfig& config, const PreparedData& data, const AlignedModel& model);

// Stand-in seen classifier: softmax over seen classes on raw visual features.
SoftmaxClassifier train_seen_classifier(const RunConfig& config, const PreparedData& data);

struct GzslOutcome {
  GzslPredictions predictions;
  MetricsReport report;
  std::optional<TunedGate> gate;              // absent for the gate-off path
  std::optional<SoftmaxClassifier> joint;     // present only for the gate-off path
};

// Runs GZSL with config.gate settings. The seen classifier is trained when
// not supplied.
GzslOutcome run_gzsl(const RunConfig& config, const PreparedData& data, const AlignedModel& model,
                     const ZslOutcome& zsl, const SoftmaxClassifier* seen_classifier = nullptr);

struct PipelineResult {
  AlignedModel model;
  ZslOutcome zsl;
  SoftmaxClassifier seen_classifier;
  GzslOutcome gzsl;
  MetricsReport report;  // ZSL accuracy plus GZSL s, u, h
};

PipelineResult run_pipeline(const RunConfig& config, const TrainOptions& options = {});

// Merges the ZSL accuracy and the GZSL fields into one report.
MetricsReport combine_reports(const MetricsReport& zsl, const MetricsReport& gzsl);

inline const std::vector<std::string>& ablation_ids() {
  static const std::vector<std::string> ids{"softgating", "no-temp", "gate-off", "embedding-dims",
                                            "sample-count"};
  return ids;
}

// Runs the named variant(s) next to the default and returns one labelled row
// per run. Throws Usage for an unknown id.
std::vector<std::pair<std::string, MetricsReport>> run_ablation(const RunConfig& config,
                                                                 const std::string& which);

}  // namespace synse
