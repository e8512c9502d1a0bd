#pragma once

// Run configuration: one JSON document with a versioned schema. Exactly one
// data source is present: either `dataset` (files on disk) or `synth` (the
// generated compositional benchmark). Every stage seed is derived from the
// global seed.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "synse/alignment.hpp"
#include "synse/gzsl_gate.hpp"
#include "synse/synth_bench.hpp"
#include "synse/zsl_head.hpp"

namespace synse {

inline constexpr int kSchemaVersion = 1;

struct DatasetPaths {
  std::filesystem::path features;
  // Either a prebuilt PoS embedding table, or word vectors plus class names
  // and a lexicon from which the table is built.
  std::filesystem::path pos_embeddings;
  std::filesystem::path word_vectors;
  std::filesystem::path class_names;
  std::filesystem::path lexicon;
  std::filesystem::path fill_table;  // empty -> the built-in completions
  std::vector<ClassId> unseen_ids;

  friend bool operator==(const DatasetPaths&, const DatasetPaths&) = default;
};

enum class GateChoice { Hard, Soft, Off };
std::string to_string(GateChoice g);
GateChoice gate_choice_from_string(const std::string& s);  // throws Config

struct GateSettings {
  GateChoice mode = GateChoice::Hard;
  bool temperature_scaling = true;
  std::vector<double> temperatures{1, 2, 3, 5, 10};
  std::vector<double> thresholds{0.30, 0.35, 0.40, 0.45, 0.50, 0.55, 0.60, 0.65, 0.70};
  std::size_t k = 0;  // 0 -> number of unseen classes
  double regularization = 1.0;
  // Pseudo visual samples per unseen class for gate training and validation;
  // 0 -> match the number of seen examples on that side.
  std::size_t synthetic_per_class = 0;

  friend bool operator==(const GateSettings&, const GateSettings&) = default;
};

struct ClassifierSettings {
  std::size_t epochs = 300;
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;

  friend bool operator==(const ClassifierSettings&, const ClassifierSettings&) = default;
};

struct RunConfig {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 0;
  std::optional<DatasetPaths> dataset;
  std::optional<SynthSpec> synth;
  double gate_train_fraction = 0.05;
  double gate_val_fraction = 0.05;
  double test_seen_fraction = 0.2;
  TrainConfig train;
  std::size_t zsl_per_class = 500;
  ClassifierSettings zsl_classifier;
  ClassifierSettings seen_classifier;
  GateSettings gate;
  std::filesystem::path output_dir = "synse_out";

  // Throws Config errors naming the offending field path. With check_files,
  // every referenced dataset file must exist.
  void validate(bool check_files = true) const;

  std::uint64_t split_seed() const;
  std::uint64_t train_seed() const;
  std::uint64_t latent_seed() const;
  std::uint64_t zsl_classifier_seed() const;
  std::uint64_t seen_classifier_seed() const;
  std::uint64_t gate_seed() const;

  // TrainConfig with the derived seed applied.
  TrainConfig effective_train_config() const;
  SoftmaxTrainConfig zsl_train_config() const;
  SoftmaxTrainConfig seen_train_config() const;
  GateTuning gate_tuning() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// Parses and validates the schema; unknown keys are rejected. Relative dataset
// paths resolve against `base_dir` and are stored as absolute paths.
RunConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const RunConfig& config);
void save_config(const RunConfig& config, const std::filesystem::path& path);

// SYNSE_SEED and SYNSE_OUT override the seed and output directory.
void apply_environment(RunConfig& config);

// FNV-1a over the canonical serialization with output_dir removed.
std::uint64_t config_hash(const RunConfig& config);
std::string hex64(std::uint64_t v);
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

// Synthetic-benchmark run with the default SynthSpec and a compressed anneal
// schedule sized for a single CPU core.
RunConfig default_synthetic_config(std::uint64_t seed = 0);

}  // namespace synse
