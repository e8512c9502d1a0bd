#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "synse/feature_store.hpp"

namespace synse {

// Mean over `classes` of each class's accuracy, in percent. Every class must
// have at least one labelled sample.
double per_class_mean_accuracy(std::span<const ClassId> predictions,
                               std::span<const ClassId> labels,
                               const std::vector<ClassId>& classes);

std::map<ClassId, double> per_class_accuracy(std::span<const ClassId> predictions,
                                             std::span<const ClassId> labels,
                                             const std::vector<ClassId>& classes);

// 2su / (s + u); zero when either input is zero.
double harmonic_mean(double s, double u);

struct MetricsReport {
  std::optional<double> zsl_accuracy;
  std::optional<double> seen_accuracy;
  std::optional<double> unseen_accuracy;
  std::optional<double> harmonic_mean;
  std::map<ClassId, double> per_class;
  std::map<std::string, std::string> notes;  // free-form run annotations

  // `key = value` lines; reals use the shortest exact round-trip form.
  std::string to_text() const;
  static MetricsReport parse(const std::string& text);

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

struct GzslPredictions {
  std::vector<ClassId> on_test_seen;
  std::vector<ClassId> on_test_unseen;
};

// ZSL accuracy over test_unseen against the unseen classes; GZSL s/u over
// test_seen/test_unseen with predictions drawn from all classes. Either part
// may be omitted.
MetricsReport assemble_report(const std::vector<ClassId>* zsl_predictions,
                              const GzslPredictions* gzsl_predictions, const SplitResult& split,
                              const SplitSpec& spec);

// Fixed-width side-by-side table of several reports.
std::string render_table(const std::vector<std::pair<std::string, MetricsReport>>& rows);

std::string format_real(double v);

}  // namespace synse
