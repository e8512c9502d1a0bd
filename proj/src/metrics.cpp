#include "synse/metrics.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace synse {

std::map<ClassId, double> per_class_accuracy(std::span<const ClassId> predictions,
                                             std::span<const ClassId> labels,
                                             const std::vector<ClassId>& classes) {
  if (predictions.size() != labels.size()) {
    throw Error(ErrorKind::Shape, "prediction count " + std::to_string(predictions.size()) +
                                      " != label count " + std::to_string(labels.size()));
  }
  std::map<ClassId, std::pair<std::size_t, std::size_t>> tally;  // correct, total
  for (auto c : classes) tally[c] = {0, 0};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto it = tally.find(labels[i]);
    if (it == tally.end()) continue;
    ++it->second.second;
    if (predictions[i] == labels[i]) ++it->second.first;
  }
  std::map<ClassId, double> out;
  for (const auto& [c, ct] : tally) {
    if (ct.second == 0) {
      throw Error(ErrorKind::Metric, "class " + std::to_string(c) + " has no test samples");
    }
    out[c] = 100.0 * static_cast<double>(ct.first) / static_cast<double>(ct.second);
  }
  return out;
}

double per_class_mean_accuracy(std::span<const ClassId> predictions,
                               std::span<const ClassId> labels,
                               const std::vector<ClassId>& classes) {
  if (classes.empty()) throw Error(ErrorKind::Metric, "empty class set");
  const auto per = per_class_accuracy(predictions, labels, classes);
  double acc = 0.0;
  for (const auto& [c, a] : per) acc += a;
  return acc / static_cast<double>(per.size());
}

double harmonic_mean(double s, double u) {
  if (s <= 0.0 || u <= 0.0) return 0.0;
  return 2.0 * s * u / (s + u);
}

std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_real(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorKind::Format, "bad real '" + s + "' in metrics report");
  }
  return v;
}

}  // namespace

std::string MetricsReport::to_text() const {
  std::string out = "# synse metrics report (percent)\n";
  auto emit = [&](const char* key, const std::optional<double>& v) {
    if (v) out += std::string(key) + " = " + format_real(*v) + "\n";
  };
  emit("zsl_accuracy", zsl_accuracy);
  emit("seen_accuracy", seen_accuracy);
  emit("unseen_accuracy", unseen_accuracy);
  emit("harmonic_mean", harmonic_mean);
  for (const auto& [c, a] : per_class) {
    out += "per_class." + std::to_string(c) + " = " + format_real(a) + "\n";
  }
  for (const auto& [k, v] : notes) out += "note." + k + " = " + v + "\n";
  return out;
}

MetricsReport MetricsReport::parse(const std::string& text) {
  MetricsReport r;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw Error(ErrorKind::Format, "bad report line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 3);
    if (key == "zsl_accuracy") {
      r.zsl_accuracy = parse_real(value);
    } else if (key == "seen_accuracy") {
      r.seen_accuracy = parse_real(value);
    } else if (key == "unseen_accuracy") {
      r.unseen_accuracy = parse_real(value);
    } else if (key == "harmonic_mean") {
      r.harmonic_mean = parse_real(value);
    } else if (key.rfind("per_class.", 0) == 0) {
      r.per_class[std::stoll(key.substr(10))] = parse_real(value);
    } else if (key.rfind("note.", 0) == 0) {
      r.notes[key.substr(5)] = value;
    } else {
      throw Error(ErrorKind::Format, "unknown report key '" + key + "'");
    }
  }
  return r;
}

MetricsReport assemble_report(const std::vector<ClassId>* zsl_predictions,
                              const GzslPredictions* gzsl, const SplitResult& split,
                              const SplitSpec& spec) {
  MetricsReport r;
  if (zsl_predictions) {
    r.zsl_accuracy = per_class_mean_accuracy(*zsl_predictions, split.test_unseen.labels,
                                             spec.unseen_ids);
  }
  if (gzsl) {
    const auto seen = per_class_accuracy(gzsl->on_test_seen, split.test_seen.labels, spec.seen_ids);
    const auto unseen =
        per_class_accuracy(gzsl->on_test_unseen, split.test_unseen.labels, spec.unseen_ids);
    r.seen_accuracy =
        per_class_mean_accuracy(gzsl->on_test_seen, split.test_seen.labels, spec.seen_ids);
    r.unseen_accuracy =
        per_class_mean_accuracy(gzsl->on_test_unseen, split.test_unseen.labels, spec.unseen_ids);
    r.harmonic_mean = harmonic_mean(*r.seen_accuracy, *r.unseen_accuracy);
    r.per_class.insert(seen.begin(), seen.end());
    r.per_class.insert(unseen.begin(), unseen.end());
  } else if (zsl_predictions) {
    r.per_class =
        per_class_accuracy(*zsl_predictions, split.test_unseen.labels, spec.unseen_ids);
  }
  return r;
}

std::string render_table(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  auto cell = [](const std::optional<double>& v) {
    char buf[32];
    if (!v) return std::string("      -");
    std::snprintf(buf, sizeof(buf), "%7.2f", *v);
    return std::string(buf);
  };
  std::size_t width = 8;
  for (const auto& [name, r] : rows) width = std::max(width, name.size());
  std::string out = std::string(width, ' ') + "      zsl       s       u       h\n";
  for (const auto& [name, r] : rows) {
    out += name + std::string(width - name.size(), ' ') + "  " + cell(r.zsl_accuracy) + " " +
           cell(r.seen_accuracy) + " " + cell(r.unseen_accuracy) + " " +
           cell(r.harmonic_mean) + "\n";
  }
  return out;
}

}  // namespace synse
