#include "synse/gzsl_gate.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "synse/container.hpp"
#include "synse/metrics.hpp"

namespace synse {

namespace {

double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }
double sigmoid(double t) {
  return t >= 0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

struct LogisticProblem {
  Eigen::MatrixXd x;  // n x (d + 1), last column = 1
  Eigen::VectorXd y;  // +-1
  double c = 1.0;

  double objective(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd m = x * theta;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < m.size(); ++i) loss += softplus(-y[i] * m[i]);
    const auto w = theta.head(theta.size() - 1);
    return 0.5 * w.squaredNorm() + c * loss;
  }
};

}  // namespace

std::string to_string(GateMode mode) { return mode == GateMode::Hard ? "hard" : "soft"; }

GateMode gate_mode_from_string(const std::string& s) {
  if (s == "hard") return GateMode::Hard;
  if (s == "soft") return GateMode::Soft;
  throw Error(ErrorKind::Parameter, "unknown gate mode '" + s + "'");
}

double GateModel::seen_probability(const GateFeatures& f) const {
  require_shape(f.values.size() == weight.size(), "gate feature width mismatch");
  double t = bias;
  for (std::size_t i = 0; i < weight.size(); ++i) t += weight[i] * f.values[i];
  return sigmoid(t);
}

void GateModel::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorKind::Parameter, "gate temperature must be finite and positive");
  }
  if (k < 1) throw Error(ErrorKind::Parameter, "gate k must be >= 1");
  require_shape(weight.size() == 2 * k, "gate weight must have 2k entries");
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorKind::Parameter, "gate threshold must lie in (0, 1)");
  }
}

void GateModel::save(const std::filesystem::path& path) const {
  Container c;
  c.set("kind", "gate_model");
  c.set("byte_order", "little-endian");
  c.set("k", std::to_string(k));
  c.set("mode", to_string(mode));
  c.set("T", format_real(temperature));
  c.set("threshold", format_real(threshold));
  c.set("C", format_real(regularization));
  Vector params = weight;
  params.push_back(bias);
  params.push_back(temperature);
  params.push_back(threshold);
  params.push_back(regularization);
  c.add_array("params", ElementType::F64, Matrix(1, params.size(), params));
  c.save(path);
}

GateModel GateModel::load(const std::filesystem::path& path) {
  const Container c = Container::load(path);
  if (c.get("kind") != "gate_model") {
    throw Error(ErrorKind::Format, path.string() + ": not a gate checkpoint");
  }
  GateModel g;
  g.k = std::stoul(c.get("k"));
  g.mode = gate_mode_from_string(c.get("mode"));
  auto p = c.array("params").values.values();
  require_shape(p.size() == 2 * g.k + 4, path.string() + ": gate parameter count mismatch");
  g.weight.assign(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(2 * g.k));
  g.bias = p[2 * g.k];
  g.temperature = p[2 * g.k + 1];
  g.threshold = p[2 * g.k + 2];
  g.regularization = p[2 * g.k + 3];
  g.validate();
  return g;
}

Vector temperature_scale(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0)) {
    throw Error(ErrorKind::Parameter, "temperature must be > 0, got " + format_real(temperature));
  }
  Matrix l(1, logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) l(0, i) = logits[i] / temperature;
  const Matrix p = softmax_rows(l);
  return Vector(p.values().begin(), p.values().end());
}

GateFeatures build_gate_features(std::span<const double> c_s, std::span<const double> c_u,
                                 std::size_t k) {
  if (k < 1 || k > c_s.size() || k > c_u.size()) {
    throw Error(ErrorKind::Parameter, "gate k=" + std::to_string(k) +
                                          " exceeds classifier width (seen " +
                                          std::to_string(c_s.size()) + ", unseen " +
                                          std::to_string(c_u.size()) + ")");
  }
  GateFeatures f;
  f.values.reserve(2 * k);
  for (auto probs : {c_s, c_u}) {
    Vector sorted(probs.begin(), probs.end());
    std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k),
                      sorted.end(), std::greater<>());
    f.values.insert(f.values.end(), sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k));
  }
  return f;
}

LogisticFit train_gate(const std::vector<GateFeatures>& seen_examples,
                       const std::vector<GateFeatures>& unseen_examples, double regularization) {
  if (seen_examples.empty() || unseen_examples.empty()) {
    throw Error(ErrorKind::Training, "gate training needs both seen and unseen examples");
  }
  if (!(regularization > 0.0)) throw Error(ErrorKind::Parameter, "gate C must be > 0");
  const std::size_t d = seen_examples.front().values.size();
  const std::size_t n = seen_examples.size() + unseen_examples.size();
  LogisticProblem prob;
  prob.c = regularization;
  prob.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d + 1));
  prob.y.resize(static_cast<Eigen::Index>(n));
  Eigen::Index row = 0;
  for (const auto* list : {&seen_examples, &unseen_examples}) {
    const double label = list == &seen_examples ? 1.0 : -1.0;
    for (const auto& f : *list) {
      require_shape(f.values.size() == d, "gate features have inconsistent widths");
      for (std::size_t j = 0; j < d; ++j) prob.x(row, static_cast<Eigen::Index>(j)) = f.values[j];
      prob.x(row, static_cast<Eigen::Index>(d)) = 1.0;
      prob.y[row] = label;
      ++row;
    }
  }

  const auto p = static_cast<Eigen::Index>(d + 1);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
  double f = prob.objective(theta);
  std::size_t it = 0;
  for (; it < 200; ++it) {
    const Eigen::VectorXd m = prob.x * theta;
    Eigen::VectorXd coef(m.size());  // dloss/dm
    Eigen::VectorXd curv(m.size());
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double s = sigmoid(-prob.y[i] * m[i]);
      coef[i] = -prob.y[i] * s;
      curv[i] = s * (1.0 - s);
    }
    Eigen::VectorXd grad = prob.c * (prob.x.transpose() * coef);
    grad.head(p - 1) += theta.head(p - 1);
    if (grad.lpNorm<Eigen::Infinity>() < 1e-11) break;

    Eigen::MatrixXd hess = prob.c * (prob.x.transpose() * curv.asDiagonal() * prob.x);
    hess.diagonal().head(p - 1).array() += 1.0;
    hess.diagonal().array() += 1e-12;
    const Eigen::VectorXd step = hess.ldlt().solve(-grad);

    double t = 1.0;
    double f_new = prob.objective(theta + step);
    const double slope = grad.dot(step);
    while (f_new > f + 1e-4 * t * slope && t > 1e-12) {
      t *= 0.5;
      f_new = prob.objective(theta + t * step);
    }
    theta += t * step;
    if (std::abs(f - f_new) <= 1e-15 * std::max(1.0, std::abs(f))) {
      f = f_new;
      ++it;
      break;
    }
    f = f_new;
  }

  LogisticFit fit;
  fit.weight.assign(theta.data(), theta.data() + p - 1);
  fit.bias = theta[p - 1];
  fit.iterations = it;
  return fit;
}

GzslDecision gzsl_combine(const GateInput& input, const GateModel& gate,
                          const std::vector<ClassId>& seen_ids,
                          const std::vector<ClassId>& unseen_ids) {
  require_shape(input.seen_logits.size() == seen_ids.size() &&
                    input.unseen_probabilities.size() == unseen_ids.size(),
                "gzsl_combine: classifier widths disagree with class lists");
  const Vector c_s = temperature_scale(input.seen_logits, gate.temperature);
  const Vector& c_u = input.unseen_probabilities;
  GzslDecision d;
  d.gate_seen = gate.seen_probability(build_gate_features(c_s, c_u, gate.k));
  double w_seen, w_unseen;
  if (gate.mode == GateMode::Hard) {
    w_seen = d.gate_seen >= gate.threshold ? 1.0 : 0.0;
    w_unseen = 1.0 - w_seen;
  } else {
    w_seen = d.gate_seen;
    w_unseen = 1.0 - d.gate_seen;
  }
  d.distribution.reserve(c_s.size() + c_u.size());
  for (double v : c_s) d.distribution.push_back(w_seen * v);
  for (double v : c_u) d.distribution.push_back(w_unseen * v);
  const std::size_t best = argmax(d.distribution);
  d.label = best < seen_ids.size() ? seen_ids[best] : unseen_ids[best - seen_ids.size()];
  return d;
}

std::vector<GateInput> make_gate_inputs(const Matrix& x_s, const std::vector<ClassId>& labels,
                                        bool is_seen, const SoftmaxClassifier& seen_classifier,
                                        const AlignedModel& model,
                                        const SoftmaxClassifier& zsl_classifier) {
  require_shape(x_s.rows() == labels.size(), "make_gate_inputs: rows != labels");
  const Matrix seen_logits = seen_classifier.logits(x_s);
  const Matrix unseen_probs = zsl_classifier.probabilities(visual_latent_means(model, x_s));
  std::vector<GateInput> out(x_s.rows());
  for (std::size_t r = 0; r < x_s.rows(); ++r) {
    out[r].seen_logits.assign(seen_logits.row(r).begin(), seen_logits.row(r).end());
    out[r].unseen_probabilities.assign(unseen_probs.row(r).begin(), unseen_probs.row(r).end());
    out[r].label = labels[r];
    out[r].is_seen = is_seen;
  }
  return out;
}

std::vector<GzslDecision> gzsl_predict(const Matrix& x_s, const SoftmaxClassifier& seen_classifier,
                                       const AlignedModel& model,
                                       const SoftmaxClassifier& zsl_classifier,
                                       const GateModel& gate) {
  const auto inputs = make_gate_inputs(x_s, std::vector<ClassId>(x_s.rows(), 0), true,
                                       seen_classifier, model, zsl_classifier);
  std::vector<GzslDecision> out;
  out.reserve(inputs.size());
  for (const auto& in : inputs) {
    out.push_back(gzsl_combine(in, gate, seen_classifier.class_ids, zsl_classifier.class_ids));
  }
  return out;
}

LabeledFeatureSet synthesize_unseen_visuals(const AlignedModel& model,
                                            const PosEmbeddingTable& table,
                                            const std::vector<ClassId>& unseen_ids,
                                            std::size_t per_class_count, std::uint64_t seed) {
  const LatentSampleSet z = generate_unseen_latents(model, table, unseen_ids, per_class_count, seed);
  LabeledFeatureSet out;
  out.features = decode(model.vae_s, z.latents);
  out.labels = z.labels;
  out.indices.assign(out.labels.size(), 0);
  out.catalog = unseen_ids;
  std::sort(out.catalog.begin(), out.catalog.end());
  out.source_tag = "synthesized-unseen";
  return out;
}

double gate_harmonic_mean(const std::vector<GateInput>& inputs, const GateModel& gate,
                          const std::vector<ClassId>& seen_ids,
                          const std::vector<ClassId>& unseen_ids) {
  std::vector<ClassId> seen_pred, seen_lab, unseen_pred, unseen_lab;
  for (const auto& in : inputs) {
    const ClassId y = gzsl_combine(in, gate, seen_ids, unseen_ids).label;
    if (in.is_seen) {
      seen_pred.push_back(y);
      seen_lab.push_back(in.label);
    } else {
      unseen_pred.push_back(y);
      unseen_lab.push_back(in.label);
    }
  }
  return harmonic_mean(per_class_mean_accuracy(seen_pred, seen_lab, seen_ids),
                       per_class_mean_accuracy(unseen_pred, unseen_lab, unseen_ids));
}

TunedGate tune_gate(const std::vector<GateInput>& train, const std::vector<GateInput>& validation,
                    const std::vector<ClassId>& seen_ids, const std::vector<ClassId>& unseen_ids,
                    const GateTuning& tuning) {
  const bool val_has_seen =
      std::any_of(validation.begin(), validation.end(), [](const auto& g) { return g.is_seen; });
  const bool val_has_unseen =
      std::any_of(validation.begin(), validation.end(), [](const auto& g) { return !g.is_seen; });
  if (!val_has_seen || !val_has_unseen) {
    throw Error(ErrorKind::Tuning, "gate validation set must contain both seen and unseen examples");
  }
  if (tuning.temperatures.empty() || tuning.thresholds.empty()) {
    throw Error(ErrorKind::Tuning, "empty tuning grid");
  }
  auto temps = tuning.temperatures;
  auto thresholds = tuning.thresholds;
  std::sort(temps.begin(), temps.end());
  std::sort(thresholds.begin(), thresholds.end());
  const std::size_t k = tuning.k ? tuning.k : unseen_ids.size();

  TunedGate best;
  bool have_best = false;
  for (double temp : temps) {
    std::vector<GateFeatures> pos, neg;
    for (const auto& in : train) {
      auto f = build_gate_features(temperature_scale(in.seen_logits, temp),
                                   in.unseen_probabilities, k);
      (in.is_seen ? pos : neg).push_back(std::move(f));
    }
    const LogisticFit fit = train_gate(pos, neg, tuning.regularization);
    for (double tau : thresholds) {
      GateModel g;
      g.temperature = temp;
      g.k = k;
      g.weight = fit.weight;
      g.bias = fit.bias;
      g.threshold = tau;
      g.mode = tuning.mode;
      g.regularization = tuning.regularization;
      g.validate();
      const double h = gate_harmonic_mean(validation, g, seen_ids, unseen_ids);
      if (!have_best || h > best.validation_harmonic) {
        best = {g, h};
        have_best = true;
      }
    }
  }
  return best;
}

}  // namespace synse
