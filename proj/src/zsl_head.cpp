#include "synse/zsl_head.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <map>
#include <random>
#include <set>

#include "synse/adam.hpp"
#include "synse/container.hpp"

namespace synse {

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto in = logits.row(r);
    auto out = p.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      out[j] = std::exp(in[j] - mx);
      sum += out[j];
    }
    for (double& v : out) v /= sum;
  }
  return p;
}

std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

Matrix SoftmaxClassifier::logits(const Matrix& x) const {
  require_shape(x.cols() == input_dim(), "classifier input width " + std::to_string(x.cols()) +
                                             " != " + std::to_string(input_dim()));
  return kernels::affine(x, weight, bias);
}

Matrix SoftmaxClassifier::probabilities(const Matrix& x) const { return softmax_rows(logits(x)); }

std::vector<ClassId> SoftmaxClassifier::predict(const Matrix& x) const {
  const Matrix l = logits(x);
  std::vector<ClassId> out(l.rows());
  for (std::size_t r = 0; r < l.rows(); ++r) out[r] = class_ids[argmax(l.row(r))];
  return out;
}

std::size_t SoftmaxClassifier::column_of(ClassId id) const {
  auto it = std::find(class_ids.begin(), class_ids.end(), id);
  if (it == class_ids.end()) {
    throw Error(ErrorKind::Catalog, "class " + std::to_string(id) + " not in classifier");
  }
  return static_cast<std::size_t>(it - class_ids.begin());
}

void SoftmaxClassifier::validate() const {
  require_shape(weight.cols() == class_ids.size() && bias.size() == class_ids.size(),
                "classifier parameter widths disagree with class list");
  std::set<ClassId> unique(class_ids.begin(), class_ids.end());
  if (unique.size() != class_ids.size()) {
    throw Error(ErrorKind::Parameter, "duplicate class ids in classifier");
  }
  for (double v : weight.values())
    if (!std::isfinite(v)) throw Error(ErrorKind::Numeric, "non-finite classifier weight");
  for (double v : bias)
    if (!std::isfinite(v)) throw Error(ErrorKind::Numeric, "non-finite classifier bias");
}

void SoftmaxClassifier::save(const std::filesystem::path& path) const {
  Container c;
  c.set("kind", "softmax_classifier");
  c.set("byte_order", "little-endian");
  std::vector<std::string> ids;
  for (auto id : class_ids) ids.push_back(std::to_string(id));
  c.set("class_ids", join(ids));
  c.add_array("weight", ElementType::F64, weight);
  c.add_array("bias", ElementType::F64, Matrix(1, bias.size(), bias));
  c.save(path);
}

SoftmaxClassifier SoftmaxClassifier::load(const std::filesystem::path& path) {
  const Container c = Container::load(path);
  if (c.get("kind") != "softmax_classifier") {
    throw Error(ErrorKind::Format, path.string() + ": not a classifier checkpoint");
  }
  SoftmaxClassifier s;
  for (const auto& tok : split_ws(c.get("class_ids"))) s.class_ids.push_back(std::stoll(tok));
  s.weight = c.array("weight").values;
  auto b = c.array("bias").values.values();
  s.bias.assign(b.begin(), b.end());
  s.validate();
  return s;
}

LatentSampleSet generate_unseen_latents(const AlignedModel& model, const PosEmbeddingTable& table,
                                        const std::vector<ClassId>& unseen_ids,
                                        std::size_t per_class_count, std::uint64_t seed,
                                        bool zero_noise) {
  model.validate();
  std::mt19937_64 rng(seed);
  LatentSampleSet out;
  out.per_class_count = per_class_count;
  out.latents = Matrix(unseen_ids.size() * per_class_count,
                       model.vae_v.latent_dim + model.vae_n.latent_dim);
  for (std::size_t c = 0; c < unseen_ids.size(); ++c) {
    const ClassId id = unseen_ids[c];
    const std::vector<ClassId> one{id};
    const auto ev = encode(model.vae_v, table.verbs_for(one));
    const auto en = encode(model.vae_n, table.nouns_for(one));
    for (std::size_t k = 0; k < per_class_count; ++k) {
      Matrix nv = standard_normal(1, model.vae_v.latent_dim, rng);
      Matrix nn = standard_normal(1, model.vae_n.latent_dim, rng);
      if (zero_noise) {
        nv.fill(0.0);
        nn.fill(0.0);
      }
      const Matrix zl = concat_pos_latents(reparameterize(ev.mu, ev.log_var, nv),
                                           reparameterize(en.mu, en.log_var, nn));
      auto dst = out.latents.row(c * per_class_count + k);
      std::copy(zl.row(0).begin(), zl.row(0).end(), dst.begin());
      out.labels.push_back(id);
    }
  }
  return out;
}

SoftmaxClassifier initialize_softmax(std::size_t input_dim, std::vector<ClassId> class_ids,
                                     std::uint64_t seed) {
  SoftmaxClassifier s;
  s.class_ids = std::move(class_ids);
  s.weight = Matrix(input_dim, s.class_ids.size());
  s.bias.assign(s.class_ids.size(), 0.0);
  std::mt19937_64 rng(seed);
  const double limit = std::sqrt(6.0 / static_cast<double>(input_dim + s.class_ids.size()));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& v : s.weight.values()) v = dist(rng);
  s.validate();
  return s;
}

SoftmaxClassifier train_softmax(const Matrix& inputs, const std::vector<ClassId>& labels,
                                const SoftmaxTrainConfig& cfg) {
  require_shape(inputs.rows() == labels.size(), "train_softmax: rows != labels");
  std::vector<ClassId> classes;
  for (auto y : labels)
    if (std::find(classes.begin(), classes.end(), y) == classes.end()) classes.push_back(y);
  std::sort(classes.begin(), classes.end());
  if (classes.size() < 2) {
    throw Error(ErrorKind::Training, "softmax training needs at least two classes (degenerate task)");
  }
  SoftmaxClassifier clf = initialize_softmax(inputs.cols(), classes, cfg.seed);
  std::vector<std::size_t> target(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) target[i] = clf.column_of(labels[i]);

  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  Adam adam(cfg.learning_rate);
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, order.size() - start);
      std::span<const std::size_t> rows(order.data() + start, len);
      const Matrix x = kernels::gather_rows(inputs, rows);
      Matrix d = clf.probabilities(x);
      for (std::size_t r = 0; r < len; ++r) d(r, target[rows[r]]) -= 1.0;
      const double inv = 1.0 / static_cast<double>(len);
      for (double& v : d.values()) v *= inv;
      Matrix gw = kernels::gemm_tn(x, d);
      Vector gb = kernels::column_sums(d);
      const std::span<double> p[] = {clf.weight.values(), clf.bias};
      const std::span<const double> g[] = {gw.values(), gb};
      adam.step(p, g);
    }
  }
  clf.validate();
  return clf;
}

SoftmaxClassifier train_softmax(const LatentSampleSet& samples, const SoftmaxTrainConfig& cfg) {
  return train_softmax(samples.latents, samples.labels, cfg);
}

Matrix visual_latent_means(const AlignedModel& model, const Matrix& x_s) {
  return encode(model.vae_s, x_s).mu;
}

std::vector<ClassId> zsl_predict(const AlignedModel& model, const SoftmaxClassifier& classifier,
                                 const Matrix& x_s) {
  require_shape(classifier.input_dim() == model.vae_s.latent_dim,
                "zsl_predict: classifier width " + std::to_string(classifier.input_dim()) +
                    " != skeleton latent width " + std::to_string(model.vae_s.latent_dim));
  return classifier.predict(visual_latent_means(model, x_s));
}

SoftmaxClassifier train_joint_classifier(const AlignedModel& model,
                                         const LabeledFeatureSet& seen_data,
                                         const LatentSampleSet& unseen_latents,
                                         const SoftmaxTrainConfig& cfg,
                                         std::size_t seen_per_class) {
  if (seen_data.size() == 0 || unseen_latents.labels.empty()) {
    throw Error(ErrorKind::Training, "joint classifier needs both seen and unseen samples");
  }
  const std::set<ClassId> seen(seen_data.labels.begin(), seen_data.labels.end());
  for (auto y : unseen_latents.labels) {
    if (seen.count(y)) {
      throw Error(ErrorKind::Split, "class " + std::to_string(y) + " is both seen and unseen");
    }
  }
  std::mt19937_64 rng(cfg.seed ^ 0x7f4a7c159e3779b9ULL);
  const std::size_t per_class = seen_per_class ? seen_per_class : unseen_latents.per_class_count;
  std::map<ClassId, std::vector<std::size_t>> rows_of;
  for (std::size_t r = 0; r < seen_data.size(); ++r) rows_of[seen_data.labels[r]].push_back(r);
  std::vector<std::size_t> picks;
  std::vector<ClassId> labels;
  for (const auto& [id, rows] : rows_of) {
    std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
    for (std::size_t i = 0; i < per_class; ++i) {
      picks.push_back(rows[pick(rng)]);
      labels.push_back(id);
    }
  }
  const Matrix x = kernels::gather_rows(seen_data.features, picks);
  const Matrix seen_z =
      sample_latent(model.vae_s, x, standard_normal(x.rows(), model.vae_s.latent_dim, rng)).z;
  Matrix all(seen_z.rows() + unseen_latents.latents.rows(), seen_z.cols());
  std::copy(seen_z.values().begin(), seen_z.values().end(), all.values().begin());
  std::copy(unseen_latents.latents.values().begin(), unseen_latents.latents.values().end(),
            all.values().begin() + static_cast<std::ptrdiff_t>(seen_z.size()));
  labels.insert(labels.end(), unseen_latents.labels.begin(), unseen_latents.labels.end());
  return train_softmax(all, labels, cfg);
}

}  // namespace synse
