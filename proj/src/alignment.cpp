#include "synse/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "synse/adam.hpp"
#include "synse/container.hpp"

namespace synse {

namespace {

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag)};
  return std::mt19937_64(seq);
}

constexpr std::uint64_t kShuffleTag = 0x51;

std::uint64_t noise_tag(Modality m) { return 0x100 + static_cast<std::uint64_t>(modality_code(m)); }

// Per-row residual norms of (target - recon) and the gradient of
// scale * sum_i ||.||_i with respect to recon.
double norm_residuals(const Matrix& target, const Matrix& recon, double scale, Matrix* d_recon) {
  require_shape(target.rows() == recon.rows() && target.cols() == recon.cols(),
                "cross-modal residual: " + shape_str(target) + " vs " + shape_str(recon));
  if (d_recon) *d_recon = Matrix(recon.rows(), recon.cols());
  double acc = 0.0;
  for (std::size_t r = 0; r < target.rows(); ++r) {
    double sq = 0.0;
    for (std::size_t j = 0; j < target.cols(); ++j) {
      const double d = recon(r, j) - target(r, j);
      sq += d * d;
    }
    const double norm = std::sqrt(sq + kNormEpsilon);
    acc += norm;
    if (d_recon) {
      for (std::size_t j = 0; j < target.cols(); ++j) {
        (*d_recon)(r, j) = scale * (recon(r, j) - target(r, j)) / norm;
      }
    }
  }
  return acc;
}

std::vector<std::span<double>> param_blocks(VaePair& v) {
  return {v.enc_weight.values(), v.enc_bias, v.dec_weight.values(), v.dec_bias};
}

std::vector<std::span<const double>> grad_blocks(const VaeGradient& g) {
  return {g.enc_weight.values(), g.enc_bias, g.dec_weight.values(), g.dec_bias};
}

// Own-reconstruction backward for one modality; returns dL/dz.
Matrix own_reconstruction_backward(const VaePair& vae, const Matrix& x, const GaussianLatent& lat,
                                   const Matrix& recon, double weight, VaeGradient& g) {
  Matrix d_recon = kernels::subtract(recon, x);
  const double scale = weight * 2.0 / static_cast<double>(x.rows());
  for (double& v : d_recon.values()) v *= scale;
  return decoder_backward(vae, lat.z, d_recon, g);
}

void check_loss(double loss, std::int64_t epoch, std::size_t batch) {
  if (!std::isfinite(loss)) {
    throw Error(ErrorKind::Divergence, "non-finite loss at epoch " + std::to_string(epoch) +
                                           ", batch " + std::to_string(batch));
  }
}

}  // namespace

AnnealSchedule AnnealSchedule::ntu60() { return {1700, 1000, 0.0021, 1400, 1.0, 2}; }
AnnealSchedule AnnealSchedule::ntu120() { return {1900, 1000, 0.0021, 1500, 1.0, 2}; }

void AnnealSchedule::validate() const {
  if (!(beta_start_epoch < alpha_start_epoch && alpha_start_epoch < cycle_length_epochs)) {
    throw Error(ErrorKind::Parameter,
                "schedule requires beta_start_epoch < alpha_start_epoch < cycle_length_epochs");
  }
  if (beta_start_epoch < 0) throw Error(ErrorKind::Parameter, "beta_start_epoch must be >= 0");
  if (beta_rate_per_epoch < 0.0) throw Error(ErrorKind::Parameter, "beta rate must be >= 0");
  if (alpha_value < 0.0) throw Error(ErrorKind::Parameter, "alpha_value must be >= 0");
  if (num_cycles < 1) throw Error(ErrorKind::Parameter, "num_cycles must be >= 1");
}

AnnealCoefficients anneal_coefficients(std::int64_t global_epoch, const AnnealSchedule& s) {
  const std::int64_t e = global_epoch % s.cycle_length_epochs;
  AnnealCoefficients c;
  c.beta = e < s.beta_start_epoch
               ? 0.0
               : static_cast<double>(e - s.beta_start_epoch) * s.beta_rate_per_epoch;
  c.alpha = e < s.alpha_start_epoch ? 0.0 : s.alpha_value;
  return c;
}

void TrainConfig::validate() const {
  schedule.validate();
  if (batch_size < 1) throw Error(ErrorKind::Parameter, "batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::Parameter, "learning_rate must be > 0");
  if (latent_dims.pos == 0 || latent_dims.skeleton != 2 * latent_dims.pos) {
    throw Error(ErrorKind::Parameter,
                "skeleton latent dim must be twice the PoS latent dim (got " +
                    std::to_string(latent_dims.skeleton) + " and " +
                    std::to_string(latent_dims.pos) + ")");
  }
}

AlignedModel AlignedModel::initialize(std::size_t visual_dim, std::size_t embed_dim,
                                      const TrainConfig& config) {
  config.validate();
  AlignedModel m;
  m.config = config;
  m.vae_s = VaePair::initialize(Modality::Skeleton, visual_dim, config.latent_dims.skeleton,
                                config.seed * 3 + 1);
  m.vae_v = VaePair::initialize(Modality::Verb, embed_dim, config.latent_dims.pos,
                                config.seed * 3 + 2);
  m.vae_n = VaePair::initialize(Modality::Noun, embed_dim, config.latent_dims.pos,
                                config.seed * 3 + 3);
  m.validate();
  return m;
}

void AlignedModel::validate() const {
  vae_s.validate();
  vae_v.validate();
  vae_n.validate();
  if (vae_s.latent_dim != vae_v.latent_dim + vae_n.latent_dim) {
    throw Error(ErrorKind::Shape, "geometry: width(z_l) = " +
                                      std::to_string(vae_v.latent_dim + vae_n.latent_dim) +
                                      " but width(z_s) = " + std::to_string(vae_s.latent_dim));
  }
  if (vae_v.latent_dim != vae_n.latent_dim) {
    throw Error(ErrorKind::Shape, "geometry: verb and noun latents must have equal width");
  }
  if (vae_v.input_dim != vae_n.input_dim) {
    throw Error(ErrorKind::Shape, "geometry: verb and noun embeddings must have equal width");
  }
}

void AlignedModel::save(const std::filesystem::path& path) const {
  Container c;
  c.set("kind", "aligned_model");
  c.set("byte_order", "little-endian");
  c.set("learning_rate", std::to_string(config.learning_rate));
  c.set("batch_size", std::to_string(config.batch_size));
  c.set("latent_skeleton", std::to_string(config.latent_dims.skeleton));
  c.set("latent_pos", std::to_string(config.latent_dims.pos));
  c.set("seed", std::to_string(config.seed));
  const auto& s = config.schedule;
  c.set("schedule",
        std::to_string(s.cycle_length_epochs) + " " + std::to_string(s.beta_start_epoch) + " " +
            std::to_string(s.alpha_start_epoch) + " " + std::to_string(s.num_cycles));
  // Reals go through the f64 array so they round-trip exactly.
  c.add_array("config_reals", ElementType::F64,
              Matrix(1, 3, {config.learning_rate, s.beta_rate_per_epoch, s.alpha_value}));
  c.set("trained_epochs", std::to_string(trained_epochs));
  vae_s.store(c, "s");
  vae_v.store(c, "v");
  vae_n.store(c, "n");
  Matrix traj(trajectory.size(), 6);
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    const auto& r = trajectory[i];
    traj.row(i)[0] = static_cast<double>(r.epoch);
    traj.row(i)[1] = r.beta;
    traj.row(i)[2] = r.alpha;
    traj.row(i)[3] = r.total_loss;
    traj.row(i)[4] = r.vae_loss;
    traj.row(i)[5] = r.cmr_loss;
  }
  c.add_array("trajectory", ElementType::F64, traj);
  c.save(path);
}

AlignedModel AlignedModel::load(const std::filesystem::path& path) {
  const Container c = Container::load(path);
  if (c.get("kind") != "aligned_model") {
    throw Error(ErrorKind::Format, path.string() + ": not an aligned model checkpoint");
  }
  AlignedModel m;
  m.config.batch_size = std::stoul(c.get("batch_size"));
  m.config.latent_dims = {std::stoul(c.get("latent_skeleton")), std::stoul(c.get("latent_pos"))};
  m.config.seed = std::stoull(c.get("seed"));
  auto sched = split_ws(c.get("schedule"));
  if (sched.size() != 4) throw Error(ErrorKind::Format, path.string() + ": malformed schedule");
  const auto& reals = c.array("config_reals").values;
  m.config.learning_rate = reals(0, 0);
  m.config.schedule = {std::stoll(sched[0]), std::stoll(sched[1]), reals(0, 1),
                       std::stoll(sched[2]), reals(0, 2),          std::stoll(sched[3])};
  m.trained_epochs = std::stoll(c.get("trained_epochs"));
  m.vae_s = VaePair::restore(c, "s");
  m.vae_v = VaePair::restore(c, "v");
  m.vae_n = VaePair::restore(c, "n");
  const auto& traj = c.array("trajectory").values;
  for (std::size_t i = 0; i < traj.rows(); ++i) {
    auto r = traj.row(i);
    m.trajectory.push_back({static_cast<std::int64_t>(r[0]), r[1], r[2], r[3], r[4], r[5]});
  }
  m.validate();
  return m;
}

Matrix concat_pos_latents(const Matrix& z_v, const Matrix& z_n) {
  require_shape(z_v.rows() == z_n.rows(), "concat_pos_latents: batch mismatch " + shape_str(z_v) +
                                              " vs " + shape_str(z_n));
  return kernels::hconcat(z_v, z_n);
}

std::pair<Matrix, Matrix> split_skeleton_latent(const Matrix& z_s) {
  require_shape(z_s.cols() % 2 == 0,
                "split_skeleton_latent: odd latent width " + std::to_string(z_s.cols()));
  const std::size_t half = z_s.cols() / 2;
  return {kernels::column_block(z_s, 0, half), kernels::column_block(z_s, half, half)};
}

double cross_modal_loss(const Matrix& x_s, const Matrix& e_v, const Matrix& e_n,
                        const Matrix& z_l, const Matrix& z_sv, const Matrix& z_sn,
                        const AlignedModel& model) {
  require_shape(x_s.rows() == e_v.rows() && x_s.rows() == e_n.rows(),
                "cross_modal_loss: batch mismatch");
  if (x_s.rows() == 0) return 0.0;
  const double acc = norm_residuals(x_s, decode(model.vae_s, z_l), 1.0, nullptr) +
                     norm_residuals(e_v, decode(model.vae_v, z_sv), 1.0, nullptr) +
                     norm_residuals(e_n, decode(model.vae_n, z_sn), 1.0, nullptr);
  return acc / static_cast<double>(x_s.rows());
}

double total_loss(double vae_terms, double cmr_term, double alpha) {
  return vae_terms + alpha * cmr_term;
}

ObjectiveValue evaluate_objective(const AlignedModel& model, const AlignmentBatch& batch,
                                  const AlignmentNoise& noise, const ObjectiveWeights& w,
                                  ModelGradient* grad) {
  const std::size_t n = batch.x_s.rows();
  require_shape(n > 0 && batch.e_v.rows() == n && batch.e_n.rows() == n,
                "evaluate_objective: empty or inconsistent batch");
  const double inv_n = 1.0 / static_cast<double>(n);

  const GaussianLatent ls = sample_latent(model.vae_s, batch.x_s, noise.s);
  const GaussianLatent lv = sample_latent(model.vae_v, batch.e_v, noise.v);
  const GaussianLatent ln = sample_latent(model.vae_n, batch.e_n, noise.n);
  const Matrix rec_s = decode(model.vae_s, ls.z);
  const Matrix rec_v = decode(model.vae_v, lv.z);
  const Matrix rec_n = decode(model.vae_n, ln.z);

  ObjectiveValue out;
  out.vae = reconstruction_error(batch.x_s, rec_s) + reconstruction_error(batch.e_v, rec_v) +
            reconstruction_error(batch.e_n, rec_n) +
            w.beta * (kl_to_standard_normal(ls.mu, ls.log_var) +
                      kl_to_standard_normal(lv.mu, lv.log_var) +
                      kl_to_standard_normal(ln.mu, ln.log_var));

  const bool cross = w.alpha != 0.0;
  Matrix z_l, z_sv, z_sn, d_cross_s, d_cross_v, d_cross_n;
  if (cross) {
    z_l = concat_pos_latents(lv.z, ln.z);
    std::tie(z_sv, z_sn) = split_skeleton_latent(ls.z);
    const double scale = w.alpha * inv_n;
    const bool g = grad != nullptr;
    const double acc =
        norm_residuals(batch.x_s, decode(model.vae_s, z_l), scale, g ? &d_cross_s : nullptr) +
        norm_residuals(batch.e_v, decode(model.vae_v, z_sv), scale, g ? &d_cross_v : nullptr) +
        norm_residuals(batch.e_n, decode(model.vae_n, z_sn), scale, g ? &d_cross_n : nullptr);
    out.cmr = acc * inv_n;
  }
  out.total = total_loss(w.vae * out.vae, out.cmr, w.alpha);

  if (!grad) return out;

  grad->s = VaeGradient::zeros_like(model.vae_s);
  grad->v = VaeGradient::zeros_like(model.vae_v);
  grad->n = VaeGradient::zeros_like(model.vae_n);

  Matrix dz_s = own_reconstruction_backward(model.vae_s, batch.x_s, ls, rec_s, w.vae, grad->s);
  Matrix dz_v = own_reconstruction_backward(model.vae_v, batch.e_v, lv, rec_v, w.vae, grad->v);
  Matrix dz_n = own_reconstruction_backward(model.vae_n, batch.e_n, ln, rec_n, w.vae, grad->n);

  if (cross) {
    const Matrix dz_l = decoder_backward(model.vae_s, z_l, d_cross_s, grad->s);
    auto [dz_lv, dz_ln] = split_skeleton_latent(dz_l);
    kernels::axpy(1.0, dz_lv, dz_v);
    kernels::axpy(1.0, dz_ln, dz_n);
    const Matrix dz_sv = decoder_backward(model.vae_v, z_sv, d_cross_v, grad->v);
    const Matrix dz_sn = decoder_backward(model.vae_n, z_sn, d_cross_n, grad->n);
    kernels::axpy(1.0, concat_pos_latents(dz_sv, dz_sn), dz_s);
  }

  const double beta = w.vae * w.beta;
  encoder_backward(model.vae_s, batch.x_s, ls, dz_s, beta, grad->s);
  encoder_backward(model.vae_v, batch.e_v, lv, dz_v, beta, grad->v);
  encoder_backward(model.vae_n, batch.e_n, ln, dz_n, beta, grad->n);
  return out;
}

AlignedModel train(AlignedModel model, const LabeledFeatureSet& train_data,
                   const PosEmbeddingTable& embeddings, const TrainOptions& options) {
  const TrainConfig& cfg = model.config;
  cfg.validate();
  model.validate();
  require_shape(train_data.dim() == model.vae_s.input_dim,
                "train: visual width " + std::to_string(train_data.dim()) + " != model input " +
                    std::to_string(model.vae_s.input_dim));
  require_shape(embeddings.dim == model.vae_v.input_dim, "train: embedding width mismatch");
  const std::size_t n = train_data.size();
  if (n == 0) throw Error(ErrorKind::Training, "empty training set");

  const Matrix all_ev = embeddings.verbs_for(train_data.labels);
  const Matrix all_en = embeddings.nouns_for(train_data.labels);

  auto shuffle_rng = stream(cfg.seed, kShuffleTag);
  auto rng_s = stream(cfg.seed, noise_tag(Modality::Skeleton));
  auto rng_v = stream(cfg.seed, noise_tag(Modality::Verb));
  auto rng_n = stream(cfg.seed, noise_tag(Modality::Noun));

  Adam adam(cfg.learning_rate);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  const std::int64_t epochs = cfg.schedule.total_epochs();
  for (std::int64_t epoch = 0; epoch < epochs; ++epoch) {
    const auto coef = anneal_coefficients(epoch, cfg.schedule);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochRecord rec{epoch, coef.beta, coef.alpha, 0.0, 0.0, 0.0};
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size, ++batch_index) {
      const std::size_t len = std::min(cfg.batch_size, n - start);
      std::span<const std::size_t> rows(order.data() + start, len);
      AlignmentBatch batch{kernels::gather_rows(train_data.features, rows),
                           kernels::gather_rows(all_ev, rows), kernels::gather_rows(all_en, rows)};
      AlignmentNoise noise{standard_normal(len, model.vae_s.latent_dim, rng_s),
                           standard_normal(len, model.vae_v.latent_dim, rng_v),
                           standard_normal(len, model.vae_n.latent_dim, rng_n)};
      ModelGradient g;
      const auto value =
          evaluate_objective(model, batch, noise, {1.0, coef.beta, coef.alpha}, &g);
      check_loss(value.total, epoch, batch_index);

      std::vector<std::span<double>> params;
      std::vector<std::span<const double>> grads;
      for (auto* pair : {&model.vae_s, &model.vae_v, &model.vae_n}) {
        auto p = param_blocks(*pair);
        params.insert(params.end(), p.begin(), p.end());
      }
      for (const auto* vg : {&g.s, &g.v, &g.n}) {
        auto b = grad_blocks(*vg);
        grads.insert(grads.end(), b.begin(), b.end());
      }
      adam.step(params, grads);

      const double w = static_cast<double>(len) / static_cast<double>(n);
      rec.total_loss += w * value.total;
      rec.vae_loss += w * value.vae;
      rec.cmr_loss += w * value.cmr;
    }
    model.trajectory.push_back(rec);
    ++model.trained_epochs;
    if (options.on_epoch && !options.on_epoch(rec)) break;
  }
  model.validate();
  return model;
}

VaePair train_single_vae(VaePair vae, const Matrix& inputs, const TrainConfig& cfg) {
  cfg.validate();
  vae.validate();
  const std::size_t n = inputs.rows();
  if (n == 0) throw Error(ErrorKind::Training, "empty training set");
  auto shuffle_rng = stream(cfg.seed, kShuffleTag);
  auto rng = stream(cfg.seed, noise_tag(vae.modality));
  Adam adam(cfg.learning_rate);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::int64_t epoch = 0; epoch < cfg.schedule.total_epochs(); ++epoch) {
    const auto coef = anneal_coefficients(epoch, cfg.schedule);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size, ++batch_index) {
      const std::size_t len = std::min(cfg.batch_size, n - start);
      std::span<const std::size_t> rows(order.data() + start, len);
      const Matrix x = kernels::gather_rows(inputs, rows);
      const GaussianLatent lat = sample_latent(vae, x, standard_normal(len, vae.latent_dim, rng));
      const Matrix recon = decode(vae, lat.z);
      check_loss(reconstruction_error(x, recon) + coef.beta * kl_to_standard_normal(lat.mu, lat.log_var),
                 epoch, batch_index);
      VaeGradient g = VaeGradient::zeros_like(vae);
      const Matrix dz = own_reconstruction_backward(vae, x, lat, recon, 1.0, g);
      encoder_backward(vae, x, lat, dz, coef.beta, g);
      const auto p = param_blocks(vae);
      const auto gb = grad_blocks(g);
      adam.step(p, gb);
    }
  }
  return vae;
}

}  // namespace synse
