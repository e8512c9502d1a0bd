#include "synse/generative_core.hpp"

#include <cmath>

namespace synse {

namespace {

void check_finite(const Matrix& m, const char* what) {
  for (double v : m.values()) {
    if (!std::isfinite(v)) throw Error(ErrorKind::Numeric, std::string("non-finite ") + what);
  }
}

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(),
                std::string(what) + ": " + shape_str(a) + " vs " + shape_str(b));
}

void add_into(Vector& dst, const Vector& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

char modality_code(Modality m) {
  switch (m) {
    case Modality::Skeleton: return 's';
    case Modality::Verb: return 'v';
    case Modality::Noun: return 'n';
  }
  return '?';
}

Modality modality_from_code(char c) {
  switch (c) {
    case 's': return Modality::Skeleton;
    case 'v': return Modality::Verb;
    case 'n': return Modality::Noun;
  }
  throw Error(ErrorKind::Format, std::string("unknown modality '") + c + "'");
}

VaePair VaePair::initialize(Modality modality, std::size_t input_dim, std::size_t latent_dim,
                            std::uint64_t seed) {
  if (input_dim == 0 || latent_dim == 0) {
    throw Error(ErrorKind::Parameter, "VAE dimensions must be positive");
  }
  VaePair v;
  v.modality = modality;
  v.input_dim = input_dim;
  v.latent_dim = latent_dim;
  v.init_seed = seed;
  std::mt19937_64 rng(seed);
  auto fill_uniform = [&](Matrix& w, std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& x : w.values()) x = dist(rng);
  };
  v.enc_weight = Matrix(input_dim, 2 * latent_dim);
  fill_uniform(v.enc_weight, input_dim, 2 * latent_dim);
  v.enc_bias.assign(2 * latent_dim, 0.0);
  v.dec_weight = Matrix(latent_dim, input_dim);
  fill_uniform(v.dec_weight, latent_dim, input_dim);
  v.dec_bias.assign(input_dim, 0.0);
  return v;
}

void VaePair::validate() const {
  require_shape(enc_weight.rows() == input_dim && enc_weight.cols() == 2 * latent_dim,
                "encoder weight must be input_dim x 2*latent_dim");
  require_shape(enc_bias.size() == 2 * latent_dim, "encoder bias must have 2*latent_dim entries");
  require_shape(dec_weight.rows() == latent_dim && dec_weight.cols() == input_dim,
                "decoder weight must be latent_dim x input_dim");
  require_shape(dec_bias.size() == input_dim, "decoder bias must have input_dim entries");
  check_finite(enc_weight, "encoder weight");
  check_finite(dec_weight, "decoder weight");
  for (double b : enc_bias)
    if (!std::isfinite(b)) throw Error(ErrorKind::Numeric, "non-finite encoder bias");
  for (double b : dec_bias)
    if (!std::isfinite(b)) throw Error(ErrorKind::Numeric, "non-finite decoder bias");
}

void VaePair::store(Container& c, const std::string& prefix) const {
  c.set(prefix + ".modality", std::string(1, modality_code(modality)));
  c.set(prefix + ".input_dim", std::to_string(input_dim));
  c.set(prefix + ".latent_dim", std::to_string(latent_dim));
  c.set(prefix + ".init_seed", std::to_string(init_seed));
  c.add_array(prefix + ".enc_weight", ElementType::F64, enc_weight);
  c.add_array(prefix + ".enc_bias", ElementType::F64, Matrix(1, enc_bias.size(), enc_bias));
  c.add_array(prefix + ".dec_weight", ElementType::F64, dec_weight);
  c.add_array(prefix + ".dec_bias", ElementType::F64, Matrix(1, dec_bias.size(), dec_bias));
}

VaePair VaePair::restore(const Container& c, const std::string& prefix) {
  VaePair v;
  v.modality = modality_from_code(c.get(prefix + ".modality").at(0));
  v.input_dim = std::stoul(c.get(prefix + ".input_dim"));
  v.latent_dim = std::stoul(c.get(prefix + ".latent_dim"));
  v.init_seed = std::stoull(c.get(prefix + ".init_seed"));
  v.enc_weight = c.array(prefix + ".enc_weight").values;
  auto eb = c.array(prefix + ".enc_bias").values.values();
  v.enc_bias.assign(eb.begin(), eb.end());
  v.dec_weight = c.array(prefix + ".dec_weight").values;
  auto db = c.array(prefix + ".dec_bias").values.values();
  v.dec_bias.assign(db.begin(), db.end());
  v.validate();
  return v;
}

VaeGradient VaeGradient::zeros_like(const VaePair& vae) {
  return {Matrix(vae.enc_weight.rows(), vae.enc_weight.cols()), Vector(vae.enc_bias.size(), 0.0),
          Matrix(vae.dec_weight.rows(), vae.dec_weight.cols()), Vector(vae.dec_bias.size(), 0.0)};
}

Encoded encode(const VaePair& vae, const Matrix& x) {
  require_shape(x.cols() == vae.input_dim,
                "encode: input width " + std::to_string(x.cols()) + " != input_dim " +
                    std::to_string(vae.input_dim));
  const Matrix h = kernels::affine(x, vae.enc_weight, vae.enc_bias);
  return {kernels::column_block(h, 0, vae.latent_dim),
          kernels::column_block(h, vae.latent_dim, vae.latent_dim)};
}

Matrix reparameterize(const Matrix& mu, const Matrix& log_var, const Matrix& noise) {
  check_same_shape(mu, log_var, "reparameterize mu/log_var");
  check_same_shape(mu, noise, "reparameterize mu/noise");
  Matrix z(mu.rows(), mu.cols());
  auto zs = z.values();
  auto m = mu.values();
  auto lv = log_var.values();
  auto e = noise.values();
  for (std::size_t i = 0; i < zs.size(); ++i) zs[i] = m[i] + std::exp(0.5 * lv[i]) * e[i];
  return z;
}

Matrix decode(const VaePair& vae, const Matrix& z) {
  require_shape(z.cols() == vae.latent_dim,
                "decode: latent width " + std::to_string(z.cols()) + " != latent_dim " +
                    std::to_string(vae.latent_dim));
  return kernels::affine(z, vae.dec_weight, vae.dec_bias);
}

GaussianLatent sample_latent(const VaePair& vae, const Matrix& x, const Matrix& noise) {
  auto [mu, log_var] = encode(vae, x);
  Matrix z = reparameterize(mu, log_var, noise);
  return {std::move(mu), std::move(log_var), noise, std::move(z)};
}

Matrix standard_normal(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = dist(rng);
  return m;
}

Vector kl_per_sample(const Matrix& mu, const Matrix& log_var) {
  check_same_shape(mu, log_var, "kl");
  check_finite(mu, "mu in KL");
  check_finite(log_var, "log_var in KL");
  Vector out(mu.rows(), 0.0);
  for (std::size_t r = 0; r < mu.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t j = 0; j < mu.cols(); ++j) {
      const double m = mu(r, j);
      const double lv = log_var(r, j);
      acc += m * m + std::exp(lv) - 1.0 - lv;
    }
    out[r] = 0.5 * acc;
  }
  return out;
}

double kl_to_standard_normal(const Matrix& mu, const Matrix& log_var) {
  const Vector per = kl_per_sample(mu, log_var);
  if (per.empty()) return 0.0;
  double acc = 0.0;
  for (double v : per) acc += v;
  return acc / static_cast<double>(per.size());
}

double reconstruction_error(const Matrix& x, const Matrix& recon) {
  check_same_shape(x, recon, "reconstruction");
  if (x.rows() == 0) return 0.0;
  double acc = 0.0;
  auto a = x.values();
  auto b = recon.values();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(x.rows());
}

double vae_loss(const VaePair& vae, const Matrix& x, const GaussianLatent& latent, double beta) {
  const double rec = reconstruction_error(x, decode(vae, latent.z));
  const double kl = kl_to_standard_normal(latent.mu, latent.log_var);
  const double loss = rec + beta * kl;
  if (!std::isfinite(loss)) throw Error(ErrorKind::Numeric, "non-finite VAE loss");
  return loss;
}

double multimodal_vae_loss(std::span<const ModalityInput> inputs, double beta) {
  double total = 0.0;
  for (const auto& in : inputs) total += vae_loss(*in.vae, *in.x, *in.latent, beta);
  return total;
}

Matrix decoder_backward(const VaePair& vae, const Matrix& z, const Matrix& d_out,
                        VaeGradient& grad) {
  kernels::axpy(1.0, kernels::gemm_tn(z, d_out), grad.dec_weight);
  add_into(grad.dec_bias, kernels::column_sums(d_out));
  return kernels::gemm_nt(d_out, vae.dec_weight);
}

void encoder_backward(const VaePair& vae, const Matrix& x, const GaussianLatent& latent,
                      const Matrix& dz, double beta, VaeGradient& grad) {
  const std::size_t batch = x.rows();
  const std::size_t latent_dim = vae.latent_dim;
  const double kl_scale = beta / static_cast<double>(batch);
  Matrix dh(batch, 2 * latent_dim);
  for (std::size_t r = 0; r < batch; ++r) {
    for (std::size_t j = 0; j < latent_dim; ++j) {
      const double lv = latent.log_var(r, j);
      const double g = dz(r, j);
      dh(r, j) = g + kl_scale * latent.mu(r, j);
      dh(r, latent_dim + j) =
          g * 0.5 * std::exp(0.5 * lv) * latent.noise(r, j) + kl_scale * 0.5 * (std::exp(lv) - 1.0);
    }
  }
  kernels::axpy(1.0, kernels::gemm_tn(x, dh), grad.enc_weight);
  add_into(grad.enc_bias, kernels::column_sums(dh));
}

VaeGradient vae_loss_gradient(const VaePair& vae, const Matrix& x, const GaussianLatent& latent,
                              double beta) {
  VaeGradient g = VaeGradient::zeros_like(vae);
  const Matrix recon = decode(vae, latent.z);
  Matrix d_recon = kernels::subtract(recon, x);
  const double scale = 2.0 / static_cast<double>(x.rows());
  for (double& v : d_recon.values()) v *= scale;
  const Matrix dz = decoder_backward(vae, latent.z, d_recon, g);
  encoder_backward(vae, x, latent, dz, beta, g);
  return g;
}

}  // namespace synse
