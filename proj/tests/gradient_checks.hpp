#pragma once

// Finite-difference checks of the analytic gradients on random toy instances.
// Each function returns the worst per-block relative error of one instance.

#include <array>
#include <random>

#include "oracles.hpp"
#include "synse/alignment.hpp"

namespace synse::gradcheck {

inline std::array<std::span<double>, 4> blocks(VaePair& v) {
  return {v.enc_weight.values(), std::span<double>(v.enc_bias), v.dec_weight.values(),
          std::span<double>(v.dec_bias)};
}

inline std::array<std::span<const double>, 4> blocks(const VaeGradient& g) {
  return {g.enc_weight.values(), std::span<const double>(g.enc_bias), g.dec_weight.values(),
          std::span<const double>(g.dec_bias)};
}

inline Matrix normal(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(r, c);
  for (double& v : m.values()) v = g(rng);
  return m;
}

// Random parameters with non-trivial biases so every block carries gradient.
inline VaePair random_vae(Modality m, std::size_t in, std::size_t latent, std::mt19937_64& rng) {
  VaePair v = VaePair::initialize(m, in, latent, rng());
  std::normal_distribution<double> g(0.0, 0.3);
  for (double& b : v.enc_bias) b = g(rng);
  for (double& b : v.dec_bias) b = g(rng);
  return v;
}

inline double vae_loss_instance(std::uint64_t seed, double beta) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> dim(2, 8), lat(1, 4), batch(1, 4);
  const std::size_t in = dim(rng), latent = lat(rng), n = batch(rng);
  VaePair vae = random_vae(Modality::Skeleton, in, latent, rng);
  const Matrix x = normal(n, in, rng);
  const Matrix noise = normal(n, latent, rng);

  const VaeGradient g = vae_loss_gradient(vae, x, sample_latent(vae, x, noise), beta);
  auto loss = [&] { return vae_loss(vae, x, sample_latent(vae, x, noise), beta); };
  double worst = 0.0;
  const auto analytic = blocks(g);
  auto params = blocks(vae);
  for (std::size_t b = 0; b < params.size(); ++b) {
    const auto numeric = oracle::central_differences(params[b], loss);
    worst = std::max(worst, oracle::relative_error(analytic[b], numeric));
  }
  return worst;
}

struct ObjectiveInstance {
  AlignedModel model;
  AlignmentBatch batch;
  AlignmentNoise noise;
};

inline ObjectiveInstance random_objective(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> dim(2, 8), pos(1, 4), batch(1, 4);
  const std::size_t vis = dim(rng), emb = dim(rng), p = pos(rng), n = batch(rng);
  TrainConfig tc;
  tc.latent_dims = {2 * p, p};
  ObjectiveInstance in;
  in.model.config = tc;
  in.model.vae_s = random_vae(Modality::Skeleton, vis, 2 * p, rng);
  in.model.vae_v = random_vae(Modality::Verb, emb, p, rng);
  in.model.vae_n = random_vae(Modality::Noun, emb, p, rng);
  in.batch = {normal(n, vis, rng), normal(n, emb, rng), normal(n, emb, rng)};
  in.noise = {normal(n, 2 * p, rng), normal(n, p, rng), normal(n, p, rng)};
  return in;
}

// Gradient of weights.vae * sum vae_loss + weights.alpha * cmr for all twelve
// parameter blocks.
inline double objective_instance(std::uint64_t seed, const ObjectiveWeights& w) {
  ObjectiveInstance in = random_objective(seed);
  ModelGradient g;
  evaluate_objective(in.model, in.batch, in.noise, w, &g);
  auto loss = [&] { return evaluate_objective(in.model, in.batch, in.noise, w, nullptr).total; };
  double worst = 0.0;
  VaePair* vaes[] = {&in.model.vae_s, &in.model.vae_v, &in.model.vae_n};
  const VaeGradient* grads[] = {&g.s, &g.v, &g.n};
  for (int m = 0; m < 3; ++m) {
    auto params = blocks(*vaes[m]);
    const auto analytic = blocks(*grads[m]);
    for (std::size_t b = 0; b < params.size(); ++b) {
      const auto numeric = oracle::central_differences(params[b], loss);
      worst = std::max(worst, oracle::relative_error(analytic[b], numeric));
    }
  }
  return worst;
}

// cross_modal_loss alone: zero weight on the VAE terms.
inline double cross_modal_instance(std::uint64_t seed) {
  return objective_instance(seed, {0.0, 0.0, 1.0});
}

inline double total_loss_instance(std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0xabcdefULL);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  return objective_instance(seed, {1.0, u(rng), u(rng)});
}

}  // namespace synse::gradcheck
