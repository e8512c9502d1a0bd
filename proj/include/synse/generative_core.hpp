#pragma once

// Single-affine-layer VAEs: encoder x -> [mu | log_var], decoder z -> x_hat.
//
// Loss conventions (all batch reductions are means over rows):
//   reconstruction = mean_i ||x_i - decode(z_i)||^2
//   kl             = mean_i 0.5 * sum_j (mu^2 + exp(log_var) - 1 - log_var)
//   vae_loss       = reconstruction + beta * kl

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "synse/container.hpp"
#include "synse/kernels.hpp"
#include "synse/matrix.hpp"

namespace synse {

enum class Modality { Skeleton, Verb, Noun };

char modality_code(Modality m);  // 's', 'v', 'n'
Modality modality_from_code(char c);

struct VaePair {
  Modality modality = Modality::Skeleton;
  std::size_t input_dim = 0;
  std::size_t latent_dim = 0;
  std::uint64_t init_seed = 0;
  Matrix enc_weight;  // input_dim x 2*latent_dim
  Vector enc_bias;    // 2*latent_dim
  Matrix dec_weight;  // latent_dim x input_dim
  Vector dec_bias;    // input_dim

  // Zero biases; weights uniform in +-sqrt(6 / (fan_in + fan_out)).
  static VaePair initialize(Modality modality, std::size_t input_dim, std::size_t latent_dim,
                            std::uint64_t seed);
  void validate() const;  // throws Shape / Numeric

  void store(Container& c, const std::string& prefix) const;
  static VaePair restore(const Container& c, const std::string& prefix);

  friend bool operator==(const VaePair&, const VaePair&) = default;
};

// Same shapes as the parameter blocks of a VaePair.
struct VaeGradient {
  Matrix enc_weight;
  Vector enc_bias;
  Matrix dec_weight;
  Vector dec_bias;

  static VaeGradient zeros_like(const VaePair& vae);
};

struct Encoded {
  Matrix mu;
  Matrix log_var;
};

struct GaussianLatent {
  Matrix mu;
  Matrix log_var;
  Matrix noise;
  Matrix z;
};

Encoded encode(const VaePair& vae, const Matrix& x);
Matrix reparameterize(const Matrix& mu, const Matrix& log_var, const Matrix& noise);
Matrix decode(const VaePair& vae, const Matrix& z);

// Encode then reparameterize with the supplied noise draw.
GaussianLatent sample_latent(const VaePair& vae, const Matrix& x, const Matrix& noise);

Matrix standard_normal(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

Vector kl_per_sample(const Matrix& mu, const Matrix& log_var);
double kl_to_standard_normal(const Matrix& mu, const Matrix& log_var);  // batch mean

double reconstruction_error(const Matrix& x, const Matrix& recon);  // batch mean of ||.||^2
double vae_loss(const VaePair& vae, const Matrix& x, const GaussianLatent& latent, double beta);

struct ModalityInput {
  const VaePair* vae;
  const Matrix* x;
  const GaussianLatent* latent;
};
double multimodal_vae_loss(std::span<const ModalityInput> inputs, double beta);

// Backward helpers. Each accumulates into `grad` and leaves the rest untouched.

// Decoder applied to `z` whose output received upstream gradient `d_out`.
// Returns dL/dz.
Matrix decoder_backward(const VaePair& vae, const Matrix& z, const Matrix& d_out,
                        VaeGradient& grad);
// Gradient through the reparameterization and encoder given dL/dz, plus the
// beta-weighted KL term.
void encoder_backward(const VaePair& vae, const Matrix& x, const GaussianLatent& latent,
                      const Matrix& dz, double beta, VaeGradient& grad);
// Full gradient of vae_loss with respect to every parameter block.
VaeGradient vae_loss_gradient(const VaePair& vae, const Matrix& x, const GaussianLatent& latent,
                              double beta);

}  // namespace synse
