#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "gradient_checks.hpp"
#include "oracles.hpp"
#include "synse/generative_core.hpp"
#include "test_util.hpp"

namespace synse {
namespace {

using testing::random_matrix;

VaePair zero_vae(std::size_t in, std::size_t latent) {
  VaePair v = VaePair::initialize(Modality::Skeleton, in, latent, 0);
  v.enc_weight.fill(0.0);
  v.dec_weight.fill(0.0);
  return v;
}

TEST(GenerativeCore, ZeroParametersEncodeToStandardNormal) {
  std::mt19937_64 rng(1);
  const Encoded e = encode(zero_vae(5, 3), random_matrix(4, 5, rng));
  for (double v : e.mu.values()) EXPECT_EQ(v, 0.0);
  for (double v : e.log_var.values()) EXPECT_EQ(v, 0.0);
}

TEST(GenerativeCore, RoutedEncoderSplitsMuAndLogVar) {
  VaePair v = zero_vae(2, 1);
  v.enc_weight(0, 0) = 1.0;  // x0 -> mu
  v.enc_weight(1, 1) = 1.0;  // x1 -> log_var
  const Encoded e = encode(v, Matrix::from_rows({{3.0, 5.0}}));
  EXPECT_EQ(e.mu(0, 0), 3.0);
  EXPECT_EQ(e.log_var(0, 0), 5.0);
}

TEST(GenerativeCore, EncodeMatchesTripleLoop) {
  std::mt19937_64 rng(2);
  VaePair v = VaePair::initialize(Modality::Verb, 4, 4, 9);
  for (double& b : v.enc_bias) b = 0.1;
  const Matrix x = random_matrix(3, 4, rng);
  const Encoded e = encode(v, x);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 8; ++c) {
      double acc = v.enc_bias[c];
      for (std::size_t k = 0; k < 4; ++k) acc += x(r, k) * v.enc_weight(k, c);
      const double got = c < 4 ? e.mu(r, c) : e.log_var(r, c - 4);
      EXPECT_LE(testing::rel_err(got, acc), 1e-6);
    }
  }
}

TEST(GenerativeCore, WrongWidthIsShapeError) {
  const VaePair v = zero_vae(3, 2);
  try {
    encode(v, Matrix(2, 4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Shape);
  }
  EXPECT_THROW(decode(v, Matrix(2, 3)), Error);
  EXPECT_THROW(reparameterize(Matrix(1, 2), Matrix(1, 3), Matrix(1, 2)), Error);
}

TEST(GenerativeCore, ReparameterizeLimits) {
  std::mt19937_64 rng(3);
  const Matrix mu = random_matrix(3, 4, rng), lv = random_matrix(3, 4, rng);
  EXPECT_EQ(reparameterize(mu, lv, Matrix(3, 4)), mu);
  const Matrix n = random_matrix(3, 4, rng);
  const Matrix z = reparameterize(mu, Matrix(3, 4), n);
  for (std::size_t i = 0; i < z.size(); ++i) {
    EXPECT_DOUBLE_EQ(z.values()[i], mu.values()[i] + n.values()[i]);
  }
}

TEST(GenerativeCore, ReparameterizedStdMatchesMonteCarlo) {
  std::mt19937_64 rng(4);
  const std::size_t draws = 100000;
  const Matrix noise = standard_normal(draws, 1, rng);
  const Matrix z = reparameterize(Matrix(draws, 1), Matrix(draws, 1, std::log(4.0)), noise);
  double sum = 0, sq = 0;
  for (double v : z.values()) {
    sum += v;
    sq += v * v;
  }
  const double mean = sum / draws;
  const double sd = std::sqrt(sq / draws - mean * mean);
  EXPECT_NEAR(sd, 2.0, 0.04);
}

TEST(GenerativeCore, DecodeZeroAndStacking) {
  std::mt19937_64 rng(5);
  const Matrix z = random_matrix(2, 3, rng);
  const Matrix zeros = decode(zero_vae(4, 3), z);
  for (double v : zeros.values()) EXPECT_EQ(v, 0.0);
  const VaePair v = VaePair::initialize(Modality::Noun, 4, 3, 7);
  const Matrix both = decode(v, z);
  for (std::size_t r = 0; r < 2; ++r) {
    const Matrix one = decode(v, Matrix(1, 3, std::vector<double>(z.row(r).begin(), z.row(r).end())));
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(one(0, c), both(r, c));
  }
}

// Orthonormal encoder columns with the transpose as decoder reconstruct any
// input in the spanned subspace; with input_dim == latent_dim that is all x.
TEST(GenerativeCore, OrthonormalEncoderInvertedByTranspose) {
  const double c = std::cos(0.7), s = std::sin(0.7);
  VaePair v = zero_vae(2, 2);
  v.enc_weight(0, 0) = c;
  v.enc_weight(1, 0) = s;
  v.enc_weight(0, 1) = -s;
  v.enc_weight(1, 1) = c;
  v.dec_weight(0, 0) = c;
  v.dec_weight(0, 1) = s;
  v.dec_weight(1, 0) = -s;
  v.dec_weight(1, 1) = c;
  const Matrix x = Matrix::from_rows({{0.3, -1.7}, {2.0, 0.25}});
  const Matrix back = decode(v, encode(v, x).mu);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(back.values()[i], x.values()[i], 1e-6);
}

TEST(GenerativeCore, KlClosedFormCases) {
  EXPECT_EQ(kl_to_standard_normal(Matrix(1, 3), Matrix(1, 3)), 0.0);
  EXPECT_DOUBLE_EQ(kl_to_standard_normal(Matrix::from_rows({{1.0, 0.0}}), Matrix(1, 2)), 0.5);
  const double kl = kl_to_standard_normal(Matrix(1, 1, 0.5), Matrix(1, 1, std::log(2.0)));
  EXPECT_NEAR(kl, 0.27843, 1e-4);
  EXPECT_NEAR(kl, oracle::kl_quadrature_1d(0.5, 2.0), 1e-8);
}

TEST(GenerativeCore, KlMatchesQuadratureOnRandomCases) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> mu(-3, 3), lv(-2.5, 2.5);
  for (int i = 0; i < 50; ++i) {
    const double m = mu(rng), l = lv(rng);
    const double kl = kl_to_standard_normal(Matrix(1, 1, m), Matrix(1, 1, l));
    EXPECT_NEAR(kl, oracle::kl_quadrature_1d(m, std::exp(l)), 1e-4) << m << " " << l;
  }
}

TEST(GenerativeCore, KlIsBatchMeanOfPerSample) {
  const Matrix mu = Matrix::from_rows({{1.0}, {0.0}, {2.0}});
  const Matrix lv(3, 1);
  const Vector per = kl_per_sample(mu, lv);
  EXPECT_EQ(per, (Vector{0.5, 0.0, 2.0}));
  EXPECT_DOUBLE_EQ(kl_to_standard_normal(mu, lv), 2.5 / 3.0);
}

TEST(GenerativeCore, KlRejectsNonFinite) {
  try {
    kl_to_standard_normal(Matrix(1, 1, std::nan("")), Matrix(1, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Numeric);
  }
  EXPECT_THROW(kl_to_standard_normal(Matrix(1, 1), Matrix(1, 1, INFINITY)), Error);
}

TEST(GenerativeCore, VaeLossTerms) {
  std::mt19937_64 rng(7);
  const VaePair v = VaePair::initialize(Modality::Skeleton, 5, 3, 11);
  const Matrix x = random_matrix(4, 5, rng);
  const GaussianLatent lat = sample_latent(v, x, random_matrix(4, 3, rng));
  const Matrix rec = decode(v, lat.z);
  double mse = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mse += (x.values()[i] - rec.values()[i]) * (x.values()[i] - rec.values()[i]);
  }
  mse /= 4.0;
  EXPECT_NEAR(vae_loss(v, x, lat, 0.0), mse, 1e-12);
  const double kl = kl_to_standard_normal(lat.mu, lat.log_var);
  EXPECT_NEAR(vae_loss(v, x, lat, 1.4) - vae_loss(v, x, lat, 0.7), 0.7 * kl, 1e-12);
}

TEST(GenerativeCore, PerfectAutoencoderHasZeroLossAtBetaZero) {
  VaePair v = zero_vae(2, 2);
  v.enc_weight(0, 0) = v.enc_weight(1, 1) = 1.0;
  v.dec_weight(0, 0) = v.dec_weight(1, 1) = 1.0;
  const Matrix x = Matrix::from_rows({{1.0, 2.0}, {-3.0, 0.5}});
  const GaussianLatent lat = sample_latent(v, x, Matrix(2, 2));
  EXPECT_EQ(vae_loss(v, x, lat, 0.0), 0.0);
}

TEST(GenerativeCore, MultimodalLossIsSumAndModalityRemovalSubtracts) {
  std::mt19937_64 rng(8);
  const VaePair s = VaePair::initialize(Modality::Skeleton, 6, 4, 1);
  const VaePair v = VaePair::initialize(Modality::Verb, 3, 2, 2);
  VaePair n = VaePair::initialize(Modality::Noun, 3, 2, 3);
  const Matrix xs = random_matrix(2, 6, rng), xv = random_matrix(2, 3, rng);
  Matrix xn = random_matrix(2, 3, rng);
  const auto ls = sample_latent(s, xs, random_matrix(2, 4, rng));
  const auto lv = sample_latent(v, xv, random_matrix(2, 2, rng));
  const auto ln = sample_latent(n, xn, random_matrix(2, 2, rng));
  const ModalityInput all[] = {{&s, &xs, &ls}, {&v, &xv, &lv}, {&n, &xn, &ln}};
  const double sum = vae_loss(s, xs, ls, 0.3) + vae_loss(v, xv, lv, 0.3) + vae_loss(n, xn, ln, 0.3);
  EXPECT_NEAR(multimodal_vae_loss(all, 0.3), sum, 1e-6);

  const double without_n = vae_loss(s, xs, ls, 0.3) + vae_loss(v, xv, lv, 0.3);
  // Zeroed input and parameters with zero noise: reconstruction 0, KL 0.
  n.enc_weight.fill(0.0);
  n.dec_weight.fill(0.0);
  xn.fill(0.0);
  const auto ln0 = sample_latent(n, xn, Matrix(2, 2));
  const ModalityInput zeroed[] = {{&s, &xs, &ls}, {&v, &xv, &lv}, {&n, &xn, &ln0}};
  EXPECT_NEAR(multimodal_vae_loss(zeroed, 0.3), without_n, 1e-12);
}

TEST(GenerativeCore, EncodeDecodeAreLinearWithoutBias) {
  std::mt19937_64 rng(9);
  const VaePair v = VaePair::initialize(Modality::Verb, 5, 3, 4);
  const Matrix x = random_matrix(1, 5, rng), y = random_matrix(1, 5, rng);
  Matrix mix(1, 5);
  for (std::size_t j = 0; j < 5; ++j) mix(0, j) = 2.0 * x(0, j) - 0.5 * y(0, j);
  const Encoded ex = encode(v, x), ey = encode(v, y), em = encode(v, mix);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_NEAR(em.mu(0, j), 2.0 * ex.mu(0, j) - 0.5 * ey.mu(0, j), 1e-12);
  }
}

TEST(GenerativeCore, InitializationIsSeededAndBounded) {
  const VaePair a = VaePair::initialize(Modality::Skeleton, 10, 4, 42);
  const VaePair b = VaePair::initialize(Modality::Skeleton, 10, 4, 42);
  EXPECT_EQ(a, b);
  const double limit = std::sqrt(6.0 / (10 + 8));
  for (double w : a.enc_weight.values()) EXPECT_LE(std::abs(w), limit);
  for (double w : a.enc_bias) EXPECT_EQ(w, 0.0);
  EXPECT_NE(a, VaePair::initialize(Modality::Skeleton, 10, 4, 43));
}

TEST(GenerativeCore, CheckpointEntryRoundTrips) {
  Container c;
  const VaePair v = VaePair::initialize(Modality::Noun, 6, 3, 5);
  v.store(c, "n");
  const Container back = Container::parse(c.serialize());
  EXPECT_EQ(VaePair::restore(back, "n"), v);
}

TEST(GenerativeCore, ValidateCatchesNonFinite) {
  VaePair v = VaePair::initialize(Modality::Skeleton, 3, 2, 1);
  v.dec_bias[1] = std::nan("");
  EXPECT_THROW(v.validate(), Error);
}

TEST(GenerativeCore, VaeLossGradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EXPECT_LT(gradcheck::vae_loss_instance(seed, 0.0), 1e-4) << seed;
    EXPECT_LT(gradcheck::vae_loss_instance(seed + 100, 0.8), 1e-4) << seed;
  }
}

TEST(GenerativeCore, ForwardPassIsBitReproducible) {
  auto run = [] {
    std::mt19937_64 rng(77);
    const VaePair v = VaePair::initialize(Modality::Skeleton, 6, 3, 5);
    const Matrix x = standard_normal(5, 6, rng);
    return sample_latent(v, x, standard_normal(5, 3, rng)).z;
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace synse
