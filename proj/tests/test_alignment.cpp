#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "gradient_checks.hpp"
#include "synse/alignment.hpp"
#include "test_util.hpp"

namespace synse {
namespace {

using testing::random_matrix;

struct Toy {
  LabeledFeatureSet data;
  PosEmbeddingTable table;
};

Toy toy(std::uint64_t seed, std::size_t visual = 6, std::size_t embed = 4) {
  std::mt19937_64 rng(seed);
  Toy t;
  t.table.dim = embed;
  t.table.class_ids = {0, 1, 2};
  t.table.verb_vec = random_matrix(3, embed, rng);
  t.table.noun_vec = random_matrix(3, embed, rng);
  std::vector<ClassId> labels;
  for (int i = 0; i < 30; ++i) labels.push_back(i % 3);
  t.data = make_feature_set(random_matrix(30, visual, rng), labels, {0, 1, 2}, "toy");
  return t;
}

TrainConfig short_config(std::uint64_t seed, double alpha = 1.0) {
  TrainConfig c;
  c.learning_rate = 1e-3;
  c.batch_size = 8;
  c.schedule = {10, 4, 0.05, 6, alpha, 2};
  c.latent_dims = {4, 2};
  c.seed = seed;
  return c;
}

TEST(Schedule, Ntu60Values) {
  const auto s = AnnealSchedule::ntu60();
  EXPECT_EQ(anneal_coefficients(500, s).beta, 0.0);
  EXPECT_EQ(anneal_coefficients(500, s).alpha, 0.0);
  EXPECT_NEAR(anneal_coefficients(1100, s).beta, 0.21, 1e-12);
  EXPECT_EQ(anneal_coefficients(1100, s).alpha, 0.0);
  EXPECT_EQ(anneal_coefficients(1450, s).alpha, 1.0);
  EXPECT_EQ(anneal_coefficients(1700, s).beta, 0.0);
  EXPECT_EQ(anneal_coefficients(1700, s).alpha, 0.0);
  EXPECT_EQ(s.total_epochs(), 3400);
}

TEST(Schedule, Ntu120Values) {
  const auto s = AnnealSchedule::ntu120();
  EXPECT_EQ(s.cycle_length_epochs, 1900);
  EXPECT_EQ(anneal_coefficients(1450, s).alpha, 0.0);
  EXPECT_EQ(anneal_coefficients(1500, s).alpha, 1.0);
  EXPECT_EQ(anneal_coefficients(1900, s).beta, 0.0);
}

TEST(Schedule, PeriodicAndMonotoneWithinCycle) {
  const auto s = AnnealSchedule::ntu60();
  for (std::int64_t e = 0; e < s.cycle_length_epochs; ++e) {
    const auto a = anneal_coefficients(e, s), b = anneal_coefficients(e + s.cycle_length_epochs, s);
    EXPECT_EQ(a.beta, b.beta);
    EXPECT_EQ(a.alpha, b.alpha);
    if (e > 0) EXPECT_GE(a.beta, anneal_coefficients(e - 1, s).beta);
  }
}

TEST(Schedule, ValidationRejectsBadValues) {
  AnnealSchedule s;
  s.cycle_length_epochs = 0;
  EXPECT_THROW(s.validate(), Error);
  s = AnnealSchedule{};
  s.num_cycles = 0;
  EXPECT_THROW(s.validate(), Error);
  TrainConfig c;
  c.latent_dims = {100, 40};
  try {
    c.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parameter);
  }
}

TEST(Geometry, DefaultWidthsAgree) {
  const AlignedModel m = AlignedModel::initialize(20, 8, TrainConfig{});
  EXPECT_EQ(m.vae_s.latent_dim, 100u);
  EXPECT_EQ(m.vae_v.latent_dim + m.vae_n.latent_dim, 100u);
}

TEST(Geometry, MismatchIsShapeError) {
  AlignedModel m = AlignedModel::initialize(6, 4, short_config(0));
  m.vae_s = VaePair::initialize(Modality::Skeleton, 6, 6, 1);
  try {
    m.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Shape);
  }
}

TEST(Geometry, ConcatAndSplitAreInverse) {
  std::mt19937_64 rng(1);
  const Matrix zv = random_matrix(3, 2, rng), zn = random_matrix(3, 2, rng);
  const Matrix zl = concat_pos_latents(zv, zn);
  EXPECT_EQ(zl.cols(), 4u);
  EXPECT_EQ(zl(1, 0), zv(1, 0));
  EXPECT_EQ(zl(1, 3), zn(1, 1));
  auto [a, b] = split_skeleton_latent(zl);
  EXPECT_EQ(a, zv);
  EXPECT_EQ(b, zn);
  EXPECT_THROW(split_skeleton_latent(Matrix(1, 3)), Error);
  EXPECT_THROW(concat_pos_latents(Matrix(2, 1), Matrix(3, 1)), Error);
}

TEST(CrossModal, MatchesHandComputedNorms) {
  std::mt19937_64 rng(2);
  const AlignedModel m = AlignedModel::initialize(6, 4, short_config(3));
  const Matrix xs = random_matrix(2, 6, rng), ev = random_matrix(2, 4, rng),
               en = random_matrix(2, 4, rng);
  const Matrix zl = random_matrix(2, 4, rng), zsv = random_matrix(2, 2, rng),
               zsn = random_matrix(2, 2, rng);
  auto norms = [](const Matrix& a, const Matrix& b) {
    double s = 0;
    for (std::size_t r = 0; r < a.rows(); ++r) {
      double q = 0;
      for (std::size_t c = 0; c < a.cols(); ++c) q += (a(r, c) - b(r, c)) * (a(r, c) - b(r, c));
      s += std::sqrt(q + kNormEpsilon);
    }
    return s;
  };
  const double want = (norms(xs, decode(m.vae_s, zl)) + norms(ev, decode(m.vae_v, zsv)) +
                       norms(en, decode(m.vae_n, zsn))) /
                      2.0;
  EXPECT_NEAR(cross_modal_loss(xs, ev, en, zl, zsv, zsn, m), want, 1e-12);
}

TEST(CrossModal, ObjectiveReportsSameValue) {
  auto in = gradcheck::random_objective(5);
  const auto v = evaluate_objective(in.model, in.batch, in.noise, {1.0, 0.3, 1.0}, nullptr);
  const GaussianLatent ls = sample_latent(in.model.vae_s, in.batch.x_s, in.noise.s);
  const GaussianLatent lv = sample_latent(in.model.vae_v, in.batch.e_v, in.noise.v);
  const GaussianLatent ln = sample_latent(in.model.vae_n, in.batch.e_n, in.noise.n);
  auto [zsv, zsn] = split_skeleton_latent(ls.z);
  const double cmr = cross_modal_loss(in.batch.x_s, in.batch.e_v, in.batch.e_n,
                                      concat_pos_latents(lv.z, ln.z), zsv, zsn, in.model);
  EXPECT_NEAR(v.cmr, cmr, 1e-12);
  const double vae = vae_loss(in.model.vae_s, in.batch.x_s, ls, 0.3) +
                     vae_loss(in.model.vae_v, in.batch.e_v, lv, 0.3) +
                     vae_loss(in.model.vae_n, in.batch.e_n, ln, 0.3);
  EXPECT_NEAR(v.vae, vae, 1e-10);
  EXPECT_NEAR(v.total, vae + cmr, 1e-10);
}

TEST(CrossModal, TotalLossCombination) {
  EXPECT_EQ(total_loss(2.0, 3.0, 0.0), 2.0);
  EXPECT_EQ(total_loss(2.0, 3.0, 1.0), 5.0);
}

TEST(CrossModal, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EXPECT_LT(gradcheck::cross_modal_instance(seed), 1e-4) << seed;
  }
}

TEST(TotalLoss, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EXPECT_LT(gradcheck::total_loss_instance(seed + 1000), 1e-4) << seed;
  }
}

TEST(Training, AlphaZeroMatchesIndependentVaes) {
  const Toy t = toy(4);
  const TrainConfig cfg = short_config(9, 0.0);
  const AlignedModel init = AlignedModel::initialize(6, 4, cfg);
  const AlignedModel joint = train(init, t.data, t.table);
  EXPECT_EQ(joint.vae_s, train_single_vae(init.vae_s, t.data.features, cfg));
  EXPECT_EQ(joint.vae_v, train_single_vae(init.vae_v, t.table.verbs_for(t.data.labels), cfg));
  EXPECT_EQ(joint.vae_n, train_single_vae(init.vae_n, t.table.nouns_for(t.data.labels), cfg));
}

TEST(Training, DeterministicForFixedSeed) {
  const Toy t = toy(5);
  const TrainConfig cfg = short_config(11);
  const AlignedModel a = train(AlignedModel::initialize(6, 4, cfg), t.data, t.table);
  const AlignedModel b = train(AlignedModel::initialize(6, 4, cfg), t.data, t.table);
  EXPECT_EQ(a.vae_s, b.vae_s);
  EXPECT_EQ(a.vae_n, b.vae_n);
  ASSERT_EQ(a.trajectory.size(), 20u);
  for (std::size_t i = 0; i < a.trajectory.size(); ++i) {
    EXPECT_EQ(a.trajectory[i].total_loss, b.trajectory[i].total_loss);
  }
  const AlignedModel c = train(AlignedModel::initialize(6, 4, short_config(12)), t.data, t.table);
  EXPECT_NE(a.vae_s, c.vae_s);
}

TEST(Training, TrajectoryFollowsSchedule) {
  const Toy t = toy(6);
  const TrainConfig cfg = short_config(1);
  const AlignedModel m = train(AlignedModel::initialize(6, 4, cfg), t.data, t.table);
  for (const auto& r : m.trajectory) {
    const auto c = anneal_coefficients(r.epoch, cfg.schedule);
    EXPECT_EQ(r.beta, c.beta);
    EXPECT_EQ(r.alpha, c.alpha);
    if (r.alpha == 0.0) EXPECT_EQ(r.cmr_loss, 0.0);
    EXPECT_TRUE(std::isfinite(r.total_loss));
  }
}

TEST(Training, LossDecreasesOnToyData) {
  const Toy t = toy(7);
  TrainConfig cfg = short_config(2, 0.0);
  cfg.schedule = {200, 198, 0.0, 199, 0.0, 1};
  const AlignedModel m = train(AlignedModel::initialize(6, 4, cfg), t.data, t.table);
  EXPECT_LT(m.trajectory.back().vae_loss, m.trajectory.front().vae_loss);
}

TEST(Training, EarlyStopCallback) {
  const Toy t = toy(8);
  TrainOptions opt;
  opt.on_epoch = [](const EpochRecord& r) { return r.epoch < 2; };
  const AlignedModel m = train(AlignedModel::initialize(6, 4, short_config(0)), t.data, t.table, opt);
  EXPECT_EQ(m.trained_epochs, 3);
}

TEST(Training, OverflowingLossRaisesDivergence) {
  const Toy t = toy(9);
  Toy big = t;
  for (double& v : big.data.features.values()) v *= 1e200;
  TrainConfig cfg = short_config(0);
  try {
    train(AlignedModel::initialize(6, 4, cfg), big.data, big.table);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Divergence);
  }
}

TEST(Training, WidthMismatchRejected) {
  const Toy t = toy(10, 5);
  EXPECT_THROW(train(AlignedModel::initialize(6, 4, short_config(0)), t.data, t.table), Error);
}

TEST(Checkpoint, SaveLoadRoundTrip) {
  const Toy t = toy(11);
  const AlignedModel m = train(AlignedModel::initialize(6, 4, short_config(3)), t.data, t.table);
  const auto path = testing::scratch_dir() / "aligned.syn";
  m.save(path);
  const AlignedModel back = AlignedModel::load(path);
  EXPECT_EQ(back.vae_s, m.vae_s);
  EXPECT_EQ(back.vae_v, m.vae_v);
  EXPECT_EQ(back.vae_n, m.vae_n);
  EXPECT_EQ(back.config, m.config);
  EXPECT_EQ(back.trained_epochs, m.trained_epochs);
}

}  // namespace
}  // namespace synse
