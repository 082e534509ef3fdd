#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "stgan/losses.hpp"
#include "stgan/networks.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"

using namespace stgan;
using nn::Shape;
using nn::Tensor;
using stgan::testing::check_gradients;
using stgan::testing::random_tensor;

namespace {

Tensor<double> filled(Shape s, double v) {
  Tensor<double> t(s);
  std::fill(t.data.begin(), t.data.end(), v);
  return t;
}

}  // namespace

TEST(DiscriminatorLoss, ClosedForms) {
  EXPECT_NEAR(losses::discriminator_loss(filled({1, 1, 4, 4}, 0.5), filled({1, 1, 4, 4}, 0.5)), -1.3862944, 1e-6);
  EXPECT_NEAR(losses::discriminator_loss(filled({1, 1, 1, 1}, 0.9), filled({1, 1, 1, 1}, 0.1)), -0.2107210, 1e-6);
  EXPECT_NEAR(losses::discriminator_loss(filled({1, 1, 3, 3}, 1 - 1e-7), filled({1, 1, 3, 3}, 1e-7)), 0.0, 1e-6);
  // Scores beyond the clamp stay finite.
  EXPECT_NEAR(losses::discriminator_loss(filled({1, 1, 1, 1}, 0.0), filled({1, 1, 1, 1}, 1.0)), 2 * std::log(1e-7),
              1e-6);
}

TEST(DiscriminatorLoss, NeverPositive) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const auto r = random_tensor({2, 1, 5, 5}, rng, 0.0, 1.0), f = random_tensor({2, 1, 5, 5}, rng, 0.0, 1.0);
    EXPECT_LE(losses::discriminator_loss(r, f), 0.0);
  }
}

TEST(GeneratorAdvLoss, ClosedForms) {
  EXPECT_NEAR(losses::generator_adv_loss(filled({1, 1, 14, 14}, 0.5)), 0.6931472, 1e-6);
  EXPECT_NEAR(losses::generator_adv_loss(filled({1, 1, 14, 14}, 1.0)), 0.0, 1e-6);
  EXPECT_NEAR(losses::generator_adv_loss(filled({3, 1, 14, 14}, 0.5), 3), 2.0794415, 1e-6);
  EXPECT_GE(losses::generator_adv_loss(filled({1, 1, 2, 2}, 0.999)), 0.0);
}

TEST(SpatialL1, ClosedForms) {
  std::mt19937_64 rng(2);
  const auto x = random_tensor({1, 1, 8, 8}, rng);
  EXPECT_EQ(losses::spatial_l1(x, x), 0.0);
  EXPECT_NEAR(losses::spatial_l1(filled({1, 1, 8, 8}, 0.2), filled({1, 1, 8, 8}, 0.5)), 0.3, 1e-6);

  // Two frames with mean abs diffs 0.3 and 0.1.
  Tensor<double> pred = filled({2, 1, 4, 4}, 0.0), real(Shape{2, 1, 4, 4});
  std::fill(real.plane(0, 0), real.plane(0, 0) + 16, 0.3);
  std::fill(real.plane(1, 0), real.plane(1, 0) + 16, -0.1);
  EXPECT_NEAR(losses::spatial_l1(pred, real, 2), 0.4, 1e-6);
}

TEST(TemporalLoss, ClosedForms) {
  EXPECT_EQ(losses::temporal_loss(filled({1, 1, 4, 4}, 0.3), filled({1, 1, 4, 4}, 0.3)), 0.0);
  EXPECT_NEAR(losses::temporal_loss(filled({1, 1, 4, 4}, 0.5), filled({1, 1, 4, 4}, 0.1)), 0.16, 1e-6);
  EXPECT_NEAR(losses::temporal_loss(Tensor<double>(Shape{1, 1, 1, 2}, {0, 1}), Tensor<double>(Shape{1, 1, 1, 2}, {1, 1})),
              0.5, 1e-6);
  EXPECT_NEAR(losses::temporal_spatial_loss(filled({1, 1, 4, 4}, 0.5), filled({1, 1, 4, 4}, 0.1)), 0.16, 1e-6);
  EXPECT_EQ(losses::temporal_spatial_loss(filled({1, 1, 4, 4}, -0.7), filled({1, 1, 4, 4}, -0.7)), 0.0);
}

TEST(Losses, ShapeMismatchIsRejected) {
  EXPECT_THROW_CODE(losses::spatial_l1(filled({1, 1, 4, 4}, 0), filled({1, 1, 4, 5}, 0)), Errc::ShapeError);
  EXPECT_THROW_CODE(losses::temporal_loss(filled({1, 1, 4, 4}, 0), filled({2, 1, 4, 4}, 0)), Errc::ShapeError);
  EXPECT_THROW_CODE(losses::temporal_spatial_loss(filled({1, 1, 3, 4}, 0), filled({1, 1, 4, 4}, 0)), Errc::ShapeError);
}

TEST(Losses, NonFiniteInputsRaiseNaNLoss) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW_CODE(losses::discriminator_loss(filled({1, 1, 2, 2}, nan), filled({1, 1, 2, 2}, 0.5)), Errc::NaNLoss);
  EXPECT_THROW_CODE(losses::generator_adv_loss(filled({1, 1, 2, 2}, nan)), Errc::NaNLoss);
  EXPECT_THROW_CODE(losses::spatial_l1(filled({1, 1, 2, 2}, nan), filled({1, 1, 2, 2}, 0)), Errc::NaNLoss);
  EXPECT_THROW_CODE(losses::temporal_loss(filled({1, 1, 2, 2}, 0), filled({1, 1, 2, 2}, nan)), Errc::NaNLoss);
  LossRecord r;
  r.l1_Gs = std::numeric_limits<double>::infinity();
  EXPECT_THROW_CODE(full_generator_objective(r, 100, 10), Errc::NaNLoss);
  EXPECT_EQ(r.first_nonfinite(), "l1_Gs");
}

TEST(Losses, InvariantUnderSharedPixelPermutation) {
  std::mt19937_64 rng(3);
  const auto a = random_tensor({1, 1, 8, 8}, rng), b = random_tensor({1, 1, 8, 8}, rng);
  std::vector<std::size_t> perm(64);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Tensor<double> pa(a.shape), pb(b.shape);
  for (std::size_t i = 0; i < 64; ++i) {
    pa.data[i] = a.data[perm[i]];
    pb.data[i] = b.data[perm[i]];
  }
  EXPECT_NEAR(losses::spatial_l1(a, b), losses::spatial_l1(pa, pb), 1e-12);
  EXPECT_NEAR(losses::temporal_loss(a, b), losses::temporal_loss(pa, pb), 1e-12);
}

TEST(FullObjective, WorkedExample) {
  LossRecord r;
  r.adv_Gs = r.adv_Fs = 0.7;
  r.l1_Gs = 0.05;
  r.l1_Fs = 0.04;
  r.lt_Gt = 0.01;
  r.lt_Ft = 0.02;
  r.lts_GtGs = 0.03;
  r.lts_FtFs = 0.01;
  EXPECT_NEAR(full_generator_objective(r, 100, 10), 11.1, 1e-6);
  EXPECT_NEAR(full_generator_objective(r, 0, 0), 1.4, 1e-12);
  EXPECT_EQ(full_generator_objective(LossRecord{}, 100, 10), 0.0);

  auto c = [](double v) { return nn::constant(Tensor<double>(Shape{1, 1, 1, 1}, {v})); };
  const auto g = losses::full_generator_objective<double>(c(0.7), c(0.7), c(0.05), c(0.04), c(0.01), c(0.02),
                                                          c(0.03), c(0.01), {100, 10});
  EXPECT_NEAR(g->value.data[0], 11.1, 1e-6);
  // Spatial-only: temporal terms absent.
  const auto s = losses::full_generator_objective<double>(c(0.7), c(0.7), c(0.05), c(0.04), nullptr, nullptr,
                                                          nullptr, nullptr, {100, 10});
  EXPECT_NEAR(s->value.data[0], 10.4, 1e-6);
}

TEST(LossRecord, ValuesRoundTrip) {
  std::array<double, 11> v{};
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.1 * static_cast<double>(i + 1);
  EXPECT_EQ(LossRecord::from_values(v).values(), v);
  EXPECT_EQ(LossRecord::kFields[10], "total_generator");
  EXPECT_TRUE(LossRecord::from_values(v).first_nonfinite().empty());
}

// Each loss against central differences on random 8x8 frames.
TEST(LossGradients, MatchFiniteDifferences) {
  std::mt19937_64 rng(4);
  auto pred = nn::parameter(random_tensor({3, 1, 8, 8}, rng, -0.9, 0.9));
  auto real = nn::parameter(random_tensor({3, 1, 8, 8}, rng, -0.9, 0.9));
  auto sr = nn::parameter(random_tensor({3, 1, 8, 8}, rng, 0.05, 0.95));
  auto sf = nn::parameter(random_tensor({3, 1, 8, 8}, rng, 0.05, 0.95));

  struct Case {
    const char* name;
    std::function<nn::Var<double>()> f;
    std::vector<nn::Var<double>> leaves;
  };
  const std::vector<Case> cases{
      {"discriminator", [&] { return losses::discriminator_loss(sr, sf, 3); }, {sr, sf}},
      {"generator_adv", [&] { return losses::generator_adv_loss(sf, 3); }, {sf}},
      {"spatial_l1", [&] { return losses::spatial_l1(pred, real, 3); }, {pred, real}},
      {"temporal", [&] { return losses::temporal_loss(pred, real); }, {pred, real}},
      {"temporal_spatial", [&] { return losses::temporal_spatial_loss(pred, real); }, {pred, real}},
  };
  for (const auto& c : cases) {
    const auto r = check_gradients(c.f, c.leaves, 120, 9);
    EXPECT_GE(r.checked, 100) << c.name;
    EXPECT_LT(r.max_rel_error, 1e-3) << c.name;
  }
}

// l_ts couples the temporal generator to the spatial one: gradients reach both.
TEST(LossGradients, TemporalSpatialReachesBothGenerators) {
  std::mt19937_64 rng(5);
  UNetGenerator<double> gs({1, 1, 2, 4}, rng), gt({2, 1, 2, 4}, rng);
  stgan::testing::spread_parameters(gs.parameters(), rng);
  stgan::testing::spread_parameters(gt.parameters(), rng);
  const auto u = random_tensor({3, 1, 16, 16}, rng);
  const auto v = random_tensor({3, 1, 16, 16}, rng, -0.9, 0.9);
  const auto v_last = nn::constant(Tensor<double>(Shape{1, 1, 16, 16}, {v.plane(2, 0), v.plane(2, 0) + 256}));
  auto objective = [&] {
    auto fake = gs.forward(nn::constant(u));
    auto l1 = losses::spatial_l1(fake, nn::constant(v), 3);
    auto history = nn::slice_channels(nn::reshape(fake, Shape{1, 3, 16, 16}), 0, 2);
    auto lts = losses::temporal_spatial_loss(gt.forward(history), v_last);
    return nn::weighted_sum<double>({l1, lts}, {100.0, 10.0});
  };
  auto params = gs.parameters();
  const auto t_params = gt.parameters();
  params.insert(params.end(), t_params.begin(), t_params.end());
  const auto r = check_gradients(objective, params, 200, 6);
  EXPECT_GE(r.checked, 100);
  EXPECT_LT(r.max_rel_error, 1e-3);

  auto nonzero = [](const std::vector<nn::Var<double>>& ps) {
    for (const auto& p : ps)
      for (double g : p->grad.data)
        if (g != 0.0) return true;
    return false;
  };
  EXPECT_TRUE(nonzero(gs.parameters()));
  EXPECT_TRUE(nonzero(gt.parameters()));
}
