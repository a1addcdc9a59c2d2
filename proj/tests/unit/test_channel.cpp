#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "cvqkd/channel.hpp"
#include "cvqkd/errors.hpp"

using namespace cvqkd;

namespace {

ProtocolParams random_protocol(std::mt19937_64& rng, int kind) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double vm = std::pow(10.0, -2.0 + 4.0 * u(rng));
  if (kind == 0) return ProtocolParams::coherent(vm);
  ProtocolParams p = ProtocolParams::squeezed(std::pow(10.0, -1.5 * u(rng)), vm, 1.0, kind >= 2 ? 3.0 * u(rng) : 0.0);
  if (kind == 3) p.prep_noise_trust = NoiseTrust::Untrusted;
  return p;
}

CompositeChannel random_channel(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CompositeChannel ch;
  ch.eta1 = 0.2 + 0.8 * u(rng);
  ch.eta2 = 0.2 + 0.8 * u(rng);
  ch.eps1 = 0.05 * u(rng);
  ch.eps2 = 0.05 * u(rng);
  ch.eps_atm = 0.05 * u(rng);
  const double mean = 0.02 + 0.98 * u(rng);
  ch.fading = FadingStats::from_means(mean, mean + (std::sqrt(mean) - mean) * u(rng));
  return ch;
}

}  // namespace

TEST(Channel, FadingStatsExamples) {
  const std::vector<double> constant(100, 0.7);
  const FadingStats c = fading_stats(constant);
  EXPECT_NEAR(c.mean_eta, 0.7, 1e-15);
  EXPECT_NEAR(c.mean_sqrt_eta, std::sqrt(0.7), 1e-15);
  EXPECT_NEAR(c.var_sqrt, 0.0, 1e-15);

  std::vector<double> grid(100000);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = (i + 0.5) / grid.size();
  const FadingStats g = fading_stats(grid);
  EXPECT_NEAR(g.mean_eta, 0.5, 1e-12);
  EXPECT_NEAR(g.mean_sqrt_eta, 2.0 / 3.0, 1e-6);
  EXPECT_NEAR(g.var_sqrt, 1.0 / 18.0, 1e-6);

  const std::vector<double> onoff{0.0, 1.0, 0.0, 1.0};
  const FadingStats o = fading_stats(onoff);
  EXPECT_DOUBLE_EQ(o.mean_eta, 0.5);
  EXPECT_DOUBLE_EQ(o.mean_sqrt_eta, 0.5);
  EXPECT_DOUBLE_EQ(o.var_sqrt, 0.25);
}

TEST(Channel, FadingStatsRejectsBadSamples) {
  const std::vector<double> empty;
  EXPECT_THROW(fading_stats(empty), DomainError);
  const std::vector<double> bad{0.5, 1.01};
  EXPECT_THROW(fading_stats(bad), DomainError);
  const std::vector<double> neg{-0.01};
  EXPECT_THROW(fading_stats(neg), DomainError);
  EXPECT_THROW(FadingStats::from_means(0.5, 0.4).validate(), DomainError);
}

TEST(Channel, JensenInvariantOnRandomSampleSets) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> s(1 + trial % 50);
    const double p = 0.2 + 3.0 * u(rng);
    for (auto& x : s) x = std::pow(u(rng), p);
    const FadingStats st = fading_stats(s);
    EXPECT_LE(st.mean_sqrt_eta * st.mean_sqrt_eta, st.mean_eta + 1e-15);
    EXPECT_LE(st.mean_eta, st.mean_sqrt_eta + 1e-15);
    EXPECT_GE(st.var_sqrt, -1e-15);
    EXPECT_LE(st.var_sqrt, 0.25 + 1e-15);
    EXPECT_NO_THROW(st.validate());
  }
}

TEST(Channel, PairwiseSumIsAccurate) {
  std::vector<double> v(1 << 20, 0.1);
  EXPECT_NEAR(pairwise_sum(v), 0.1 * v.size(), 1e-9);
}

TEST(Channel, HistogramCountsEverySample) {
  const std::vector<double> s{0.0, 0.1, 0.5, 0.99, 1.0};
  const Histogram h = fading_histogram(s, 10);
  std::size_t total = 0;
  for (auto c : h.counts) total += c;
  EXPECT_EQ(total, s.size());
  EXPECT_EQ(h.counts.front(), 1u);
  EXPECT_EQ(h.counts.back(), 2u);
  EXPECT_DOUBLE_EQ(h.bin_width(), 0.1);
  EXPECT_EQ(fading_histogram(s).counts.size(), 200u);
}

TEST(Channel, EffectiveExcessNoiseExamples) {
  EXPECT_NEAR(effective_excess_noise(FadingStats::from_variance(0.5, 0.01), 2.0), 0.01, 1e-15);
  EXPECT_EQ(effective_excess_noise(FadingStats::fixed(0.3), 17.0), 0.0);
  EXPECT_EQ(effective_excess_noise(FadingStats::from_variance(0.5, 0.055), 1.0), 0.0);
  EXPECT_LT(effective_excess_noise(FadingStats::from_variance(0.5, 0.01), 0.5), 0.0);
}

TEST(Channel, EpsPlusComposition) {
  CompositeChannel ch;
  ch.eta2 = 0.8;
  ch.eps1 = 0.01;
  ch.eps2 = 0.02;
  ch.eps_atm = 0.03;
  ch.fading = FadingStats::from_variance(0.6, 0.0);
  EXPECT_NEAR(ch.eps_plus(), 0.02 + 0.03 * 0.8 + 0.01 * 0.8 * 0.6, 1e-15);
  EXPECT_NEAR(ch.eta_comb(), 0.8, 0.0);
}

TEST(Channel, IdentityChannelLeavesStateUnchanged) {
  const SourceState src = build_source(ProtocolParams::squeezed(0.3, 2.0, 1.0, 0.4));
  const SharedState out = apply_composite(src, CompositeChannel{});
  EXPECT_LE((out.gamma.matrix() - src.gamma.matrix()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Channel, FixedLossLimitExample) {
  const SourceState src = build_source(ProtocolParams::squeezed(0.5, 1.5));
  CompositeChannel ch;
  ch.fading = FadingStats::from_means(0.5, std::sqrt(0.5));
  const SharedState out = apply_composite(src, ch);
  const Eigen::Matrix2d b = out.gamma.block(out.bob_mode, out.bob_mode);
  EXPECT_NEAR(b(0, 0), 1.5, 1e-12);
  EXPECT_NEAR(b(1, 1), 1.5, 1e-12);
  const Eigen::Matrix2d c = out.gamma.block(out.alice_mode, out.bob_mode);
  const Eigen::Matrix2d c0 = src.gamma.block(src.alice_mode, src.signal_mode);
  EXPECT_LE((c - std::sqrt(0.5) * c0).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Channel, FadingExampleMatchesEquivalentFixedChannel) {
  const SourceState src = build_source(ProtocolParams::squeezed(0.5, 1.5));
  CompositeChannel ch;
  ch.fading = FadingStats::from_means(0.5, 0.69);
  EXPECT_NEAR(ch.fading.var_sqrt, 0.0239, 1e-12);
  const SharedState mix = apply_composite(src, ch);
  const Eigen::Matrix2d b = mix.gamma.block(mix.bob_mode, mix.bob_mode);
  EXPECT_NEAR(b(0, 0), 1.5, 1e-12);
  EXPECT_NEAR(b(1, 1), 1.5, 1e-12);
  const Eigen::Matrix2d c = mix.gamma.block(mix.alice_mode, mix.bob_mode);
  EXPECT_NEAR(c(0, 0), 0.69 * std::sqrt(3.0), 1e-12);

  // Fixed channel eta = 0.69^2 plus the per-quadrature fading noise, written out by hand.
  const double t = 0.69 * 0.69;
  const double eps_f = effective_excess_noise(ch.fading, 2.0);
  EXPECT_NEAR(t * (2.0 - 1.0) + 1.0 + eps_f, 1.5, 1e-12);
  const SharedState fixed = apply_equivalent_fixed(src, ch);
  EXPECT_LE((fixed.gamma.matrix() - mix.gamma.matrix()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Channel, MixtureEqualsEquivalentFixedOnRandomInputs) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 2000; ++trial) {
    const SourceState src = build_source(random_protocol(rng, trial % 4));
    const CompositeChannel ch = random_channel(rng);
    const SharedState a = apply_composite(src, ch);
    const SharedState b = apply_equivalent_fixed(src, ch);
    const double scale = std::max(1.0, a.gamma.matrix().cwiseAbs().maxCoeff());
    EXPECT_LE((a.gamma.matrix() - b.gamma.matrix()).cwiseAbs().maxCoeff(), 1e-12 * scale);
  }
}

TEST(Channel, OutputIsPhysicalOnRandomInputs) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10000; ++trial) {
    const SourceState src = build_source(random_protocol(rng, trial % 4));
    const SharedState out = apply_composite(src, random_channel(rng));
    EXPECT_TRUE(is_physical(out.gamma));
  }
}

TEST(Channel, MoreFadingLowersCorrelationsOnly) {
  const SourceState src = build_source(ProtocolParams::squeezed(0.2, 4.0));
  CompositeChannel ch;
  double prev_corr = 1e9;
  Eigen::Matrix2d first_b = Eigen::Matrix2d::Zero();
  for (int k = 0; k <= 20; ++k) {
    ch.fading = FadingStats::from_variance(0.5, 0.01 * k);
    const SharedState out = apply_composite(src, ch);
    const double corr = std::fabs(out.gamma.block(out.alice_mode, out.bob_mode)(0, 0));
    const Eigen::Matrix2d b = out.gamma.block(out.bob_mode, out.bob_mode);
    if (k == 0) first_b = b;
    EXPECT_LT(corr, prev_corr);
    EXPECT_LE((b - first_b).cwiseAbs().maxCoeff(), 1e-14);
    prev_corr = corr;
  }
}

TEST(Channel, RejectsInvalidChannels) {
  CompositeChannel ch;
  ch.eta1 = 0.0;
  EXPECT_THROW(ch.validate(), DomainError);
  ch.eta1 = 1.0;
  ch.eps2 = -0.1;
  EXPECT_THROW(ch.validate(), DomainError);
}

TEST(Channel, FadingStatsJson) {
  const std::string j = FadingStats::from_variance(0.5, 0.01).to_json();
  EXPECT_NE(j.find("\"var_sqrt\""), std::string::npos);
  EXPECT_NE(j.find("\"mean_sqrt_eta\""), std::string::npos);
}
