#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "docp/hessian_probe.hpp"
#include "docp/harness/verify.hpp"

using namespace docp;

namespace {

auto diagonal(std::vector<double> d) {
  return [d = std::move(d)](std::span<const double> v) {
    std::vector<double> out(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) out[i] = d[i] * v[i];
    return out;
  };
}

ProbeConfig probes(std::size_t n, ProbeDistribution dist) { return ProbeConfig{n, dist, 1e-4, 1e4}; }

const BatchSeed kSeed{9, 0, Channel::Probe};

}  // namespace

TEST(SampleProbe, RademacherEntriesAreUnitSigns) {
  const auto v = sample_probe(ProbeDistribution::Rademacher, 4, kSeed);
  for (double e : v) EXPECT_TRUE(e == 1.0 || e == -1.0);
  const auto big = sample_probe(ProbeDistribution::Rademacher, 1000, kSeed);
  int plus = 0;
  for (double e : big) plus += e > 0;
  EXPECT_GT(plus, 400);
  EXPECT_LT(plus, 600);
}

TEST(SampleProbe, StandardNormalMoments) {
  const auto v = sample_probe(ProbeDistribution::StandardNormal, 100000, kSeed);
  double mean = 0.0;
  for (double e : v) mean += e;
  mean /= static_cast<double>(v.dim());
  double var = 0.0;
  for (double e : v) var += (e - mean) * (e - mean);
  var /= static_cast<double>(v.dim() - 1);
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_GE(var, 0.97);
  EXPECT_LE(var, 1.03);
}

TEST(SampleProbe, SeededAndRejectsZeroDim) {
  EXPECT_EQ(sample_probe(ProbeDistribution::StandardNormal, 8, kSeed),
            sample_probe(ProbeDistribution::StandardNormal, 8, kSeed));
  EXPECT_NE(sample_probe(ProbeDistribution::StandardNormal, 8, kSeed),
            sample_probe(ProbeDistribution::StandardNormal, 8, BatchSeed{9, 1, Channel::Probe}));
  EXPECT_THROW(sample_probe(ProbeDistribution::Rademacher, 0, kSeed), ContractError);
}

TEST(Hutchinson, ExactOnDiagonalWithRademacher) {
  for (std::size_t n : {1u, 3u, 16u}) {
    const auto est = hutchinson_diag(diagonal({3.0, 5.0}), 2, probes(n, ProbeDistribution::Rademacher), kSeed);
    EXPECT_EQ(est.values, (std::vector<double>{3.0, 5.0})) << "n = " << n;
  }
}

TEST(Hutchinson, TwoByTwoConvergesWithManyProbes) {
  auto hvp = [](std::span<const double> v) { return std::vector<double>{2.0 * v[0] + v[1], v[0] + 3.0 * v[1]}; };
  const auto est = hutchinson_diag(hvp, 2, probes(100000, ProbeDistribution::Rademacher), kSeed);
  EXPECT_NEAR(est.values[0], 2.0, 0.05 * 2.0);
  EXPECT_NEAR(est.values[1], 3.0, 0.05 * 3.0);
}

TEST(Hutchinson, SingleNormalProbeOnIdentityIsSquaredProbe) {
  auto identity = [](std::span<const double> v) { return std::vector<double>(v.begin(), v.end()); };
  const auto est = hutchinson_diag(identity, 5, probes(1, ProbeDistribution::StandardNormal), kSeed);
  const auto v = sample_probe(ProbeDistribution::StandardNormal, 5, kSeed);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(est.values[i], v[i] * v[i]);
}

TEST(Hutchinson, WrongHvpDimensionIsAnError) {
  auto bad = [](std::span<const double>) { return std::vector<double>(3, 1.0); };
  EXPECT_THROW(hutchinson_diag(bad, 2, probes(1, ProbeDistribution::Rademacher), kSeed), ContractError);
}

TEST(Hutchinson, ProbeConfigInvariants) {
  EXPECT_THROW(probes(0, ProbeDistribution::Rademacher).validate(), ContractError);
  EXPECT_THROW((ProbeConfig{1, ProbeDistribution::Rademacher, 0.0, 1.0}.validate()), ContractError);
  EXPECT_THROW((ProbeConfig{1, ProbeDistribution::Rademacher, 2.0, 1.0}.validate()), ContractError);
}

TEST(Hutchinson, FixedMatrixReportPasses) {
  const auto rep = harness::verify_hutchinson(100000, 0);
  EXPECT_LE(rep.max_rel_error, 0.05);
  EXPECT_EQ(rep.diagonal_exact_error, 0.0);
  EXPECT_GE(rep.variance_ratio_4, 1.0 / 1.5);
  EXPECT_LE(rep.variance_ratio_4, 1.5);
  EXPECT_GE(rep.variance_ratio_16, 1.0 / 1.5);
  EXPECT_LE(rep.variance_ratio_16, 1.5);
  EXPECT_TRUE(rep.pass);
}

TEST(ClipDiag, Examples) {
  const ProbeConfig cfg = probes(1, ProbeDistribution::Rademacher);
  EXPECT_EQ(clip_diag(DiagEstimate{{-0.5, 0.00005, 2.0}}, cfg).values, (std::vector<double>{1e-4, 1e-4, 2.0}));
  EXPECT_EQ(clip_diag(DiagEstimate{{1e9}}, cfg).values, (std::vector<double>{1e4}));
  const DiagEstimate inside{{1e-4, 0.5, 1e4}};
  EXPECT_EQ(clip_diag(inside, cfg).values, inside.values);
}

TEST(ClipDiag, IdempotentAndMonotone) {
  const ProbeConfig cfg = probes(1, ProbeDistribution::Rademacher);
  const DiagEstimate raw{{-3.0, 1e-7, 0.2, 5e3, 2e5}};
  const auto once = clip_diag(raw, cfg);
  EXPECT_EQ(clip_diag(once, cfg).values, once.values);
  for (double v : once.values) {
    EXPECT_GE(v, cfg.clip_lo);
    EXPECT_LE(v, cfg.clip_hi);
  }
  DiagEstimate larger = raw;
  for (double& v : larger.values) v += 0.1;
  const auto clipped_larger = clip_diag(larger, cfg);
  for (std::size_t i = 0; i < raw.values.size(); ++i) EXPECT_LE(once.values[i], clipped_larger.values[i]);
}

TEST(ClipDiag, NanIsANumericError) {
  EXPECT_THROW(clip_diag(DiagEstimate{{1.0, std::nan("")}}, probes(1, ProbeDistribution::Rademacher)), NumericError);
}
