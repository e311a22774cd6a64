#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "rmst/errors.hpp"
#include "rmst/moments.hpp"

using namespace rmst;

namespace {

const LogBetaDirecting kDirecting(1.0, Baseline::exponential(0.3));

CompoundPriorSpec spec_with(ScoreDistribution pi) { return {kDirecting, pi}; }

std::vector<Observation> small_data() {
  return {{0.6, true, Group::one},  {1.1, false, Group::one}, {1.9, true, Group::one},
          {2.4, true, Group::two},  {3.0, true, Group::two},  {3.0, true, Group::one},
          {3.8, false, Group::two}, {4.4, true, Group::two}};
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("prior mean identity") {
  const LaplaceEvaluator prior(spec_with(ScoreDistribution(0.5, 0.25, 0.25)));
  const MomentSpec s1{{Group::one}, {1}, {1}, 0.0, 5.0};
  CHECK(mixed_moment(MomentSpec{{Group::one}, {1}, {0}, 0.0, 5.0}, prior) == 1.0);
  // Group 1 sees jump types (1,1) and (1,0), so its marginal exponent is 0.75 lambda u.
  const double lam = 0.75 * 0.3;
  CHECK(rel(mixed_moment(s1, prior), (1 - std::exp(-5 * lam)) / lam) < 1e-5);

  const LaplaceEvaluator shared(spec_with(ScoreDistribution(1, 0, 0)));
  CHECK(rel(mixed_moment(s1, shared), (1 - std::exp(-1.5)) / 0.3) < 1e-5);
  const double k2 = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      [](double u) { return 2 * u * std::exp(-0.3 * u); }, 0.0, 5.0);
  CHECK(rel(mixed_moment(MomentSpec{{Group::two}, {2}, {1}, 0.0, 5.0}, shared), k2) < 1e-5);
}

TEST_CASE("table base cases and bounds") {
  const LaplaceEvaluator post(spec_with(ScoreDistribution(0.4, 0.3, 0.3)), SurvivalDataset(small_data()));
  const MomentTable table(post, {Group::one, Group::two}, {1, 1}, 0.0, 5.0,
                          {{3, 0}, {0, 3}, {2, 2}, {1, 1}, {2, 0}, {0, 2}});
  CHECK(table.moment({0, 0}) == 1.0);
  for (const Multi& r : {Multi{1, 0}, Multi{2, 2}, Multi{0, 3}}) {
    CHECK(table.values(r).back() == 0.0);
    const int order = r[0] + r[1];
    CHECK(table.moment(r) <= std::pow(5.0, order));
    for (double v : table.values(r)) CHECK(v >= 0.0);
  }
  CHECK(table.moment({1, 1}) <= std::sqrt(table.moment({2, 0}) * table.moment({0, 2})));
  CHECK(table.grid().front() == 0.0);
  CHECK(table.grid().back() == 5.0);
  for (double b : post.breakpoints_in(0.0, 5.0)) {
    CHECK(std::find(table.grid().begin(), table.grid().end(), b) != table.grid().end());
  }
  std::ostringstream csv;
  table.write_csv(csv);
  CHECK(csv.str().rfind("r1,r2,k1,k2,s,t,value\n", 0) == 0);
}

TEST_CASE("monotone in the horizon for k = 1") {
  const LaplaceEvaluator post(spec_with(ScoreDistribution(0.4, 0.3, 0.3)), SurvivalDataset(small_data()));
  double prev = 0.0;
  for (double t : {1.0, 2.0, 3.5, 5.0}) {
    const double v = mixed_moment(MomentSpec{{Group::one, Group::two}, {1, 1}, {2, 1}, 0.0, t}, post);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("collapse consistency") {
  const LaplaceEvaluator post(spec_with(ScoreDistribution(0.4, 0.3, 0.3)), SurvivalDataset(small_data()));
  const double pair = mixed_moment(MomentSpec{{Group::one, Group::one}, {1, 1}, {1, 1}, 0.0, 5.0}, post);
  const double single = mixed_moment(MomentSpec{{Group::one}, {1}, {2}, 0.0, 5.0}, post);
  CHECK(rel(pair, single) < 1e-8);
}

TEST_CASE("linear combinations") {
  const LaplaceEvaluator post(spec_with(ScoreDistribution(0.4, 0.3, 0.3)), SurvivalDataset(small_data()));
  const std::vector<LinearTerm> one{{Group::one, 1, 1, 1.0}};
  CHECK(linear_combination_moment(one, 0, 5.0, post) == 1.0);
  CHECK(rel(linear_combination_moment(one, 2, 5.0, post),
            mixed_moment(MomentSpec{{Group::one}, {1}, {2}, 0.0, 5.0}, post)) < 1e-12);

  const auto md = mean_difference_moments(2, 5.0, post);
  const MomentTable t(post, {Group::one, Group::two}, {1, 1}, 0.0, 5.0, {{2, 0}, {1, 1}, {0, 2}});
  const double composed = t.moment({2, 0}) - 2 * t.moment({1, 1}) + t.moment({0, 2});
  CHECK(rel(md.values[1], composed) < 1e-10);
  CHECK(md.values[1] >= md.values[0] * md.values[0]);

  const auto vd = variance_difference_moments(1, 5.0, post);
  const double m1k2 = mixed_moment(MomentSpec{{Group::one}, {2}, {1}, 0.0, 5.0}, post);
  const double m1sq = mixed_moment(MomentSpec{{Group::one}, {1}, {2}, 0.0, 5.0}, post);
  const double m2k2 = mixed_moment(MomentSpec{{Group::two}, {2}, {1}, 0.0, 5.0}, post);
  const double m2sq = mixed_moment(MomentSpec{{Group::two}, {1}, {2}, 0.0, 5.0}, post);
  CHECK(rel(vd.values[0], m1k2 - m1sq - m2k2 + m2sq) < 1e-9);

  CombinationOptions capped;
  capped.max_compositions = 10;
  CHECK_THROWS_AS(mean_difference_moments(6, 5.0, post, capped), ConfigError);
}

TEST_CASE("exchangeable prior forces a zero difference") {
  const LaplaceEvaluator post(spec_with(ScoreDistribution(1, 0, 0)), SurvivalDataset(small_data()));
  const auto md = mean_difference_moments(6, 5.0, post);
  for (double v : md.values) CHECK(std::abs(v) < 1e-10);
  const auto vd = variance_difference_moments(4, 5.0, post);
  for (double v : vd.values) CHECK(std::abs(v) < 1e-10);
}

TEST_CASE("correlation endpoints and shape") {
  const LaplaceEvaluator shared(spec_with(ScoreDistribution(1, 0, 0)));
  const LaplaceEvaluator indep(spec_with(ScoreDistribution(0, 0.5, 0.5)));
  CHECK(std::abs(rmst_correlation(5.0, shared) - 1.0) < 1e-6);
  CHECK(std::abs(rmst_correlation(5.0, indep)) < 1e-6);
  CHECK(std::abs(variance_correlation(5.0, shared) - 1.0) < 1e-6);
  CHECK(std::abs(variance_correlation(5.0, indep)) < 1e-6);
  double prev = -1.0;
  for (int i = 1; i <= 9; ++i) {
    const double p1 = i / 10.0;
    const LaplaceEvaluator ev(spec_with(ScoreDistribution(p1, (1 - p1) / 2, (1 - p1) / 2)));
    const double c = rmst_correlation(5.0, ev);
    CHECK(c > 0.0);
    CHECK(c < 1.0);
    CHECK(c >= prev);
    prev = c;
  }
}

TEST_CASE("richardson gate") {
  const LaplaceEvaluator post(spec_with(ScoreDistribution(0.4, 0.3, 0.3)), SurvivalDataset(small_data()));
  const auto rep = richardson_check(MomentSpec{{Group::one, Group::two}, {1, 1}, {2, 2}, 0.0, 5.0}, post);
  CHECK(rep.within_tolerance);
  CHECK(rep.relative_change < 1e-4);
}

TEST_CASE("second-order functionals vs path simulation") {
  const auto obs = small_data();
  const auto spec = spec_with(ScoreDistribution(0.5, 0.25, 0.25));
  const LaplaceEvaluator post(spec, SurvivalDataset(obs));
  oracle::PathSimOptions opts;
  opts.paths = 40000;
  const auto sample = oracle::simulate_functionals(spec, obs, 5.0, opts);

  SUBCASE("mean difference, n = 2, r-vector reading of the expansion") {
    const auto mc = oracle::mc_estimate(sample, [](const auto& mu, const auto&) {
      const double d = mu[0] - mu[1];
      return d * d;
    });
    const double v = mean_difference_moments(2, 5.0, post).values[1];
    CHECK(std::abs(v - mc.mean) < 3 * mc.se);
  }
  SUBCASE("variance difference, n = 2") {
    const auto mc = oracle::mc_estimate(sample, [](const auto& mu, const auto& mu2) {
      const double d = (mu2[0] - mu[0] * mu[0]) - (mu2[1] - mu[1] * mu[1]);
      return d * d;
    });
    const double v = variance_difference_moments(2, 5.0, post).values[1];
    CHECK(std::abs(v - mc.mean) < 3 * mc.se);
  }
  SUBCASE("variance correlation") {
    constexpr int batches = 20;
    const std::size_t per = sample.mu.size() / batches;
    std::vector<double> corr;
    for (int b = 0; b < batches; ++b) {
      double s1 = 0, s2 = 0, s11 = 0, s22 = 0, s12 = 0;
      for (std::size_t i = b * per; i < (b + 1) * per; ++i) {
        const double v1 = sample.mu2[i][0] - sample.mu[i][0] * sample.mu[i][0];
        const double v2 = sample.mu2[i][1] - sample.mu[i][1] * sample.mu[i][1];
        s1 += v1, s2 += v2, s11 += v1 * v1, s22 += v2 * v2, s12 += v1 * v2;
      }
      const double n = static_cast<double>(per);
      const double cov = s12 / n - s1 * s2 / (n * n);
      corr.push_back(cov / std::sqrt((s11 / n - s1 * s1 / (n * n)) * (s22 / n - s2 * s2 / (n * n))));
    }
    double m = 0, sq = 0;
    for (double c : corr) m += c, sq += c * c;
    m /= batches;
    const double se = std::sqrt((sq / batches - m * m) / (batches - 1));
    CHECK(std::abs(variance_correlation(5.0, post) - m) < 3 * se);
  }
}
