#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "rmst/errors.hpp"
#include "rmst/posterior.hpp"
#include "rmst/simulation.hpp"

using namespace rmst;

namespace {

const LogBetaDirecting kDirecting(1.0, Baseline::exponential(0.3));

std::vector<Observation> random_small_dataset(std::mt19937_64& rng) {
  const int n = 1 + static_cast<int>(rng() % 6);
  std::vector<Observation> obs;
  std::uniform_real_distribution<double> unif(0.2, 4.0);
  for (int i = 0; i < n; ++i) {
    double time = std::round(unif(rng) * 4.0) / 4.0;  // quarter grid gives ties
    obs.push_back({time, (rng() % 3) != 0, (rng() % 2) ? Group::one : Group::two});
  }
  return obs;
}

}  // namespace

TEST_CASE("empty data reproduces the prior exactly") {
  const CompoundPriorSpec plain(kDirecting, ScoreDistribution(0.4, 0.35, 0.25));
  const CompoundPriorSpec strat(kDirecting, StratifiedScore(ScoreDistribution(0.4, 0.35, 0.25),
                                                            ScoreDistribution(0.1, 0.2, 0.7), 2.0));
  for (const auto* spec : {&plain, &strat}) {
    const LaplaceEvaluator post(*spec);
    for (double t : {0.2, 1.0, 2.0, 3.3, 8.0}) {
      for (IntVec2 r : {IntVec2{0, 0}, IntVec2{1, 0}, IntVec2{2, 3}}) {
        CHECK(posterior_psi(r, t, post) == prior_psi(r, t, *spec));
      }
    }
  }
}

TEST_CASE("posterior psi basic properties") {
  const SurvivalDataset data({{1.0, true, Group::one}, {2.0, false, Group::two}});
  const LaplaceEvaluator post(CompoundPriorSpec(kDirecting, ScoreDistribution(0.5, 0.25, 0.25)),
                              data);
  CHECK(posterior_psi({0, 0}, 3.0, post) == 0.0);
  CHECK_THROWS_AS(posterior_psi({1, 0}, 0.0, post), DomainError);
  double prev = 0.0;
  for (double t = 0.1; t < 5.0; t += 0.1) {
    const double v = posterior_psi({1, 1}, t, post);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("single censored observation vs quadrature") {
  const std::vector<Observation> obs{{1.0, false, Group::one}};
  const CompoundPriorSpec spec(kDirecting, ScoreDistribution(1, 0, 0));
  const LaplaceEvaluator post(spec, SurvivalDataset(obs));
  CHECK(std::abs(posterior_psi({1, 0}, 2.0, post) - oracle::posterior_psi({1, 0}, 2.0, spec, obs)) <
        1e-7);
}

TEST_CASE("jump transform") {
  const double T = 1.7;
  const SurvivalDataset data({{T, true, Group::one}});
  const CompoundPriorSpec shared(kDirecting, ScoreDistribution(1, 0, 0));
  const LaplaceEvaluator post(shared, data);
  REQUIRE(post.jumps().size() == 1);
  const auto& jump = post.jumps().front();
  CHECK(jump_laplace(jump, {0, 0}) == 1.0);
  const double g = kDirecting.scaled_survival(T);
  for (int m = 1; m <= 4; ++m) {
    CHECK(jump_laplace(jump, {m, 0}) == doctest::Approx(g / (g + m)).epsilon(1e-13));
  }

  const std::vector<Observation> obs{{T, true, Group::one},
                                     {T, true, Group::two},
                                     {2.5, false, Group::one},
                                     {0.7, true, Group::two}};
  const CompoundPriorSpec mixed(kDirecting, ScoreDistribution(0.5, 0.25, 0.25));
  const LaplaceEvaluator post2(mixed, SurvivalDataset(obs));
  for (const auto& j : post2.jumps()) {
    for (IntVec2 r : {IntVec2{1, 0}, IntVec2{0, 2}, IntVec2{3, 1}}) {
      CHECK(std::abs(jump_laplace(j, r) - oracle::jump_laplace(r, j.time, mixed, obs)) < 1e-9);
    }
  }
}

TEST_CASE("tied exact observations vs quadrature") {
  const std::vector<Observation> obs{{1.5, true, Group::one},
                                     {1.5, true, Group::one},
                                     {1.5, true, Group::two},
                                     {3.0, false, Group::two}};
  const CompoundPriorSpec spec(kDirecting, ScoreDistribution(0.5, 0.3, 0.2));
  const LaplaceEvaluator post(spec, SurvivalDataset(obs));
  for (IntVec2 r : {IntVec2{1, 0}, IntVec2{0, 1}, IntVec2{2, 1}}) {
    CHECK(std::abs(posterior_psi(r, 2.0, post) - oracle::posterior_psi(r, 2.0, spec, obs)) < 1e-6);
  }
}

TEST_CASE("random small datasets vs quadrature") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 6; ++rep) {
    const auto obs = random_small_dataset(rng);
    const CompoundPriorSpec spec(
        kDirecting, StratifiedScore(ScoreDistribution(0.6, 0.2, 0.2),
                                    ScoreDistribution(0.2, 0.5, 0.3), 1.9));
    const LaplaceEvaluator post(spec, SurvivalDataset(obs));
    for (double t : {1.0, 3.1}) {
      const IntVec2 r{1 + rep % 2, rep % 3};
      CHECK(std::abs(posterior_psi(r, t, post) - oracle::posterior_psi(r, t, spec, obs)) < 1e-6);
    }
  }
}

TEST_CASE("fused log ratio matches differences of psi") {
  std::mt19937_64 rng(3);
  const auto obs = random_small_dataset(rng);
  const CompoundPriorSpec spec(kDirecting, ScoreDistribution(0.3, 0.4, 0.3));
  const LaplaceEvaluator post(spec, SurvivalDataset(obs));
  const std::vector<double> us{0.1, 0.5, 1.0, 1.75, 2.5, 4.0, 6.0};
  for (IntVec2 r : {IntVec2{2, 1}, IntVec2{3, 3}}) {
    for (IntVec2 l : {IntVec2{1, 1}, IntVec2{2, 0}, IntVec2{0, 0}}) {
      const auto prof = post.log_ratio_profile(r, l, us);
      for (std::size_t i = 0; i < us.size(); ++i) {
        const double diff = post.psi(r, us[i]) - post.psi(l, us[i]);
        CHECK(std::abs(prof[i] - diff) < 1e-12);
        CHECK(std::abs(psi_ratio_factor(r, l, us[i], post) - std::exp(-diff)) < 1e-12);
      }
    }
  }
  CHECK(psi_ratio_factor({2, 1}, {2, 1}, 1.0, post) == 1.0);
  CHECK_THROWS_AS(psi_ratio_factor({1, 0}, {0, 1}, 1.0, post), DomainError);
  const LaplaceEvaluator prior(spec);
  CHECK(psi_ratio_factor({2, 0}, {1, 0}, 1.3, prior) ==
        doctest::Approx(std::exp(-(prior_psi({2, 0}, 1.3, spec) - prior_psi({1, 0}, 1.3, spec)))));
}

TEST_CASE("posterior survival") {
  const CompoundPriorSpec spec(kDirecting, ScoreDistribution(1, 0, 0));
  const SurvivalDataset data({{1.0, true, Group::one}, {2.0, true, Group::one}});
  const LaplaceEvaluator post(spec, data);
  CHECK(posterior_survival(Group::one, 0.0, post) == 1.0);
  double prev = 1.0;
  for (double t = 0.05; t < 4.0; t += 0.05) {
    const double s = posterior_survival(Group::one, t, post);
    CHECK(s <= prev);
    prev = s;
  }
  // jump factor < 1 at an exact time
  CHECK(posterior_survival(Group::one, 1.0, post) <
        posterior_survival(Group::one, 1.0 - 1e-9, post) - 1e-3);

  const std::vector<Observation> cens{{0.8, false, Group::one}, {2.2, false, Group::one}};
  const LaplaceEvaluator post_c(spec, SurvivalDataset(cens));
  for (double t : {0.5, 1.5, 3.0}) {
    CHECK(std::abs(posterior_survival(Group::one, t, post_c) -
                   std::exp(-oracle::posterior_psi({1, 0}, t, spec, cens))) < 1e-8);
  }
}

TEST_CASE("degenerate score") {
  const CompoundPriorSpec spec(kDirecting, ScoreDistribution(0, 1, 0));
  const SurvivalDataset data({{1.0, true, Group::two}, {2.0, true, Group::one}});
  const LaplaceEvaluator post(spec, data);
  CHECK(post.degenerate());
  CHECK_THROWS_AS(jump_laplace(post.jumps().front(), {1, 0}), DegenerateScoreError);
  CHECK_THROWS_AS(post.psi({0, 1}, 3.0), DegenerateScoreError);
  CHECK(marginal_log_likelihood(spec, data) == -INFINITY);
}

TEST_CASE("marginal likelihood") {
  const double t0 = 1.3;
  const CompoundPriorSpec spec(kDirecting, ScoreDistribution(1, 0, 0));
  const SurvivalDataset one({{t0, true, Group::one}});
  const double g = kDirecting.scaled_survival(t0);
  const double expect = std::log(kDirecting.gamma() * kDirecting.baseline().density(t0) / g) +
                        std::log(g / kDirecting.gamma());
  CHECK(marginal_log_likelihood(spec, one) == doctest::Approx(expect).epsilon(1e-13));

  const std::vector<Observation> obs{{0.5, true, Group::one},
                                     {1.5, true, Group::one},
                                     {1.5, true, Group::two},
                                     {2.0, false, Group::two},
                                     {3.0, true, Group::two}};
  for (const CompoundPriorSpec& s :
       {CompoundPriorSpec(kDirecting, ScoreDistribution(0.5, 0.3, 0.2)),
        CompoundPriorSpec(kDirecting, StratifiedScore(ScoreDistribution(0.5, 0.3, 0.2),
                                                      ScoreDistribution(0.1, 0.3, 0.6), 1.0))}) {
    CHECK(std::abs(marginal_log_likelihood(s, SurvivalDataset(obs)) -
                   oracle::marginal_log_likelihood(s, obs)) < 1e-7);
  }

  // A censored observation adds survival terms only; the jump factors stay.
  auto with_cens = obs;
  with_cens.push_back({0.9, false, Group::one});
  const LaplaceEvaluator a(spec, SurvivalDataset(obs));
  const LaplaceEvaluator b(spec, SurvivalDataset(with_cens));
  CHECK(a.jumps().size() == b.jumps().size());
}

TEST_CASE("fit_map") {
  const SurvivalDataset tiny({{1.0, true, Group::one}, {2.0, true, Group::two}});
  SUBCASE("single grid point") {
    MapGrid grid;
    grid.simplex_step = 1.0;
    grid.stratified = false;
    const auto fit = fit_map(tiny, kDirecting, grid);
    CHECK(fit.surface.size() == 3);
    CHECK(simplex_grid(0.1).size() == 66);
  }
  SUBCASE("surface size and argmax") {
    MapGrid grid;
    grid.simplex_step = 0.25;
    grid.taus = {1.5, 2.5};
    const auto fit = fit_map(tiny, kDirecting, grid);
    CHECK(fit.surface.size() == 15 * 15 * 2);
    for (const auto& row : fit.surface) CHECK(row.loglik <= fit.loglik);
    std::ostringstream csv;
    write_surface_csv(csv, fit);
    const auto text = csv.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 15 * 15 * 2 + 1);
    // the recorded maximum equals a direct evaluation
    CHECK(marginal_log_likelihood(fit.spec(kDirecting), tiny) ==
          doctest::Approx(fit.loglik).epsilon(1e-12));
  }
  SUBCASE("stratified search nests the plain one") {
    ScenarioSpec sc;
    sc.n = {60, 60};
    sc.seed = 5;
    const auto data = generate(sc);
    MapGrid plain;
    plain.stratified = false;
    plain.simplex_step = 0.25;
    MapGrid strat = plain;
    strat.stratified = true;
    strat.taus = {2.0, 4.0};
    const auto a = fit_map(data, kDirecting, plain);
    const auto b = fit_map(data, kDirecting, strat);
    CHECK(std::isfinite(a.loglik));
    CHECK(b.loglik >= a.loglik - 1e-9 * std::abs(a.loglik));
  }
}
