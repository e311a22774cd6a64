#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "rmst/survival_data.hpp"

namespace rmst {

using Rng = std::mt19937_64;

/// Independent stream `stream` for a given seed.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

struct WeibullComponent {
  double shape;
  double scale;
  double weight;
};

class WeibullMixture {
 public:
  explicit WeibullMixture(std::vector<WeibullComponent> components);

  const std::vector<WeibullComponent>& components() const noexcept { return components_; }
  double survival(double t) const;
  double density(double t) const;
  double quantile(double p) const;
  double sample(Rng& rng) const;

 private:
  std::vector<WeibullComponent> components_;
};

/// Event-time laws of the two-sample simulation study.
WeibullMixture reference_mixture(Group group);

struct ScenarioSpec {
  std::array<WeibullMixture, 2> events{reference_mixture(Group::one),
                                       reference_mixture(Group::two)};
  IntVec2 n{300, 300};
  /// Exponential censoring rate per group; 0 disables censoring.
  std::array<double, 2> censoring_rate{0.0, 0.0};
  std::uint64_t seed = 1;
};

/// T = min(Y, C), event = 1{Y <= C}.
SurvivalDataset generate(const ScenarioSpec& scenario);

struct RobbinsMonroOptions {
  double target = 0.8;  // P(Y < C)
  int iterations = 10000;
  double initial = 3.0;
  double step_exponent = 0.75;  // gains i^{-step_exponent}
};

/// Stochastic approximation of the exponential censoring rate with P(Y < C) = target.
double robbins_monro_rate(const WeibullMixture& events, const RobbinsMonroOptions& options,
                          Rng& rng);

/// Calibrates both groups' censoring rates, one RNG stream per group.
std::array<double, 2> calibrate_censoring(const ScenarioSpec& scenario,
                                          const RobbinsMonroOptions& options);

/// k int_0^t S(u) u^{k-1} du by adaptive quadrature.
double true_restricted_moment(const WeibullMixture& law, double t, int k);

struct TruthSummary {
  double t;
  std::array<double, 2> restricted_mean;
  std::array<double, 2> restricted_variance;  // Var(min(Y, t))
  double mean_difference;
  double variance_difference;
};

TruthSummary truth_summary(const std::array<WeibullMixture, 2>& laws, double t);

}  // namespace rmst
