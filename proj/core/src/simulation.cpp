#include "rmst/simulation.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>

#include "rmst/errors.hpp"

namespace rmst {

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

WeibullMixture::WeibullMixture(std::vector<WeibullComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw DomainError("mixture needs at least one component");
  double total = 0.0;
  for (const auto& c : components_) {
    if (!(c.shape > 0.0) || !(c.scale > 0.0) || !(c.weight >= 0.0)) {
      throw DomainError("Weibull shapes and scales must be positive, weights nonnegative");
    }
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DomainError("mixture weights must sum to one");
}

double WeibullMixture::survival(double t) const {
  if (t <= 0.0) return 1.0;
  double s = 0.0;
  for (const auto& c : components_) s += c.weight * std::exp(-std::pow(t / c.scale, c.shape));
  return s;
}

double WeibullMixture::density(double t) const {
  if (t <= 0.0) return 0.0;
  double f = 0.0;
  for (const auto& c : components_) {
    const double z = t / c.scale;
    f += c.weight * c.shape / c.scale * std::pow(z, c.shape - 1.0) * std::exp(-std::pow(z, c.shape));
  }
  return f;
}

double WeibullMixture::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile level must lie in (0, 1)");
  double hi = 1.0;
  while (1.0 - survival(hi) < p) hi *= 2.0;
  const auto f = [&](double x) { return (1.0 - survival(x)) - p; };
  boost::math::tools::eps_tolerance<double> tol(50);
  std::uintmax_t iters = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(f, 0.0, hi, -p, f(hi), tol, iters);
  return 0.5 * (a + b);
}

double WeibullMixture::sample(Rng& rng) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  std::size_t pick = components_.size() - 1;
  double acc = 0.0;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    acc += components_[i].weight;
    if (u < acc) {
      pick = i;
      break;
    }
  }
  std::weibull_distribution<double> w(components_[pick].shape, components_[pick].scale);
  return w(rng);
}

WeibullMixture reference_mixture(Group group) {
  if (group == Group::one) return WeibullMixture({{2.1, 5.0, 0.5}, {1.2, 5.5, 0.5}});
  return WeibullMixture({{2.1, 5.0, 0.5}, {5.3, 4.75, 0.5}});
}

SurvivalDataset generate(const ScenarioSpec& scenario) {
  std::vector<Observation> obs;
  for (std::size_t g = 0; g < 2; ++g) {
    if (scenario.n[g] < 0) throw DomainError("sample sizes must be nonnegative");
    const double rate = scenario.censoring_rate[g];
    if (!(rate >= 0.0) || !std::isfinite(rate)) throw DomainError("censoring rate must be >= 0");
    Rng rng = make_rng(scenario.seed, g);
    const Group group = g == 0 ? Group::one : Group::two;
    for (int i = 0; i < scenario.n[g]; ++i) {
      const double y = scenario.events[g].sample(rng);
      if (rate == 0.0) {
        obs.push_back({y, true, group});
        continue;
      }
      const double c = std::exponential_distribution<double>(rate)(rng);
      obs.push_back({std::min(y, c), y <= c, group});
    }
  }
  return SurvivalDataset(std::move(obs));
}

double robbins_monro_rate(const WeibullMixture& events, const RobbinsMonroOptions& options,
                          Rng& rng) {
  if (!(options.target > 0.0 && options.target < 1.0)) {
    throw DomainError("Robbins-Monro target must lie in (0, 1)");
  }
  if (!(options.initial > 0.0)) throw DomainError("initial censoring rate must be positive");
  constexpr double floor = 1e-12;
  double theta = options.initial;
  for (int i = 1; i <= options.iterations; ++i) {
    const double y = events.sample(rng);
    const double c = std::exponential_distribution<double>(theta)(rng);
    const double hit = y < c ? 1.0 : 0.0;
    // A larger rate censors earlier, lowering P(Y < C).
    theta += std::pow(static_cast<double>(i), -options.step_exponent) * (hit - options.target);
    theta = std::max(theta, floor);
  }
  return theta;
}

std::array<double, 2> calibrate_censoring(const ScenarioSpec& scenario,
                                          const RobbinsMonroOptions& options) {
  std::array<double, 2> out{};
  for (std::size_t g = 0; g < 2; ++g) {
    Rng rng = make_rng(scenario.seed, 1000 + g);
    out[g] = robbins_monro_rate(scenario.events[g], options, rng);
  }
  return out;
}

double true_restricted_moment(const WeibullMixture& law, double t, int k) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("horizon must be positive and finite");
  if (k < 1) throw DomainError("k must be positive");
  const auto f = [&](double u) { return k * law.survival(u) * std::pow(u, k - 1); };
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, t, 20, 1e-13, &err);
}

TruthSummary truth_summary(const std::array<WeibullMixture, 2>& laws, double t) {
  TruthSummary s{t, {}, {}, 0.0, 0.0};
  for (std::size_t g = 0; g < 2; ++g) {
    const double m1 = true_restricted_moment(laws[g], t, 1);
    const double m2 = true_restricted_moment(laws[g], t, 2);
    s.restricted_mean[g] = m1;
    s.restricted_variance[g] = m2 - m1 * m1;
  }
  s.mean_difference = s.restricted_mean[0] - s.restricted_mean[1];
  s.variance_difference = s.restricted_variance[0] - s.restricted_variance[1];
  return s;
}

}  // namespace rmst
