#include "rmst/prior.hpp"

#include <cmath>
#include <limits>

#include "rmst/errors.hpp"

namespace rmst {

namespace {

constexpr long kDirectSumLimit = 32;

void require_nonnegative(IntVec2 r) {
  if (r[0] < 0 || r[1] < 0) {
    throw DomainError("Laplace exponent arguments must be nonnegative integers");
  }
}

int dot(IntVec2 a, IntVec2 b) noexcept { return a[0] * b[0] + a[1] * b[1]; }

}  // namespace

Baseline Baseline::exponential(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw DomainError("exponential baseline rate must be positive and finite");
  }
  return Baseline(BaselineFamily::exponential, rate);
}

double Baseline::density(double s) const {
  if (s < 0.0) return 0.0;
  return rate_ * std::exp(-rate_ * s);
}

double Baseline::survival(double s) const {
  if (s <= 0.0) return 1.0;
  return std::exp(-rate_ * s);
}

double Baseline::survival_drop(double s, double t) const {
  if (t <= s) return 0.0;
  const double lo = std::max(s, 0.0);
  return -std::exp(-rate_ * lo) * std::expm1(-rate_ * (t - lo));
}

LogBetaDirecting::LogBetaDirecting(double gamma, Baseline baseline)
    : gamma_(gamma), baseline_(baseline) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw DomainError("Log-Beta precision gamma must be positive and finite");
  }
}

ScoreDistribution::ScoreDistribution(double shared, double first_only, double second_only)
    : probs_{shared, first_only, second_only} {
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw DomainError("score probabilities must be nonnegative");
    }
  }
  const double total = shared + first_only + second_only;
  if (std::abs(total - 1.0) > 1e-9) {
    throw DomainError("score probabilities must sum to one");
  }
}

StratifiedScore::StratifiedScore(ScoreDistribution pre_tau, ScoreDistribution post_tau,
                                 double threshold)
    : pre(pre_tau), post(post_tau), tau(threshold) {
  if (!(threshold > 0.0) || !std::isfinite(threshold)) {
    throw DomainError("stratification threshold tau must be positive and finite");
  }
}

std::optional<double> CompoundPriorSpec::tau() const {
  if (const auto* s = std::get_if<StratifiedScore>(&score_)) return s->tau;
  return std::nullopt;
}

const ScoreDistribution& CompoundPriorSpec::score_at(double time) const {
  if (const auto* s = std::get_if<StratifiedScore>(&score_)) {
    return time <= s->tau ? s->pre : s->post;
  }
  return std::get<ScoreDistribution>(score_);
}

double log_ratio_sum(double lower, double gap, long first, long last) {
  if (last <= first || gap == 0.0) return 0.0;
  double sum = 0.0;
  if (lower + static_cast<double>(first) == 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  if (last - first <= kDirectSumLimit) {
    for (long j = first; j < last; ++j) {
      sum += std::log1p(gap / (lower + static_cast<double>(j)));
    }
    return sum;
  }
  // Long runs only occur with at-risk offsets in the likelihood; the log-gamma
  // form keeps those O(1).
  const double upper = lower + gap;
  const auto f = static_cast<double>(first);
  const auto l = static_cast<double>(last);
  return (std::lgamma(upper + l) - std::lgamma(lower + l)) -
         (std::lgamma(upper + f) - std::lgamma(lower + f));
}

double compound_increment(const LogBetaDirecting& directing, const ScoreDistribution& score,
                          double a, double b, IntVec2 at_risk, IntVec2 r, IntVec2 l) {
  const double lower = directing.scaled_survival(b);
  const double gap = directing.gamma() * directing.baseline().survival_drop(a, b);
  double total = 0.0;
  for (std::size_t w = 0; w < ScoreDistribution::support.size(); ++w) {
    const double p = score[w];
    if (p == 0.0) continue;
    const IntVec2 z = ScoreDistribution::support[w];
    const int first = dot(l, z);
    const int last = dot(r, z);
    if (last <= first) continue;
    total += p * log_ratio_sum(lower + dot(at_risk, z), gap, first, last);
  }
  return total;
}

double directing_psi_star(long m, double s, double t, const LogBetaDirecting& directing) {
  if (m < 0) throw DomainError("directing_psi_star requires m >= 0");
  if (!std::isfinite(t) || !(s < t) || s < 0.0) {
    throw DomainError("directing_psi_star requires 0 <= s < t < infinity");
  }
  const double lower = directing.scaled_survival(t);
  const double gap = directing.gamma() * directing.baseline().survival_drop(s, t);
  return log_ratio_sum(lower, gap, 0, m);
}

double prior_psi(IntVec2 r, double t, const CompoundPriorSpec& spec) {
  require_nonnegative(r);
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("prior_psi requires finite t >= 0");
  if (t == 0.0) return 0.0;
  constexpr IntVec2 none{0, 0};
  const auto& directing = spec.directing();
  if (const auto tau = spec.tau()) {
    const auto& strat = std::get<StratifiedScore>(spec.score());
    double total = compound_increment(directing, strat.pre, 0.0, std::min(t, *tau), none, r, none);
    if (t > *tau) total += compound_increment(directing, strat.post, *tau, t, none, r, none);
    return total;
  }
  return compound_increment(directing, std::get<ScoreDistribution>(spec.score()), 0.0, t, none,
                            r, none);
}

double prior_survival(double t, const CompoundPriorSpec& spec, Group group) {
  if (!(t >= 0.0)) throw DomainError("prior_survival requires t >= 0");
  return std::exp(-prior_psi(unit_vector(group), t, spec));
}

}  // namespace rmst
