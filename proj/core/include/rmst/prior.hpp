#pragma once

#include <array>
#include <optional>
#include <variant>

namespace rmst {

/// Nonnegative integer argument of a bivariate Laplace exponent.
using IntVec2 = std::array<int, 2>;

enum class Group : int { one = 1, two = 2 };

constexpr std::size_t index_of(Group g) noexcept { return g == Group::one ? 0 : 1; }
constexpr IntVec2 unit_vector(Group g) noexcept {
  return g == Group::one ? IntVec2{1, 0} : IntVec2{0, 1};
}

enum class BaselineFamily { exponential };

/// Centering distribution of the Log-Beta process: density alpha(s) and
/// survival beta(s) on the positive half line.
class Baseline {
 public:
  static Baseline exponential(double rate);

  BaselineFamily family() const noexcept { return family_; }
  double rate() const noexcept { return rate_; }

  double density(double s) const;
  double survival(double s) const;
  /// beta(s) - beta(t) for s <= t, without cancellation when t - s is small.
  double survival_drop(double s, double t) const;

 private:
  Baseline(BaselineFamily family, double rate) : family_(family), rate_(rate) {}

  BaselineFamily family_;
  double rate_;
};

/// Log-Beta directing Levy measure with intensity
///   gamma * exp(-gamma * beta(s) * x) * alpha(s) / (1 - exp(-x)) dx ds.
class LogBetaDirecting {
 public:
  LogBetaDirecting(double gamma, Baseline baseline);

  double gamma() const noexcept { return gamma_; }
  const Baseline& baseline() const noexcept { return baseline_; }

  /// gamma * beta(s)
  double scaled_survival(double s) const { return gamma_ * baseline_.survival(s); }

 private:
  double gamma_;
  Baseline baseline_;
};

/// Categorical score on {(1,1), (1,0), (0,1)}.
class ScoreDistribution {
 public:
  static constexpr std::array<IntVec2, 3> support{{{1, 1}, {1, 0}, {0, 1}}};

  ScoreDistribution(double shared, double first_only, double second_only);
  explicit ScoreDistribution(const std::array<double, 3>& probs)
      : ScoreDistribution(probs[0], probs[1], probs[2]) {}

  const std::array<double, 3>& probabilities() const noexcept { return probs_; }
  double operator[](std::size_t i) const { return probs_[i]; }

  bool operator==(const ScoreDistribution&) const = default;

 private:
  std::array<double, 3> probs_;
};

/// Score switching from `pre` to `post` for jump times after `tau`.
struct StratifiedScore {
  ScoreDistribution pre;
  ScoreDistribution post;
  double tau;

  StratifiedScore(ScoreDistribution pre_tau, ScoreDistribution post_tau, double threshold);
};

/// Two-sample compound Log-Beta prior; the NTR prior built on it is the
/// (stratified) compound Beta-Stacy process.
class CompoundPriorSpec {
 public:
  using Score = std::variant<ScoreDistribution, StratifiedScore>;

  CompoundPriorSpec(LogBetaDirecting directing, Score score)
      : directing_(std::move(directing)), score_(std::move(score)) {}

  const LogBetaDirecting& directing() const noexcept { return directing_; }
  const Score& score() const noexcept { return score_; }

  bool stratified() const noexcept { return std::holds_alternative<StratifiedScore>(score_); }
  std::optional<double> tau() const;

  /// Score governing jumps at `time` (pre-threshold scores apply at time <= tau).
  const ScoreDistribution& score_at(double time) const;

 private:
  LogBetaDirecting directing_;
  Score score_;
};

/// Sum over j in [first, last) of log((lower + gap + j) / (lower + j)).
/// Requires lower >= 0 and gap >= 0; returns +inf when lower + first == 0 and gap > 0.
double log_ratio_sum(double lower, double gap, long first, long last);

/// Laplace-exponent increment of the compound process over (a, b] at the
/// argument r relative to l (l <= r), for a score held fixed on the interval and
/// exponential tilting by the at-risk vector:
///   E_w[ sum_{j = l.w}^{r.w - 1} log((gamma beta(a) + R.w + j) / (gamma beta(b) + R.w + j)) ].
double compound_increment(const LogBetaDirecting& directing, const ScoreDistribution& score,
                          double a, double b, IntVec2 at_risk, IntVec2 r, IntVec2 l);

/// psi*_t(m) - psi*_s(m) of the directing process (Frullani closed form).
double directing_psi_star(long m, double s, double t, const LogBetaDirecting& directing);

/// Prior bivariate Laplace exponent psi_t(r).
double prior_psi(IntVec2 r, double t, const CompoundPriorSpec& spec);

/// Prior mean survival exp(-psi_t(e_group)).
double prior_survival(double t, const CompoundPriorSpec& spec, Group group);

}  // namespace rmst
