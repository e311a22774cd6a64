#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "rmst/prior.hpp"
#include "rmst/survival_data.hpp"

namespace rmst {

/// Fixed location jump of the posterior at an exact observation time.
struct FixedJump {
  double time;
  IntVec2 exact;    // exact observations at `time`, per group
  IntVec2 at_risk;  // R_j(time), including the observations at `time`
  double scaled_survival;  // gamma * beta(time)
  ScoreDistribution score;
  int stratum;  // 0 before the threshold (or unstratified), 1 after
};

/// log of the unnormalised jump transform
///   sum_w pi_w int exp(-(A_w(r) + gamma beta(T)) x) (1 - e^{-x})^{K_w - 1} dx,
/// with A_w(r) = sum_j w_j (R_j - c_j + r_j) and K_w = sum_j w_j c_j. Score
/// points that miss a group with exact observations contribute nothing.
/// Returns -inf when no admissible point has positive probability.
double log_jump_normalizer(const FixedJump& jump, IntVec2 r);

/// E[exp(-r . J)] for the fixed jump J; in (0, 1], equal to 1 at r = 0.
double jump_laplace(const FixedJump& jump, IntVec2 r);

/// Posterior (or, with no data, prior) bivariate Laplace exponent of the
/// compound Log-Beta process, piecewise over the breakpoint partition.
class LaplaceEvaluator {
 public:
  struct Segment {
    double a;
    double b;  // +inf for the final segment
    IntVec2 at_risk;
    const ScoreDistribution* score;
    int stratum;
  };

  explicit LaplaceEvaluator(CompoundPriorSpec spec, SurvivalDataset data = {});

  LaplaceEvaluator(const LaplaceEvaluator&) = delete;
  LaplaceEvaluator& operator=(const LaplaceEvaluator&) = delete;
  LaplaceEvaluator(LaplaceEvaluator&&) = delete;

  const CompoundPriorSpec& spec() const noexcept { return spec_; }
  const SurvivalDataset& data() const noexcept { return data_; }
  const std::vector<Segment>& segments() const noexcept { return segments_; }
  const std::vector<FixedJump>& jumps() const noexcept { return jumps_; }

  /// Partition points strictly inside (s, t).
  std::vector<double> breakpoints_in(double s, double t) const;

  /// True if some exact observation has zero probability under the score;
  /// Laplace exponents then throw DegenerateScoreError.
  bool degenerate() const noexcept { return degenerate_; }

  /// psi_t(r | D).
  double psi(IntVec2 r, double t) const;

  /// psi_u(r | D) - psi_u(l | D) for l <= r, summed term by term.
  double log_ratio(IntVec2 r, IntVec2 l, double u) const;

  /// log_ratio at every point of an ascending list of times, in one sweep.
  std::vector<double> log_ratio_profile(IntVec2 r, IntVec2 l, std::span<const double> u) const;

 private:
  double segment_term(const Segment& seg, double b, IntVec2 r, IntVec2 l) const;
  double jump_term(const FixedJump& jump, IntVec2 r, IntVec2 l) const;

  CompoundPriorSpec spec_;
  SurvivalDataset data_;
  std::vector<Segment> segments_;
  std::vector<FixedJump> jumps_;
  std::vector<std::size_t> jump_at_;  // jump index ending segment i, or npos
  bool degenerate_ = false;
};

using PosteriorLaplace = LaplaceEvaluator;

double posterior_psi(IntVec2 r, double t, const LaplaceEvaluator& post);

/// exp(-(psi_u(r|D) - psi_u(l|D))).
double psi_ratio_factor(IntVec2 r, IntVec2 l, double u, const LaplaceEvaluator& post);

double posterior_survival(Group group, double t, const LaplaceEvaluator& post);

/// log marginal likelihood of the data with the subordinators integrated out;
/// -inf when an exact observation is impossible under the score.
double marginal_log_likelihood(const CompoundPriorSpec& spec, const SurvivalDataset& data);

struct MapGrid {
  double simplex_step = 0.1;
  bool stratified = true;
  std::vector<double> taus;  // empty: interior deciles of the pooled times
};

struct SurfacePoint {
  std::array<double, 3> pi;
  std::optional<std::array<double, 3>> post_pi;
  std::optional<double> tau;
  double loglik;  // -inf where the score cannot explain an exact observation
};

struct HyperFit {
  std::array<double, 3> pi;
  std::optional<std::array<double, 3>> post_pi;
  std::optional<double> tau;
  double loglik;
  std::vector<SurfacePoint> surface;

  CompoundPriorSpec spec(const LogBetaDirecting& directing) const;
};

/// Points of the probability simplex with coordinates on multiples of `step`.
std::vector<std::array<double, 3>> simplex_grid(double step);

std::vector<double> default_tau_candidates(const SurvivalDataset& data);

/// Exhaustive marginal-likelihood search over the score grid (and tau).
HyperFit fit_map(const SurvivalDataset& data, const LogBetaDirecting& directing,
                 const MapGrid& grid = {});

void write_surface_csv(std::ostream& out, const HyperFit& fit);

}  // namespace rmst
