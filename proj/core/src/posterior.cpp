#include "rmst/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <iomanip>
#include <limits>
#include <ostream>

#include "neumaier.hpp"
#include "rmst/errors.hpp"

namespace rmst {

namespace {

constexpr auto npos = static_cast<std::size_t>(-1);
constexpr double kInf = std::numeric_limits<double>::infinity();

// log of int_0^inf exp(-a x) (1 - e^{-x})^{K-1} dx = log B(a, K).
double log_beta_integral(double a, int k) {
  double s = std::lgamma(static_cast<double>(k));
  for (int l = 0; l < k; ++l) s -= std::log(a + l);
  return s;
}

// Per score point log B(A_w(r) + gamma beta(T), K_w); -inf when inadmissible.
std::array<double, 3> jump_log_terms(const FixedJump& jump, IntVec2 r) {
  std::array<double, 3> out{};
  for (std::size_t w = 0; w < 3; ++w) {
    const IntVec2 z = ScoreDistribution::support[w];
    int k = 0;
    double a = jump.scaled_survival;
    bool admissible = true;
    for (std::size_t j = 0; j < 2; ++j) {
      if (jump.exact[j] > 0 && z[j] == 0) admissible = false;
      k += z[j] * jump.exact[j];
      a += z[j] * (jump.at_risk[j] - jump.exact[j] + r[j]);
    }
    out[w] = admissible ? log_beta_integral(a, k) : -kInf;
  }
  return out;
}

double mix_log_terms(const std::array<double, 3>& pi, const std::array<double, 3>& terms) {
  double acc = -kInf;
  for (std::size_t w = 0; w < 3; ++w) {
    if (pi[w] == 0.0 || terms[w] == -kInf) continue;
    acc = detail::log_add_exp(acc, std::log(pi[w]) + terms[w]);
  }
  return acc;
}

void require_nonnegative(IntVec2 r) {
  if (r[0] < 0 || r[1] < 0) throw DomainError("Laplace arguments must be nonnegative");
}

}  // namespace

double log_jump_normalizer(const FixedJump& jump, IntVec2 r) {
  require_nonnegative(r);
  return mix_log_terms(jump.score.probabilities(), jump_log_terms(jump, r));
}

double jump_laplace(const FixedJump& jump, IntVec2 r) {
  const double base = log_jump_normalizer(jump, {0, 0});
  if (base == -kInf) {
    throw DegenerateScoreError("score gives zero weight to the exact observation at time " +
                               std::to_string(jump.time));
  }
  return std::exp(log_jump_normalizer(jump, r) - base);
}

LaplaceEvaluator::LaplaceEvaluator(CompoundPriorSpec spec, SurvivalDataset data)
    : spec_(std::move(spec)), data_(std::move(data)) {
  std::vector<double> points = data_.times();
  const auto tau = spec_.tau();
  if (tau) points.push_back(*tau);
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());

  const auto stratum = [&](double b) { return tau && b > *tau ? 1 : 0; };
  const auto& directing = spec_.directing();
  double prev = 0.0;
  for (double b : points) {
    segments_.push_back({prev, b, data_.at_risk(b), &spec_.score_at(b), stratum(b)});
    jump_at_.push_back(npos);
    const std::size_t i = data_.interval_index(b);
    if (i < data_.times().size() && data_.times()[i] == b) {
      const IntVec2 exact = data_.exact_counts(i);
      if (exact[0] + exact[1] > 0) {
        jump_at_.back() = jumps_.size();
        jumps_.push_back({b, exact, data_.at_risk(b), directing.scaled_survival(b),
                          spec_.score_at(b), stratum(b)});
        if (log_jump_normalizer(jumps_.back(), {0, 0}) == -kInf) degenerate_ = true;
      }
    }
    prev = b;
  }
  segments_.push_back({prev, kInf, {0, 0}, &spec_.score_at(kInf), stratum(kInf)});
  jump_at_.push_back(npos);
}

std::vector<double> LaplaceEvaluator::breakpoints_in(double s, double t) const {
  std::vector<double> out;
  for (const auto& seg : segments_) {
    if (seg.b > s && seg.b < t) out.push_back(seg.b);
  }
  return out;
}

double LaplaceEvaluator::segment_term(const Segment& seg, double b, IntVec2 r, IntVec2 l) const {
  return compound_increment(spec_.directing(), *seg.score, seg.a, b, seg.at_risk, r, l);
}

double LaplaceEvaluator::jump_term(const FixedJump& jump, IntVec2 r, IntVec2 l) const {
  if (r == l) return 0.0;
  const double lo = log_jump_normalizer(jump, l);
  if (lo == -kInf) {
    throw DegenerateScoreError("score gives zero weight to the exact observation at time " +
                               std::to_string(jump.time));
  }
  return lo - log_jump_normalizer(jump, r);
}

double LaplaceEvaluator::psi(IntVec2 r, double t) const { return log_ratio(r, {0, 0}, t); }

double LaplaceEvaluator::log_ratio(IntVec2 r, IntVec2 l, double u) const {
  const double point[1] = {u};
  return log_ratio_profile(r, l, point).front();
}

std::vector<double> LaplaceEvaluator::log_ratio_profile(IntVec2 r, IntVec2 l,
                                                        std::span<const double> u) const {
  require_nonnegative(l);
  if (l[0] > r[0] || l[1] > r[1]) throw DomainError("log_ratio requires l <= r componentwise");
  std::vector<double> out(u.size(), 0.0);
  if (r == l) return out;
  std::size_t i = 0;
  double completed = 0.0;
  for (std::size_t p = 0; p < u.size(); ++p) {
    const double x = u[p];
    if (p > 0 && x < u[p - 1]) throw DomainError("profile points must be ascending");
    if (!std::isfinite(x)) throw DomainError("Laplace exponent needs a finite time");
    if (x <= 0.0) continue;
    while (segments_[i].b <= x) {
      completed += segment_term(segments_[i], segments_[i].b, r, l);
      if (jump_at_[i] != npos) completed += jump_term(jumps_[jump_at_[i]], r, l);
      ++i;
    }
    const auto& seg = segments_[i];
    out[p] = completed + (x > seg.a ? segment_term(seg, x, r, l) : 0.0);
  }
  return out;
}

double posterior_psi(IntVec2 r, double t, const LaplaceEvaluator& post) {
  if (!(t > 0.0)) throw DomainError("posterior_psi requires t > 0");
  return post.psi(r, t);
}

double psi_ratio_factor(IntVec2 r, IntVec2 l, double u, const LaplaceEvaluator& post) {
  return std::exp(-post.log_ratio(r, l, u));
}

double posterior_survival(Group group, double t, const LaplaceEvaluator& post) {
  if (!(t >= 0.0)) throw DomainError("posterior_survival requires t >= 0");
  if (t == 0.0) return 1.0;
  return std::exp(-post.psi(unit_vector(group), t));
}

namespace {

// The log marginal likelihood is linear in the score on the continuous part
// and a log-mixture at each jump, separately per stratum.
struct LikelihoodTerms {
  double base = 0.0;
  std::array<std::array<double, 3>, 2> continuous{};
  std::array<std::vector<std::array<double, 3>>, 2> jumps;

  explicit LikelihoodTerms(const LaplaceEvaluator& ev) {
    const auto& directing = ev.spec().directing();
    std::array<std::array<detail::NeumaierSum, 3>, 2> cont;
    for (const auto& seg : ev.segments()) {
      if (seg.at_risk[0] + seg.at_risk[1] == 0) continue;
      const double lower = directing.scaled_survival(seg.b);
      const double gap = directing.gamma() * directing.baseline().survival_drop(seg.a, seg.b);
      for (std::size_t w = 0; w < 3; ++w) {
        const IntVec2 z = ScoreDistribution::support[w];
        const long m = z[0] * seg.at_risk[0] + z[1] * seg.at_risk[1];
        cont[seg.stratum][w] += -log_ratio_sum(lower, gap, 0, m);
      }
    }
    for (int s = 0; s < 2; ++s) {
      for (std::size_t w = 0; w < 3; ++w) continuous[s][w] = cont[s][w].value();
    }
    detail::NeumaierSum b;
    for (const auto& jump : ev.jumps()) {
      b += std::log(directing.gamma() * directing.baseline().density(jump.time));
      jumps[jump.stratum].push_back(jump_log_terms(jump, {0, 0}));
    }
    base = b.value();
  }

  double stratum_value(int s, const std::array<double, 3>& pi) const {
    detail::NeumaierSum acc;
    for (std::size_t w = 0; w < 3; ++w) {
      if (pi[w] != 0.0) acc += pi[w] * continuous[s][w];
    }
    for (const auto& terms : jumps[s]) {
      const double v = mix_log_terms(pi, terms);
      if (v == -kInf) return -kInf;
      acc += v;
    }
    return acc.value();
  }
};

}  // namespace

double marginal_log_likelihood(const CompoundPriorSpec& spec, const SurvivalDataset& data) {
  if (data.empty()) throw ConfigError("marginal likelihood needs data");
  const LaplaceEvaluator ev(spec, data);
  const LikelihoodTerms terms(ev);
  double total = terms.base;
  if (const auto* strat = std::get_if<StratifiedScore>(&spec.score())) {
    total += terms.stratum_value(0, strat->pre.probabilities());
    total += terms.stratum_value(1, strat->post.probabilities());
  } else {
    total += terms.stratum_value(0, std::get<ScoreDistribution>(spec.score()).probabilities());
  }
  return total;
}

CompoundPriorSpec HyperFit::spec(const LogBetaDirecting& directing) const {
  if (post_pi && tau) {
    return {directing, StratifiedScore(ScoreDistribution(pi), ScoreDistribution(*post_pi), *tau)};
  }
  return {directing, ScoreDistribution(pi)};
}

std::vector<std::array<double, 3>> simplex_grid(double step) {
  if (!(step > 0.0) || step > 1.0) throw DomainError("simplex step must lie in (0, 1]");
  const long n = std::lround(1.0 / step);
  if (std::abs(static_cast<double>(n) * step - 1.0) > 1e-9) {
    throw DomainError("simplex step must divide 1");
  }
  std::vector<std::array<double, 3>> out;
  const auto dn = static_cast<double>(n);
  for (long i = 0; i <= n; ++i) {
    for (long j = 0; i + j <= n; ++j) {
      out.push_back({static_cast<double>(i) / dn, static_cast<double>(j) / dn,
                     static_cast<double>(n - i - j) / dn});
    }
  }
  return out;
}

std::vector<double> default_tau_candidates(const SurvivalDataset& data) {
  std::vector<double> out;
  for (int d = 1; d <= 9; ++d) out.push_back(pooled_quantile(data, d / 10.0));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

HyperFit fit_map(const SurvivalDataset& data, const LogBetaDirecting& directing,
                 const MapGrid& grid) {
  if (data.empty()) throw ConfigError("fit_map needs data");
  const auto pis = simplex_grid(grid.simplex_step);
  const ScoreDistribution placeholder(1.0, 0.0, 0.0);

  std::vector<std::vector<SurfacePoint>> blocks;
  if (!grid.stratified) {
    const LaplaceEvaluator ev(CompoundPriorSpec(directing, placeholder), data);
    const LikelihoodTerms terms(ev);
    blocks.emplace_back();
    for (const auto& pi : pis) {
      blocks.back().push_back({pi, std::nullopt, std::nullopt,
                               terms.base + terms.stratum_value(0, pi)});
    }
  } else {
    const auto taus = grid.taus.empty() ? default_tau_candidates(data) : grid.taus;
    std::vector<std::future<std::vector<SurfacePoint>>> futures;
    for (double tau : taus) {
      const CompoundPriorSpec spec(directing, StratifiedScore(placeholder, placeholder, tau));
      futures.push_back(std::async(std::launch::async, [spec, &data, &pis, tau] {
        const LaplaceEvaluator ev(spec, data);
        const LikelihoodTerms terms(ev);
        std::vector<double> pre, post;
        for (const auto& pi : pis) {
          pre.push_back(terms.stratum_value(0, pi));
          post.push_back(terms.stratum_value(1, pi));
        }
        std::vector<SurfacePoint> rows;
        rows.reserve(pis.size() * pis.size());
        for (std::size_t a = 0; a < pis.size(); ++a) {
          for (std::size_t b = 0; b < pis.size(); ++b) {
            rows.push_back({pis[a], pis[b], tau, terms.base + pre[a] + post[b]});
          }
        }
        return rows;
      }));
    }
    for (auto& f : futures) blocks.push_back(f.get());
  }

  HyperFit fit{};
  fit.loglik = -kInf;
  bool found = false;
  for (auto& block : blocks) {
    for (auto& row : block) {
      if (!found || row.loglik > fit.loglik) {
        fit.pi = row.pi;
        fit.post_pi = row.post_pi;
        fit.tau = row.tau;
        fit.loglik = row.loglik;
        found = true;
      }
      fit.surface.push_back(row);
    }
  }
  if (!found) throw ConfigError("empty search grid");
  return fit;
}

void write_surface_csv(std::ostream& out, const HyperFit& fit) {
  const bool stratified = fit.post_pi.has_value();
  out << (stratified ? "pi1,pi2,pi3,post_pi1,post_pi2,post_pi3,tau,loglik\n"
                     : "pi1,pi2,pi3,tau,loglik\n");
  const auto old_precision = out.precision(17);
  for (const auto& row : fit.surface) {
    out << row.pi[0] << ',' << row.pi[1] << ',' << row.pi[2] << ',';
    if (row.post_pi) out << (*row.post_pi)[0] << ',' << (*row.post_pi)[1] << ',' << (*row.post_pi)[2] << ',';
    if (row.tau) out << *row.tau;
    out << ',';
    if (std::isfinite(row.loglik)) {
      out << row.loglik;
    } else {
      out << "-inf";
    }
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace rmst
