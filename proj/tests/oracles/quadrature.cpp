#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <functional>
#include <limits>
#include <set>

#include "oracles.hpp"

namespace oracle {

using rmst::CompoundPriorSpec;
using rmst::IntVec2;
using rmst::Observation;

namespace {

double integrate_x(const std::function<double(double)>& f) {
  boost::math::quadrature::exp_sinh<double> integrator;
  return integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity(), 1e-14);
}

template <class F>
double integrate_u(F&& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 12, 1e-13);
}

// (1 - e^{-m x}) / (1 - e^{-x}), continuous at 0
double ratio(double m, double x) { return std::expm1(-m * x) / std::expm1(-x); }

int count_at_risk(const std::vector<Observation>& obs, double u, int group) {
  int n = 0;
  for (const auto& o : obs) {
    if (static_cast<int>(o.group) == group && o.time >= u) ++n;
  }
  return n;
}

const rmst::ScoreDistribution& score_for(const CompoundPriorSpec& spec, double u) {
  if (const auto* s = std::get_if<rmst::StratifiedScore>(&spec.score())) {
    return u <= s->tau ? s->pre : s->post;
  }
  return std::get<rmst::ScoreDistribution>(spec.score());
}

std::vector<double> piece_ends(const CompoundPriorSpec& spec, const std::vector<Observation>& obs,
                               double t) {
  std::set<double> pts;
  for (const auto& o : obs) {
    if (o.time < t) pts.insert(o.time);
  }
  if (auto tau = spec.tau(); tau && *tau < t) pts.insert(*tau);
  pts.insert(t);
  return {pts.begin(), pts.end()};
}

// Continuous part: int_0^t E_w int (1 - e^{-r.w x}) e^{-R(u).w x} nu(dx, du); for the
// likelihood the exponent is R(u).w and there is no tilt.
double continuous_part(const CompoundPriorSpec& spec, const std::vector<Observation>& obs, double t,
                       IntVec2 r, bool likelihood) {
  const auto& d = spec.directing();
  double total = 0.0;
  double a = 0.0;
  for (double b : piece_ends(spec, obs, t)) {
    const double mid = 0.5 * (a + b);
    const IntVec2 risk{count_at_risk(obs, mid, 1), count_at_risk(obs, mid, 2)};
    const auto& score = score_for(spec, mid);
    for (std::size_t w = 0; w < 3; ++w) {
      if (score[w] == 0.0) continue;
      const IntVec2 z = rmst::ScoreDistribution::support[w];
      const double rw = r[0] * z[0] + r[1] * z[1];
      const double aw = risk[0] * z[0] + risk[1] * z[1];
      const double m = likelihood ? aw : rw;
      const double tilt = likelihood ? 0.0 : aw;
      if (m == 0.0) continue;
      const auto inner = [&](double u) {
        const double c = d.gamma() * d.baseline().survival(u);
        return integrate_x([&](double x) {
                 return ratio(m, x) * std::exp(-(c + tilt) * x);
               }) *
               d.gamma() * d.baseline().density(u);
      };
      total += score[w] * integrate_u(inner, a, b);
    }
    a = b;
  }
  return total;
}

// sum_w pi_w int e^{-r.w x} prod_j (1 - e^{-w_j x})^{c_j} e^{-w_j (R_j - c_j) x}
//   gamma e^{-gamma beta(T) x} / (1 - e^{-x}) dx
double jump_mass(IntVec2 r, double time, const CompoundPriorSpec& spec,
                 const std::vector<Observation>& obs) {
  IntVec2 exact{0, 0};
  IntVec2 risk{count_at_risk(obs, time, 1), count_at_risk(obs, time, 2)};
  for (const auto& o : obs) {
    if (o.event && o.time == time) ++exact[static_cast<int>(o.group) - 1];
  }
  const auto& d = spec.directing();
  const double c = d.gamma() * d.baseline().survival(time);
  const auto& score = score_for(spec, time);
  double total = 0.0;
  for (std::size_t w = 0; w < 3; ++w) {
    if (score[w] == 0.0) continue;
    const IntVec2 z = rmst::ScoreDistribution::support[w];
    total += score[w] * integrate_x([&](double x) {
      double v = d.gamma() * std::exp(-c * x) / -std::expm1(-x);
      for (int j = 0; j < 2; ++j) {
        const double hit = -std::expm1(-z[j] * x);
        v *= std::pow(hit, exact[j]) * std::exp(-z[j] * (risk[j] - exact[j] + r[j]) * x);
      }
      return v;
    });
  }
  return total;
}

std::vector<double> exact_times(const std::vector<Observation>& obs, double t) {
  std::set<double> out;
  for (const auto& o : obs) {
    if (o.event && o.time <= t) out.insert(o.time);
  }
  return {out.begin(), out.end()};
}

}  // namespace

double directing_increment(int m, double s, double t, const rmst::LogBetaDirecting& d) {
  const auto inner = [&](double u) {
    const double c = d.gamma() * d.baseline().survival(u);
    return integrate_x([&](double x) { return ratio(m, x) * std::exp(-c * x); }) * d.gamma() *
           d.baseline().density(u);
  };
  return integrate_u(inner, s, t);
}

double jump_laplace(IntVec2 r, double time, const CompoundPriorSpec& spec,
                    const std::vector<Observation>& obs) {
  return jump_mass(r, time, spec, obs) / jump_mass({0, 0}, time, spec, obs);
}

double posterior_psi(IntVec2 r, double t, const CompoundPriorSpec& spec,
                     const std::vector<Observation>& obs) {
  double psi = continuous_part(spec, obs, t, r, false);
  for (double time : exact_times(obs, t)) psi -= std::log(jump_laplace(r, time, spec, obs));
  return psi;
}

double marginal_log_likelihood(const CompoundPriorSpec& spec, const std::vector<Observation>& obs) {
  double last = 0.0;
  for (const auto& o : obs) last = std::max(last, o.time);
  double ll = -continuous_part(spec, obs, last, {0, 0}, true);
  const auto& d = spec.directing();
  for (double time : exact_times(obs, last)) {
    ll += std::log(d.baseline().density(time)) + std::log(jump_mass({0, 0}, time, spec, obs));
  }
  return ll;
}

}  // namespace oracle
