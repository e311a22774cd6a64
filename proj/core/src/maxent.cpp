#include "rmst/maxent.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "neumaier.hpp"
#include "rmst/errors.hpp"

namespace rmst {

Mesh::Mesh(std::vector<double> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw DomainError("a mesh needs at least two points");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!std::isfinite(points_[i])) throw DomainError("mesh points must be finite");
    if (i > 0 && !(points_[i] > points_[i - 1])) {
      throw DomainError("mesh points must be strictly increasing");
    }
  }
}

Mesh Mesh::uniform(std::size_t count, double lower, double upper) {
  if (count < 2) throw DomainError("a mesh needs at least two points");
  if (!(lower < upper)) throw DomainError("mesh bounds must satisfy lower < upper");
  std::vector<double> pts(count);
  const auto n = static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) {
    pts[i] = lower + (upper - lower) * static_cast<double>(i) / n;
  }
  pts.back() = upper;
  return Mesh(std::move(pts));
}

double Mesh::width(std::size_t i) const {
  return i == 0 ? points_[1] - points_[0] : points_[i] - points_[i - 1];
}

std::vector<double> MaxEntDensity::moments(int order) const {
  std::vector<double> out;
  for (int k = 1; k <= order; ++k) {
    detail::NeumaierSum s;
    for (std::size_t i = 0; i < p.size(); ++i) s += p[i] * std::pow(mesh[i], k);
    out.push_back(s.value());
  }
  return out;
}

namespace {

// E[z^k] for z = (x - c) / s from the raw moments of x.
std::vector<double> standardize(const std::vector<double>& raw, double c, double s) {
  const std::size_t n = raw.size();
  std::vector<double> out(n);
  const auto raw_at = [&](std::size_t j) { return j == 0 ? 1.0 : raw[j - 1]; };
  for (std::size_t k = 1; k <= n; ++k) {
    detail::NeumaierSum acc;
    double binom = 1.0;
    for (std::size_t j = 0; j <= k; ++j) {
      acc += binom * raw_at(j) * std::pow(-c, static_cast<double>(k - j));
      binom = binom * static_cast<double>(k - j) / static_cast<double>(j + 1);
    }
    out[k - 1] = acc.value() / std::pow(s, static_cast<double>(k));
  }
  return out;
}

struct DualState {
  double value;  // log-partition minus lambda . mu
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
  Eigen::VectorXd p;
};

DualState evaluate(const Eigen::MatrixXd& phi, const Eigen::VectorXd& mu,
                   const Eigen::VectorXd& lambda) {
  const Eigen::VectorXd logits = phi * lambda;
  const double peak = logits.maxCoeff();
  Eigen::VectorXd w = (logits.array() - peak).exp().matrix();
  const double z = w.sum();
  DualState st;
  st.p = w / z;
  st.value = peak + std::log(z) - lambda.dot(mu);
  const Eigen::VectorXd mean = phi.transpose() * st.p;
  st.gradient = mean - mu;
  const Eigen::MatrixXd centered = phi.rowwise() - mean.transpose();
  st.hessian = centered.transpose() * st.p.asDiagonal() * centered;
  return st;
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

MaxEntDensity solve_maxent(const Mesh& mesh, const std::vector<double>& moments,
                           const MaxEntOptions& options) {
  const std::size_t n = moments.size();
  if (n == 0) throw DomainError("max-ent needs at least one moment");
  for (double c : moments) {
    if (!std::isfinite(c)) throw InfeasibleMomentsError("moments must be finite");
  }
  const double c1 = moments[0];
  if (!(c1 > mesh.lower() && c1 < mesh.upper())) {
    throw InfeasibleMomentsError("first moment outside the mesh hull");
  }
  double center = 0.5 * (mesh.lower() + mesh.upper());
  double scale = 0.5 * (mesh.upper() - mesh.lower());
  if (n >= 2) {
    const double var = moments[1] - c1 * c1;
    if (!(var > 0.0)) throw InfeasibleMomentsError("second moment below the squared mean");
    center = c1;
    scale = std::sqrt(var);
  }

  const std::size_t m = mesh.size();
  Eigen::MatrixXd phi(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    const double z = (mesh[i] - center) / scale;
    double pw = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
      pw *= z;
      phi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = pw;
    }
  }
  const auto mu_std = standardize(moments, center, scale);
  const Eigen::VectorXd mu = Eigen::Map<const Eigen::VectorXd>(mu_std.data(),
                                                               static_cast<Eigen::Index>(n));

  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  if (n >= 2) lambda[1] = -0.5;

  DualState st = evaluate(phi, mu, lambda);
  int iter = 0;
  while (st.gradient.lpNorm<Eigen::Infinity>() > options.tolerance) {
    if (iter >= options.max_iterations) {
      throw NonConvergenceError("max-ent Newton iteration did not converge",
                                to_vector(st.gradient));
    }
    ++iter;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(st.hessian);
    Eigen::VectorXd step = ldlt.solve(-st.gradient);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) step = -st.gradient;
    double t = 1.0;
    DualState next = evaluate(phi, mu, lambda + step);
    const double slope = st.gradient.dot(step);
    while (!(next.value <= st.value + 1e-4 * t * slope) && t > 1e-12) {
      t *= 0.5;
      next = evaluate(phi, mu, lambda + t * step);
    }
    if (!(next.value <= st.value) && !(next.gradient.lpNorm<Eigen::Infinity>() <
                                      st.gradient.lpNorm<Eigen::Infinity>())) {
      throw NonConvergenceError("max-ent line search stalled", to_vector(st.gradient));
    }
    lambda += t * step;
    st = std::move(next);
    if (!(lambda.norm() <= options.divergence)) {
      throw InfeasibleMomentsError("max-ent dual diverged; moments are infeasible on the mesh");
    }
  }

  MaxEntDensity out{mesh, to_vector(st.p), to_vector(lambda), to_vector(st.gradient),
                    0.0, center, scale, iter};
  detail::NeumaierSum h;
  for (double p : out.p) {
    if (p > 0.0) h += -p * std::log(p);
  }
  out.entropy = h.value();
  return out;
}

double PiecewiseDensity::operator()(double x) const {
  if (x <= edges.front() || x > edges.back()) return 0.0;
  const auto it = std::lower_bound(edges.begin(), edges.end(), x);
  return values[static_cast<std::size_t>(it - edges.begin()) - 1];
}

double PiecewiseDensity::cdf(double x) const {
  if (x < edges.front()) return 0.0;
  double acc = atom;
  for (std::size_t j = 1; j < edges.size(); ++j) {
    if (x >= edges[j]) {
      acc += values[j - 1] * (edges[j] - edges[j - 1]);
    } else {
      acc += values[j - 1] * (x - edges[j - 1]);
      break;
    }
  }
  return std::min(acc, 1.0);
}

double PiecewiseDensity::total_mass() const {
  detail::NeumaierSum acc;
  acc += atom;
  for (std::size_t j = 1; j < edges.size(); ++j) acc += values[j - 1] * (edges[j] - edges[j - 1]);
  return acc.value();
}

PiecewiseDensity density_estimate(const MaxEntDensity& maxent) {
  PiecewiseDensity d{maxent.mesh.points(), {}, maxent.p.front()};
  for (std::size_t j = 1; j < maxent.mesh.size(); ++j) {
    d.values.push_back(maxent.p[j] / (maxent.mesh[j] - maxent.mesh[j - 1]));
  }
  return d;
}

bool HPDRegion::contains(double x) const {
  return std::any_of(intervals.begin(), intervals.end(),
                     [x](const auto& iv) { return x >= iv[0] && x <= iv[1]; });
}

HPDRegion hpd(const MaxEntDensity& maxent, double level) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError("HPD level must lie in (0, 1)");
  const std::size_t m = maxent.mesh.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> height(m);
  for (std::size_t i = 0; i < m; ++i) height[i] = maxent.p[i] / maxent.mesh.width(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return height[a] > height[b]; });

  std::vector<char> selected(m, 0);
  double mass = 0.0;
  for (std::size_t idx : order) {
    if (mass >= level) break;
    selected[idx] = 1;
    mass += maxent.p[idx];
  }

  HPDRegion region{level, {}, mass};
  for (std::size_t i = 0; i < m; ++i) {
    if (!selected[i]) continue;
    std::size_t j = i;
    while (j + 1 < m && selected[j + 1]) ++j;
    region.intervals.push_back({maxent.mesh[i], maxent.mesh[j]});
    i = j;
  }
  return region;
}

double squared_tail_mass(const MaxEntDensity& maxent, double c) {
  detail::NeumaierSum acc;
  for (std::size_t i = 0; i < maxent.p.size(); ++i) {
    if (maxent.mesh[i] * maxent.mesh[i] > c) acc += maxent.p[i];
  }
  return acc.value();
}

}  // namespace rmst
