#include "rmst/moments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

#include "neumaier.hpp"
#include "rmst/diagnostics.hpp"
#include "rmst/errors.hpp"

namespace rmst {

namespace {

using Poly = std::vector<double>;  // coefficients in x = u_{g+1} - v

double horner(const Poly& p, double x) {
  double v = 0.0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) v = v * x + *it;
  return v;
}

// coefficients of (c - x)^n
Poly binomial_power(double c, int n) {
  Poly out(static_cast<std::size_t>(n) + 1, 0.0);
  double coeff = 1.0;
  for (int j = 0; j <= n; ++j) {
    out[static_cast<std::size_t>(j)] = coeff * std::pow(c, n - j) * ((j % 2) ? -1.0 : 1.0);
    coeff = coeff * (n - j) / (j + 1);
  }
  return out;
}

// target += scale * int_0^x p(y) w(y) dy
void add_integral(Poly& target, const Poly& p, const Poly& w, double scale) {
  const std::size_t deg = p.size() + w.size() - 1;
  if (target.size() < deg + 1) target.resize(deg + 1, 0.0);
  for (std::size_t a = 0; a < p.size(); ++a) {
    if (p[a] == 0.0) continue;
    for (std::size_t b = 0; b < w.size(); ++b) {
      target[a + b + 1] += scale * p[a] * w[b] / static_cast<double>(a + b + 1);
    }
  }
}

std::vector<Multi> downward_closure(const std::vector<Multi>& targets, std::size_t m) {
  std::set<Multi> seen;
  std::vector<Multi> stack;
  for (const auto& r : targets) {
    if (r.size() != m) throw DomainError("moment vector length must match the entry count");
    for (int v : r) {
      if (v < 0) throw DomainError("moment orders must be nonnegative");
    }
    if (seen.insert(r).second) stack.push_back(r);
  }
  Multi zero(m, 0);
  if (seen.insert(zero).second) stack.push_back(zero);
  while (!stack.empty()) {
    Multi q = stack.back();
    stack.pop_back();
    for (std::size_t i = 0; i < m; ++i) {
      if (q[i] == 0) continue;
      Multi p = q;
      --p[i];
      if (seen.insert(p).second) stack.push_back(std::move(p));
    }
  }
  std::vector<Multi> out(seen.begin(), seen.end());
  std::stable_sort(out.begin(), out.end(), [](const Multi& a, const Multi& b) {
    return std::accumulate(a.begin(), a.end(), 0) < std::accumulate(b.begin(), b.end(), 0);
  });
  return out;
}

IntVec2 collapse(const Multi& q, const std::vector<Group>& entries) {
  IntVec2 out{0, 0};
  for (std::size_t i = 0; i < q.size(); ++i) out[index_of(entries[i])] += q[i];
  return out;
}

}  // namespace

std::vector<double> moment_grid(const LaplaceEvaluator& laplace, double s, double t,
                                std::size_t uniform_nodes) {
  if (!(s >= 0.0) || !std::isfinite(t) || !(s < t)) {
    throw DomainError("moment interval must satisfy 0 <= s < t < infinity");
  }
  if (uniform_nodes < 2) throw DomainError("quadrature needs at least two uniform nodes");
  std::vector<double> grid;
  const auto n = static_cast<double>(uniform_nodes - 1);
  for (std::size_t i = 0; i < uniform_nodes; ++i) {
    grid.push_back(s + (t - s) * static_cast<double>(i) / n);
  }
  grid.back() = t;
  for (double b : laplace.breakpoints_in(s, t)) grid.push_back(b);
  std::sort(grid.begin(), grid.end());
  const double eps = 1e-12 * t;
  std::vector<double> merged;
  for (double x : grid) {
    if (!merged.empty() && x - merged.back() <= eps) {
      // keep exact breakpoints and the end points over nearby uniform nodes
      if (x == t) merged.back() = t;
      continue;
    }
    merged.push_back(x);
  }
  merged.front() = s;
  merged.back() = t;
  return merged;
}

MomentTable::MomentTable(const LaplaceEvaluator& laplace, std::vector<Group> entries,
                         std::vector<int> k, double s, double t, const std::vector<Multi>& targets,
                         const QuadratureOptions& options)
    : entries_(std::move(entries)), k_(std::move(k)) {
  const std::size_t m = entries_.size();
  if (m == 0 || k_.size() != m) throw DomainError("entries and k must have equal, positive length");
  for (int ki : k_) {
    if (ki < 1) throw DomainError("time-power orders k must be positive");
  }
  grid_ = moment_grid(laplace, s, t, options.uniform_nodes);
  vectors_ = downward_closure(targets, m);

  radix_.assign(m, 1);
  for (const auto& q : vectors_) {
    for (std::size_t i = 0; i < m; ++i) radix_[i] = std::max(radix_[i], q[i] + 1);
  }
  for (std::size_t n = 0; n < vectors_.size(); ++n) lookup_.emplace(key(vectors_[n]), n);

  const std::size_t cells = grid_.size() - 1;
  std::vector<double> mids(cells);
  for (std::size_t g = 0; g < cells; ++g) mids[g] = 0.5 * (grid_[g] + grid_[g + 1]);

  // Frozen exp(-(psi(q) - psi(q - e_i))) per cell, shared across vectors with
  // the same collapsed arguments.
  std::map<std::array<int, 4>, std::vector<double>> profiles;
  struct Step {
    std::size_t pred;
    std::size_t entry;
    const std::vector<double>* factor;
  };
  std::vector<std::vector<Step>> steps(vectors_.size());
  for (std::size_t n = 0; n < vectors_.size(); ++n) {
    const Multi& q = vectors_[n];
    for (std::size_t i = 0; i < m; ++i) {
      if (q[i] == 0) continue;
      Multi p = q;
      --p[i];
      const IntVec2 hi = collapse(q, entries_);
      const IntVec2 lo = collapse(p, entries_);
      const std::array<int, 4> pk{hi[0], hi[1], lo[0], lo[1]};
      auto it = profiles.find(pk);
      if (it == profiles.end()) {
        auto logs = laplace.log_ratio_profile(hi, lo, mids);
        for (double& v : logs) v = std::exp(-v);
        it = profiles.emplace(pk, std::move(logs)).first;
      }
      steps[n].push_back({index(p), i, &it->second});
    }
  }

  values_.assign(vectors_.size(), std::vector<double>(grid_.size(), 0.0));
  values_[index(Multi(m, 0))].assign(grid_.size(), 1.0);

  std::vector<Poly> polys(vectors_.size());
  std::vector<std::vector<Poly>> weights(m);
  for (std::size_t g = cells; g-- > 0;) {
    const double upper = grid_[g + 1];
    const double h = upper - grid_[g];
    for (std::size_t i = 0; i < m; ++i) {
      weights[i].clear();
      weights[i].push_back(binomial_power(upper, k_[i] - 1));
    }
    for (std::size_t n = 0; n < vectors_.size(); ++n) {
      Poly& p = polys[n];
      p.assign(1, values_[n][g + 1]);
      if (steps[n].empty()) {
        values_[n][g] = values_[n][g + 1];
        continue;
      }
      for (const auto& st : steps[n]) {
        const double scale = static_cast<double>(vectors_[n][st.entry]) * k_[st.entry] *
                             (*st.factor)[g];
        add_integral(p, polys[st.pred], weights[st.entry].front(), scale);
      }
      values_[n][g] = horner(p, h);
    }
  }
}

std::uint64_t MomentTable::key(const Multi& r) const {
  std::uint64_t out = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    out = out * static_cast<std::uint64_t>(radix_[i]) + static_cast<std::uint64_t>(r[i]);
  }
  return out;
}

bool MomentTable::contains(const Multi& r) const {
  if (r.size() != entries_.size()) return false;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] < 0 || r[i] >= radix_[i]) return false;
  }
  return lookup_.count(key(r)) > 0;
}

std::size_t MomentTable::index(const Multi& r) const {
  if (!contains(r)) throw DomainError("moment vector not in the table");
  return lookup_.at(key(r));
}

double MomentTable::moment(const Multi& r) const { return values_[index(r)].front(); }

const std::vector<double>& MomentTable::values(const Multi& r) const { return values_[index(r)]; }

void MomentTable::write_csv(std::ostream& out) const {
  const std::size_t m = entries_.size();
  for (std::size_t i = 0; i < m; ++i) out << 'r' << i + 1 << ',';
  for (std::size_t i = 0; i < m; ++i) out << 'k' << i + 1 << ',';
  out << "s,t,value\n";
  const auto old_precision = out.precision(17);
  for (std::size_t n = 0; n < vectors_.size(); ++n) {
    for (int v : vectors_[n]) out << v << ',';
    for (int v : k_) out << v << ',';
    out << s() << ',' << t() << ',' << values_[n].front() << '\n';
  }
  out.precision(old_precision);
}

namespace {

double solve_single(const MomentSpec& spec, const LaplaceEvaluator& laplace,
                    const QuadratureOptions& options) {
  const MomentTable table(laplace, spec.entries, spec.k, spec.s, spec.t, {spec.r}, options);
  return table.moment(spec.r);
}

}  // namespace

RichardsonReport richardson_check(const MomentSpec& spec, const LaplaceEvaluator& laplace,
                                  const QuadratureOptions& options) {
  QuadratureOptions fine = options;
  fine.uniform_nodes = 2 * options.uniform_nodes - 1;
  RichardsonReport report{};
  report.coarse = solve_single(spec, laplace, options);
  report.fine = solve_single(spec, laplace, fine);
  const double scale = std::max(std::abs(report.fine), 1e-300);
  report.relative_change = std::abs(report.fine - report.coarse) / scale;
  report.within_tolerance = report.relative_change <= options.richardson_tolerance;
  return report;
}

double mixed_moment(const MomentSpec& spec, const LaplaceEvaluator& laplace,
                    const QuadratureOptions& options) {
  if (!options.richardson) return solve_single(spec, laplace, options);
  const auto report = richardson_check(spec, laplace, options);
  if (!report.within_tolerance) {
    warn("moment grid too coarse: doubling the grid changed the value by a relative " +
         std::to_string(report.relative_change));
  }
  return report.coarse;
}

namespace {

double multinomial(const std::vector<int>& parts) {
  double out = 1.0;
  int running = 0;
  for (int p : parts) {
    for (int j = 1; j <= p; ++j) {
      ++running;
      out *= static_cast<double>(running) / j;
    }
  }
  return out;
}

void compositions(int n, std::size_t m, std::vector<int>& current,
                  std::vector<std::vector<int>>& out) {
  if (current.size() + 1 == m) {
    current.push_back(n);
    out.push_back(current);
    current.pop_back();
    return;
  }
  for (int j = n; j >= 0; --j) {
    current.push_back(j);
    compositions(n - j, m, current, out);
    current.pop_back();
  }
}

double composition_count(int n, std::size_t m) {
  // C(n + m - 1, m - 1)
  double c = 1.0;
  for (std::size_t j = 1; j < m; ++j) c = c * static_cast<double>(n + static_cast<int>(j)) / j;
  return c;
}

}  // namespace

std::vector<double> linear_combination_moments(const std::vector<LinearTerm>& terms, int order,
                                               double t, const LaplaceEvaluator& laplace,
                                               const CombinationOptions& options) {
  if (order < 0) throw DomainError("moment order must be nonnegative");
  if (terms.empty()) throw DomainError("linear combination needs at least one term");
  const std::size_t m = terms.size();
  double total = 0.0;
  for (int n = 1; n <= order; ++n) total += composition_count(n, m);
  if (total > static_cast<double>(options.max_compositions)) {
    throw ConfigError("multinomial expansion exceeds the composition cap");
  }
  std::vector<std::vector<std::vector<int>>> per_order(static_cast<std::size_t>(order) + 1);
  std::vector<Multi> targets;
  for (int n = 1; n <= order; ++n) {
    std::vector<int> current;
    compositions(n, m, current, per_order[static_cast<std::size_t>(n)]);
    for (const auto& l : per_order[static_cast<std::size_t>(n)]) {
      Multi q(m);
      for (std::size_t i = 0; i < m; ++i) q[i] = l[i] * terms[i].r;
      targets.push_back(std::move(q));
    }
  }
  std::vector<double> out;
  if (order == 0) return out;

  std::vector<Group> entries;
  std::vector<int> k;
  for (const auto& term : terms) {
    if (term.r < 1) throw DomainError("term powers must be positive");
    entries.push_back(term.entry);
    k.push_back(term.k);
  }
  const MomentTable table(laplace, entries, k, 0.0, t, targets, options.quadrature);
  for (int n = 1; n <= order; ++n) {
    detail::NeumaierSum sum;
    for (const auto& l : per_order[static_cast<std::size_t>(n)]) {
      double c = multinomial(l);
      Multi q(m);
      for (std::size_t i = 0; i < m; ++i) {
        c *= std::pow(terms[i].coeff, l[i]);
        q[i] = l[i] * terms[i].r;
      }
      if (c == 0.0) continue;
      sum += c * table.moment(q);
    }
    out.push_back(sum.value());
  }
  return out;
}

double linear_combination_moment(const std::vector<LinearTerm>& terms, int n, double t,
                                 const LaplaceEvaluator& laplace,
                                 const CombinationOptions& options) {
  if (n == 0) return 1.0;
  return linear_combination_moments(terms, n, t, laplace, options).back();
}

std::string to_string(Functional f) {
  return f == Functional::mean_difference ? "mean" : "variance";
}

Functional functional_from_string(const std::string& name) {
  if (name == "mean" || name == "mean_difference") return Functional::mean_difference;
  if (name == "variance" || name == "variance_difference") return Functional::variance_difference;
  throw ConfigError("unknown functional '" + name + "' (expected mean or variance)");
}

std::vector<LinearTerm> functional_terms(Functional f) {
  if (f == Functional::mean_difference) {
    return {{Group::one, 1, 1, 1.0}, {Group::two, 1, 1, -1.0}};
  }
  // sigma^2_i = k=2 functional minus the square of the k=1 functional
  return {{Group::one, 2, 1, 1.0},
          {Group::one, 1, 2, -1.0},
          {Group::two, 2, 1, -1.0},
          {Group::two, 1, 2, 1.0}};
}

FunctionalMoments functional_moments(Functional f, int order, double t,
                                     const LaplaceEvaluator& laplace,
                                     const CombinationOptions& options) {
  return {f, t, linear_combination_moments(functional_terms(f), order, t, laplace, options)};
}

FunctionalMoments mean_difference_moments(int order, double t, const LaplaceEvaluator& laplace,
                                          const CombinationOptions& options) {
  return functional_moments(Functional::mean_difference, order, t, laplace, options);
}

FunctionalMoments variance_difference_moments(int order, double t,
                                              const LaplaceEvaluator& laplace,
                                              const CombinationOptions& options) {
  return functional_moments(Functional::variance_difference, order, t, laplace, options);
}

namespace {

double correlation(double cov, double var1, double var2) {
  const double floor = 1e-300;
  if (!(var1 > floor) || !(var2 > floor)) {
    throw NumericalError("degenerate variance in correlation");
  }
  double c = cov / std::sqrt(var1 * var2);
  if (std::abs(c) > 1.0) {
    if (std::abs(c) > 1.0 + 1e-6) warn("correlation outside [-1, 1] clamped: " + std::to_string(c));
    c = std::clamp(c, -1.0, 1.0);
  }
  return c;
}

}  // namespace

double rmst_correlation(double t, const LaplaceEvaluator& laplace,
                        const QuadratureOptions& options) {
  const MomentTable table(laplace, {Group::one, Group::two}, {1, 1}, 0.0, t,
                          {{2, 0}, {0, 2}, {1, 1}}, options);
  const double m1 = table.moment({1, 0});
  const double m2 = table.moment({0, 1});
  return correlation(table.moment({1, 1}) - m1 * m2, table.moment({2, 0}) - m1 * m1,
                     table.moment({0, 2}) - m2 * m2);
}

double variance_correlation(double t, const LaplaceEvaluator& laplace,
                            const QuadratureOptions& options) {
  // entries: (xi_1, k=2), (xi_1, k=1), (xi_2, k=2), (xi_2, k=1)
  const MomentTable table(laplace, {Group::one, Group::one, Group::two, Group::two}, {2, 1, 2, 1},
                          0.0, t,
                          {{2, 0, 0, 0}, {1, 2, 0, 0}, {0, 4, 0, 0}, {0, 0, 2, 0}, {0, 0, 1, 2},
                           {0, 0, 0, 4}, {1, 0, 1, 0}, {1, 0, 0, 2}, {0, 2, 1, 0}, {0, 2, 0, 2}},
                          options);
  const auto M = [&](int a, int b, int c, int d) { return table.moment({a, b, c, d}); };
  const double e1 = M(1, 0, 0, 0) - M(0, 2, 0, 0);
  const double e2 = M(0, 0, 1, 0) - M(0, 0, 0, 2);
  const double sq1 = M(2, 0, 0, 0) - 2.0 * M(1, 2, 0, 0) + M(0, 4, 0, 0);
  const double sq2 = M(0, 0, 2, 0) - 2.0 * M(0, 0, 1, 2) + M(0, 0, 0, 4);
  const double cross = M(1, 0, 1, 0) - M(1, 0, 0, 2) - M(0, 2, 1, 0) + M(0, 2, 0, 2);
  return correlation(cross - e1 * e2, sq1 - e1 * e1, sq2 - e2 * e2);
}

}  // namespace rmst
