#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "rmst/posterior.hpp"

namespace rmst {

using Multi = std::vector<int>;

/// E[prod_i (k_i int_s^t exp(-xi_{entries[i]}(u)) u^{k_i - 1} du)^{r_i}].
struct MomentSpec {
  std::vector<Group> entries;
  std::vector<int> k;
  Multi r;
  double s = 0.0;
  double t = 0.0;
};

struct QuadratureOptions {
  std::size_t uniform_nodes = 512;
  bool richardson = false;  // also solve on a doubled grid and warn on disagreement
  double richardson_tolerance = 1e-4;
};

/// Mixed moments M_{u,t}^{(q)} at every grid node for the downward closure of
/// a set of target r-vectors.
///
/// On each grid cell the Laplace-exponent differences are frozen at the cell
/// midpoint and the recursion is integrated exactly (the moments are then
/// polynomials in u on the cell). The result is the exact moment table of the
/// functional built from xi sampled at cell midpoints, so linear combinations
/// of table entries remain moments of one random vector.
class MomentTable {
 public:
  MomentTable(const LaplaceEvaluator& laplace, std::vector<Group> entries, std::vector<int> k,
              double s, double t, const std::vector<Multi>& targets,
              const QuadratureOptions& options = {});

  std::size_t dimension() const noexcept { return entries_.size(); }
  const std::vector<Group>& entries() const noexcept { return entries_; }
  const std::vector<int>& k() const noexcept { return k_; }
  double s() const noexcept { return grid_.front(); }
  double t() const noexcept { return grid_.back(); }
  const std::vector<double>& grid() const noexcept { return grid_; }

  bool contains(const Multi& r) const;
  /// M_{s,t}^{(r)}.
  double moment(const Multi& r) const;
  /// M_{u_g,t}^{(r)} for every grid node u_g.
  const std::vector<double>& values(const Multi& r) const;

  /// CSV rows r1..rm,k1..km,s,t,value for every stored vector.
  void write_csv(std::ostream& out) const;

 private:
  std::size_t index(const Multi& r) const;
  std::uint64_t key(const Multi& r) const;

  std::vector<Group> entries_;
  std::vector<int> k_;
  std::vector<double> grid_;
  std::vector<Multi> vectors_;
  std::vector<std::vector<double>> values_;
  std::unordered_map<std::uint64_t, std::size_t> lookup_;
  std::vector<int> radix_;
};

/// Quadrature grid: {s, t}, a uniform grid, and the evaluator's breakpoints.
std::vector<double> moment_grid(const LaplaceEvaluator& laplace, double s, double t,
                                std::size_t uniform_nodes);

double mixed_moment(const MomentSpec& spec, const LaplaceEvaluator& laplace,
                    const QuadratureOptions& options = {});

struct RichardsonReport {
  double coarse;
  double fine;
  double relative_change;
  bool within_tolerance;
};

/// Compares the moment on the configured grid with the doubled grid.
RichardsonReport richardson_check(const MomentSpec& spec, const LaplaceEvaluator& laplace,
                                  const QuadratureOptions& options = {});

/// One summand a * X of a linear combination, X = k int_0^t e^{-xi_entry(u)} u^{k-1} du
/// raised to the power r.
struct LinearTerm {
  Group entry;
  int k;
  int r;
  double coeff;
};

struct CombinationOptions {
  QuadratureOptions quadrature;
  std::size_t max_compositions = 100000;
};

/// E[(sum_l a_l X_l)^n] for n = 1..order via the multinomial expansion;
/// element n-1 holds the order-n moment.
std::vector<double> linear_combination_moments(const std::vector<LinearTerm>& terms, int order,
                                               double t, const LaplaceEvaluator& laplace,
                                               const CombinationOptions& options = {});

double linear_combination_moment(const std::vector<LinearTerm>& terms, int n, double t,
                                 const LaplaceEvaluator& laplace,
                                 const CombinationOptions& options = {});

enum class Functional { mean_difference, variance_difference };

std::string to_string(Functional f);
Functional functional_from_string(const std::string& name);

struct FunctionalMoments {
  Functional functional;
  double t;
  std::vector<double> values;  // values[n - 1] = E[D^n]
};

/// Terms of mu_{1,t} - mu_{2,t} or sigma^2_{1,t} - sigma^2_{2,t}.
std::vector<LinearTerm> functional_terms(Functional f);

FunctionalMoments functional_moments(Functional f, int order, double t,
                                     const LaplaceEvaluator& laplace,
                                     const CombinationOptions& options = {});

FunctionalMoments mean_difference_moments(int order, double t, const LaplaceEvaluator& laplace,
                                          const CombinationOptions& options = {});
FunctionalMoments variance_difference_moments(int order, double t,
                                              const LaplaceEvaluator& laplace,
                                              const CombinationOptions& options = {});

/// Corr(mu_{1,t}, mu_{2,t}).
double rmst_correlation(double t, const LaplaceEvaluator& laplace,
                        const QuadratureOptions& options = {});

/// Corr(sigma^2_{1,t}, sigma^2_{2,t}).
double variance_correlation(double t, const LaplaceEvaluator& laplace,
                            const QuadratureOptions& options = {});

}  // namespace rmst
