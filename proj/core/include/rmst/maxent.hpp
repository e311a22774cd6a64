#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace rmst {

class Mesh {
 public:
  explicit Mesh(std::vector<double> points);
  static Mesh uniform(std::size_t count, double lower, double upper);

  const std::vector<double>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  double lower() const noexcept { return points_.front(); }
  double upper() const noexcept { return points_.back(); }
  double operator[](std::size_t i) const { return points_[i]; }

  /// Width attached to point i: x_i - x_{i-1}, and x_2 - x_1 for the first point.
  double width(std::size_t i) const;

 private:
  std::vector<double> points_;
};

struct MaxEntOptions {
  double tolerance = 1e-8;  // infinity norm of the standardized moment residual
  int max_iterations = 200;
  double divergence = 1e6;  // multiplier norm treated as an unbounded dual
};

/// Discrete maximum-entropy distribution on a mesh under power-moment
/// constraints. The dual is solved in standardized coordinates
/// z = (x - center) / scale, so `multipliers` and `residuals` refer to the
/// powers of z.
struct MaxEntDensity {
  Mesh mesh;
  std::vector<double> p;
  std::vector<double> multipliers;
  std::vector<double> residuals;
  double entropy;
  double center;
  double scale;
  int iterations;

  /// Raw moments E[X^k], k = 1..order, of the discrete solution.
  std::vector<double> moments(int order) const;
};

/// moments[k-1] = E[X^k].
MaxEntDensity solve_maxent(const Mesh& mesh, const std::vector<double>& moments,
                           const MaxEntOptions& options = {});

/// Piecewise-constant density: value p_j / (x_j - x_{j-1}) on (x_{j-1}, x_j] and the
/// mass p_1 held as an atom at x_1, so the total mass is exactly one.
struct PiecewiseDensity {
  std::vector<double> edges;
  std::vector<double> values;  // values[j-1] on (edges[j-1], edges[j]]
  double atom;

  double operator()(double x) const;
  double cdf(double x) const;
  double total_mass() const;
};

PiecewiseDensity density_estimate(const MaxEntDensity& maxent);

struct HPDRegion {
  double level;
  std::vector<std::array<double, 2>> intervals;
  double mass;

  bool contains(double x) const;
};

/// Highest-density region on the mesh: points ordered by p_i / width(i)
/// (ties to the lower x), accumulated until the mass reaches `level`.
HPDRegion hpd(const MaxEntDensity& maxent, double level);

/// P(X^2 > c) under the discrete solution.
double squared_tail_mass(const MaxEntDensity& maxent, double c);

}  // namespace rmst
