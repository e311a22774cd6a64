#include "rmst/density_pipeline.hpp"

#include <cmath>

#include "rmst/diagnostics.hpp"
#include "rmst/errors.hpp"

namespace rmst {

Mesh default_mesh(const std::vector<double>& moments, std::size_t points, double half_width_sd) {
  if (moments.size() < 2) throw DomainError("default mesh needs two moments");
  const double var = moments[1] - moments[0] * moments[0];
  if (!(var > 0.0)) throw InfeasibleMomentsError("nonpositive variance for the default mesh");
  const double hw = half_width_sd * std::sqrt(var);
  return Mesh::uniform(points, moments[0] - hw, moments[0] + hw);
}

namespace {

double sup_density_gap(const MaxEntDensity& a, const MaxEntDensity& b) {
  double gap = 0.0;
  for (std::size_t i = 0; i < a.p.size(); ++i) {
    const double w = a.mesh.width(i);
    gap = std::max(gap, std::abs(a.p[i] - b.p[i]) / w);
  }
  return gap;
}

std::vector<double> head(const std::vector<double>& v, int n) {
  return {v.begin(), v.begin() + n};
}

}  // namespace

Algorithm1Result algorithm1(const LaplaceEvaluator& posterior, const Algorithm1Options& options) {
  if (!(options.horizon > 0.0)) throw DomainError("horizon must be positive");
  const int order = options.adaptive ? options.max_moments : options.moments;
  if (order < 1) throw DomainError("at least one moment is required");
  if (options.adaptive && options.max_moments < 2) {
    throw DomainError("adaptive moment selection needs a cap of at least 2");
  }

  FunctionalMoments fm = functional_moments(options.functional, order, options.horizon,
                                            posterior, options.combination);
  const Mesh mesh = options.mesh ? *options.mesh
                                 : default_mesh(fm.values, options.default_mesh_points,
                                                options.default_half_width_sd);

  if (!options.adaptive) {
    MaxEntDensity d = solve_maxent(mesh, fm.values, options.solver);
    HPDRegion region = hpd(d, options.level);
    return {std::move(fm), std::move(d), std::move(region), order};
  }

  MaxEntDensity current = solve_maxent(mesh, head(fm.values, 2), options.solver);
  int used = 2;
  for (int n = 3; n <= options.max_moments; ++n) {
    std::optional<MaxEntDensity> next;
    try {
      next = solve_maxent(mesh, head(fm.values, n), options.solver);
    } catch (const NumericalError& e) {
      warn("adaptive max-ent stopped at N=" + std::to_string(used) + ": " + e.what());
      break;
    }
    const double gap = sup_density_gap(current, *next);
    current = std::move(*next);
    used = n;
    if (gap < options.adaptive_tolerance) break;
  }
  fm.values.resize(static_cast<std::size_t>(used));
  HPDRegion region = hpd(current, options.level);
  return {std::move(fm), std::move(current), std::move(region), used};
}

Algorithm1Result algorithm1(const SurvivalDataset& data, const CompoundPriorSpec& spec,
                            const Algorithm1Options& options) {
  const LaplaceEvaluator posterior(spec, data);
  return algorithm1(posterior, options);
}

}  // namespace rmst
