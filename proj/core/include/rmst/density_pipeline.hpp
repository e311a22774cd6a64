#pragma once

#include <optional>

#include "rmst/maxent.hpp"
#include "rmst/moments.hpp"

namespace rmst {

struct Algorithm1Options {
  Functional functional = Functional::mean_difference;
  double horizon = 0.0;
  std::optional<Mesh> mesh;  // default: mean +- 6 sd, 600 points
  int moments = 6;
  bool adaptive = false;  // grow N from 2 until successive densities agree
  int max_moments = 10;
  double adaptive_tolerance = 0.1;
  double level = 0.95;
  std::size_t default_mesh_points = 600;
  double default_half_width_sd = 6.0;
  CombinationOptions combination;
  MaxEntOptions solver;
};

struct Algorithm1Result {
  FunctionalMoments moments;
  MaxEntDensity density;
  HPDRegion hpd;
  int moments_used;
};

/// Mesh centred at the first moment with half-width `half_width_sd` standard deviations.
Mesh default_mesh(const std::vector<double>& moments, std::size_t points, double half_width_sd);

/// Posterior moments of the functional at the horizon, max-ent density, HPD region.
Algorithm1Result algorithm1(const LaplaceEvaluator& posterior, const Algorithm1Options& options);

Algorithm1Result algorithm1(const SurvivalDataset& data, const CompoundPriorSpec& spec,
                            const Algorithm1Options& options);

}  // namespace rmst
