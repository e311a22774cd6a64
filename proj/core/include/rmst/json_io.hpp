#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>

#include "rmst/density_pipeline.hpp"
#include "rmst/posterior.hpp"
#include "rmst/simulation.hpp"

namespace rmst {

using nlohmann::json;

/// {"gamma": g, "baseline": {"family": "exponential", "rate": r},
///  "score": {"pi1": [..], "pi2": [..], "tau": t}}; pi2 and tau together or not at all.
CompoundPriorSpec prior_from_json(const json& j);
json to_json(const CompoundPriorSpec& spec);

json to_json(const KMEstimate& km);
json to_json(const HyperFit& fit, bool include_surface = false);
json to_json(const HPDRegion& region);
json to_json(const MaxEntDensity& density, const HPDRegion& region, int moments_used);
json to_json(const TruthSummary& truth);

/// {"groups": [{"components": [{"shape","scale","weight"}...], "n": n,
///   "censoring_rate": r}, ...], "seed": s, "calibrate": {"target", "iterations",
///   "initial", "step_exponent"}}; omitted fields take the study defaults.
struct ScenarioConfig {
  ScenarioSpec scenario;
  std::optional<RobbinsMonroOptions> calibration;
};
ScenarioConfig scenario_from_json(const json& j);
json to_json(const ScenarioConfig& config);

json read_json_file(const std::filesystem::path& path);

/// Finite doubles as numbers, non-finite as null.
json number_or_null(double x);

}  // namespace rmst
