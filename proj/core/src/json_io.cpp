#include "rmst/json_io.hpp"

#include <cmath>
#include <fstream>

#include "rmst/errors.hpp"

namespace rmst {

namespace {

template <class T>
T require(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad field '") + key + "': " + e.what());
  }
}

template <class T>
T optional_field(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad field '") + key + "': " + e.what());
  }
}

json triplet(const std::array<double, 3>& p) { return json::array({p[0], p[1], p[2]}); }

}  // namespace

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

CompoundPriorSpec prior_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("prior spec must be a JSON object");
  const auto gamma = require<double>(j, "gamma");
  const json base = require<json>(j, "baseline");
  const auto family = optional_field<std::string>(base, "family", "exponential");
  if (family != "exponential") throw ConfigError("unsupported baseline family '" + family + "'");
  const LogBetaDirecting directing(gamma, Baseline::exponential(require<double>(base, "rate")));
  const json score = require<json>(j, "score");
  const ScoreDistribution pre(require<std::array<double, 3>>(score, "pi1"));
  const bool has_post = score.contains("pi2") && !score.at("pi2").is_null();
  const bool has_tau = score.contains("tau") && !score.at("tau").is_null();
  if (has_post != has_tau) throw ConfigError("score needs both pi2 and tau, or neither");
  if (has_post) {
    return {directing, StratifiedScore(pre, ScoreDistribution(require<std::array<double, 3>>(score, "pi2")),
                                       require<double>(score, "tau"))};
  }
  return {directing, pre};
}

json to_json(const CompoundPriorSpec& spec) {
  json score;
  if (const auto* s = std::get_if<StratifiedScore>(&spec.score())) {
    score = {{"pi1", triplet(s->pre.probabilities())},
             {"pi2", triplet(s->post.probabilities())},
             {"tau", s->tau}};
  } else {
    score = {{"pi1", triplet(std::get<ScoreDistribution>(spec.score()).probabilities())}};
  }
  return {{"gamma", spec.directing().gamma()},
          {"baseline", {{"family", "exponential"}, {"rate", spec.directing().baseline().rate()}}},
          {"score", score}};
}

json to_json(const KMEstimate& km) {
  return {{"group", static_cast<int>(km.group)}, {"times", km.times}, {"survival", km.survival}};
}

json to_json(const HyperFit& fit, bool include_surface) {
  json out = {{"pi1", triplet(fit.pi)}, {"loglik", number_or_null(fit.loglik)}};
  if (fit.post_pi) out["pi2"] = triplet(*fit.post_pi);
  if (fit.tau) out["tau"] = *fit.tau;
  out["surface_size"] = fit.surface.size();
  if (include_surface) {
    json rows = json::array();
    for (const auto& row : fit.surface) {
      json r = {{"pi1", triplet(row.pi)}, {"loglik", number_or_null(row.loglik)}};
      if (row.post_pi) r["pi2"] = triplet(*row.post_pi);
      if (row.tau) r["tau"] = *row.tau;
      rows.push_back(std::move(r));
    }
    out["surface"] = std::move(rows);
  }
  return out;
}

json to_json(const HPDRegion& region) {
  json intervals = json::array();
  for (const auto& iv : region.intervals) intervals.push_back({iv[0], iv[1]});
  return {{"level", region.level}, {"intervals", intervals}, {"mass", region.mass}};
}

json to_json(const MaxEntDensity& density, const HPDRegion& region, int moments_used) {
  return {{"mesh", density.mesh.points()},
          {"p", density.p},
          {"hpd", to_json(region)},
          {"moments_used", moments_used}};
}

json to_json(const TruthSummary& truth) {
  return {{"t", truth.t},
          {"restricted_mean", truth.restricted_mean},
          {"restricted_variance", truth.restricted_variance},
          {"mean_difference", truth.mean_difference},
          {"variance_difference", truth.variance_difference}};
}

ScenarioConfig scenario_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
  ScenarioConfig cfg;
  cfg.scenario.seed = optional_field<std::uint64_t>(j, "seed", cfg.scenario.seed);
  if (j.contains("groups")) {
    const json& groups = j.at("groups");
    if (!groups.is_array() || groups.size() != 2) throw ConfigError("'groups' needs two entries");
    for (std::size_t g = 0; g < 2; ++g) {
      const json& gj = groups[g];
      if (gj.contains("components")) {
        std::vector<WeibullComponent> comps;
        for (const auto& c : gj.at("components")) {
          comps.push_back({require<double>(c, "shape"), require<double>(c, "scale"),
                           require<double>(c, "weight")});
        }
        cfg.scenario.events[g] = WeibullMixture(std::move(comps));
      }
      cfg.scenario.n[g] = optional_field<int>(gj, "n", cfg.scenario.n[g]);
      cfg.scenario.censoring_rate[g] =
          optional_field<double>(gj, "censoring_rate", cfg.scenario.censoring_rate[g]);
    }
  }
  if (j.contains("calibrate") && !j.at("calibrate").is_null() &&
      !(j.at("calibrate").is_boolean() && !j.at("calibrate").get<bool>())) {
    RobbinsMonroOptions rm;
    const json& c = j.at("calibrate");
    if (c.is_object()) {
      rm.target = optional_field<double>(c, "target", rm.target);
      rm.iterations = optional_field<int>(c, "iterations", rm.iterations);
      rm.initial = optional_field<double>(c, "initial", rm.initial);
      rm.step_exponent = optional_field<double>(c, "step_exponent", rm.step_exponent);
    }
    cfg.calibration = rm;
  }
  return cfg;
}

json to_json(const ScenarioConfig& config) {
  json groups = json::array();
  for (std::size_t g = 0; g < 2; ++g) {
    json comps = json::array();
    for (const auto& c : config.scenario.events[g].components()) {
      comps.push_back({{"shape", c.shape}, {"scale", c.scale}, {"weight", c.weight}});
    }
    groups.push_back({{"components", comps},
                      {"n", config.scenario.n[g]},
                      {"censoring_rate", config.scenario.censoring_rate[g]}});
  }
  json out = {{"groups", groups}, {"seed", config.scenario.seed}};
  if (config.calibration) {
    const auto& rm = *config.calibration;
    out["calibrate"] = {{"target", rm.target},
                        {"iterations", rm.iterations},
                        {"initial", rm.initial},
                        {"step_exponent", rm.step_exponent}};
  }
  return out;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace rmst
