// rmst: fit | survival | compare | simulate | km

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "rmst/density_pipeline.hpp"
#include "rmst/errors.hpp"
#include "rmst/json_io.hpp"

using namespace rmst;
namespace fs = std::filesystem;

namespace {

struct PriorFlags {
  std::string spec_path;
  std::optional<double> gamma;
  std::optional<double> baseline_rate;
  std::vector<double> pi1;
  std::vector<double> pi2;
  std::optional<double> tau;
};

struct DensityFlags {
  std::vector<double> horizons;
  std::vector<double> quantile_horizons;
  std::size_t mesh_points = 600;
  std::optional<double> mesh_lo;
  std::optional<double> mesh_hi;
  int moments = 6;
  bool adaptive = false;
  int max_moments = 10;
  double level = 0.95;
  std::string functional = "mean";
  std::vector<double> tail_c;
};

void add_prior_flags(CLI::App* app, PriorFlags& f) {
  app->add_option("--spec", f.spec_path, "Prior spec JSON (or a hyperfit.json from `fit`)");
  app->add_option("--gamma", f.gamma, "Precision gamma");
  app->add_option("--baseline-rate", f.baseline_rate, "Exponential baseline rate");
  app->add_option("--pi1", f.pi1, "Score probabilities (shared, first, second)")->expected(3);
  app->add_option("--pi2", f.pi2, "Post-threshold score probabilities")->expected(3);
  app->add_option("--tau", f.tau, "Threshold for --pi2");
}

json resolve_prior(const PriorFlags& f) {
  json j = json::object();
  if (!f.spec_path.empty()) {
    j = read_json_file(f.spec_path);
    if (j.contains("spec")) j = j["spec"];
  }
  if (!j.contains("gamma")) j["gamma"] = 1.0;
  if (!j.contains("baseline")) j["baseline"] = {{"family", "exponential"}, {"rate", 0.3}};
  if (f.gamma) j["gamma"] = *f.gamma;
  if (f.baseline_rate) j["baseline"]["rate"] = *f.baseline_rate;
  if (!f.pi1.empty()) j["score"]["pi1"] = f.pi1;
  if (!f.pi2.empty()) j["score"]["pi2"] = f.pi2;
  if (f.tau) j["score"]["tau"] = *f.tau;
  if (!j.contains("score")) throw ConfigError("a score is required: pass --spec or --pi1");
  return to_json(prior_from_json(j));
}

SurvivalDataset resolve_data(const std::string& path) {
  if (path.empty()) return SurvivalDataset(std::vector<Observation>{});
  return load_csv(path, true);
}

std::vector<double> resolve_horizons(const SurvivalDataset& data, const std::vector<double>& absolute,
                                     const std::vector<double>& quantiles) {
  std::vector<double> out;
  for (double t : absolute) {
    if (!(t > 0)) throw ConfigError("horizons must be positive");
    out.push_back(t);
  }
  for (double q : quantiles) {
    if (!(q > 0 && q <= 1)) throw ConfigError("quantile horizons must lie in (0, 1]");
    if (data.empty()) throw ConfigError("quantile horizons need --data");
    out.push_back(pooled_quantile(data, q));
  }
  return out;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

// int_0^t u^{k-1} k S(u) du for the KM step function
double km_restricted_moment(const KMEstimate& km, double t, int k) {
  double total = 0.0, level = 1.0, a = 0.0;
  for (std::size_t i = 0; i <= km.times.size(); ++i) {
    const double b = i < km.times.size() ? std::min(km.times[i], t) : t;
    total += level * (std::pow(b, k) - std::pow(a, k));
    if (i == km.times.size() || km.times[i] >= t) break;
    level = km.survival[i];
    a = b;
  }
  return total;
}

double km_functional(const SurvivalDataset& data, Functional f, double t) {
  std::array<double, 2> v{};
  for (Group g : {Group::one, Group::two}) {
    const auto km = kaplan_meier(data, g);
    const double m1 = km_restricted_moment(km, t, 1);
    v[index_of(g)] = f == Functional::mean_difference ? m1 : km_restricted_moment(km, t, 2) - m1 * m1;
  }
  return v[0] - v[1];
}

int cmd_fit(const std::string& data_path, const PriorFlags& pf, double step, bool unstratified,
            const std::vector<double>& taus, const std::string& out_dir) {
  const auto data = load_csv(data_path);
  json prior = {{"gamma", pf.gamma.value_or(1.0)},
                {"baseline", {{"family", "exponential"}, {"rate", pf.baseline_rate.value_or(0.3)}}},
                {"score", {{"pi1", {1, 0, 0}}}}};
  const auto directing = prior_from_json(prior).directing();
  MapGrid grid;
  grid.simplex_step = step;
  grid.stratified = !unstratified;
  grid.taus = taus;
  if (grid.stratified && grid.taus.empty()) grid.taus = default_tau_candidates(data);
  const auto fit = fit_map(data, directing, grid);

  json config = {{"command", "fit"},  {"data", data_path}, {"gamma", directing.gamma()},
                 {"baseline_rate", directing.baseline().rate()}, {"simplex_step", step},
                 {"stratified", grid.stratified}};
  if (grid.stratified) config["taus"] = grid.taus;

  const auto out = prepare_out(out_dir);
  write_json(out / "hyperfit.json",
             {{"config", config}, {"fit", to_json(fit)}, {"spec", to_json(fit.spec(directing))}});
  std::ofstream csv(out / "surface.csv");
  write_surface_csv(csv, fit);
  return 0;
}

int cmd_survival(const std::string& data_path, const PriorFlags& pf, std::vector<double> grid,
                 const std::string& out_dir) {
  const auto data = resolve_data(data_path);
  const auto prior = resolve_prior(pf);
  const LaplaceEvaluator post(prior_from_json(prior), data);
  if (grid.empty()) {
    double hi = 10.0;
    for (double t : data.times()) hi = std::max(hi, t);
    for (int i = 0; i <= 100; ++i) grid.push_back(hi * i / 100.0);
  }
  std::sort(grid.begin(), grid.end());
  if (grid.front() < 0) throw ConfigError("time grid must be nonnegative");

  json curves = json::array();
  for (Group g : {Group::one, Group::two}) {
    std::vector<double> s;
    for (double t : grid) s.push_back(posterior_survival(g, t, post));
    json row = {{"group", static_cast<int>(g)}, {"posterior", s}};
    if (data.group_sizes()[index_of(g)] > 0) {
      const auto km = kaplan_meier(data, g);
      std::vector<double> k;
      for (double t : grid) k.push_back(km(t));
      row["km"] = k;
    }
    curves.push_back(row);
  }
  json config = {{"command", "survival"}, {"data", data_path}, {"spec", prior}};
  write_json(prepare_out(out_dir) / "curves.json",
             {{"config", config}, {"times", grid}, {"curves", curves}});
  return 0;
}

int cmd_compare(const std::string& data_path, const PriorFlags& pf, const DensityFlags& df,
                const std::string& out_dir) {
  const auto data = load_csv(data_path);
  const auto prior = resolve_prior(pf);
  const auto horizons = resolve_horizons(data, df.horizons, df.quantile_horizons);
  if (horizons.empty()) throw ConfigError("pass --horizons or --quantile-horizons");
  if (df.mesh_lo.has_value() != df.mesh_hi.has_value())
    throw ConfigError("--mesh-lo and --mesh-hi go together");
  for (double c : df.tail_c)
    if (c < 0) throw ConfigError("tail thresholds must be nonnegative");

  const auto functional = functional_from_string(df.functional);
  const LaplaceEvaluator post(prior_from_json(prior), data);
  std::vector<std::future<Algorithm1Result>> jobs;
  for (double t : horizons) {
    Algorithm1Options opt;
    opt.functional = functional;
    opt.horizon = t;
    if (df.mesh_lo) opt.mesh = Mesh::uniform(df.mesh_points, *df.mesh_lo, *df.mesh_hi);
    opt.default_mesh_points = df.mesh_points;
    opt.moments = df.moments;
    opt.adaptive = df.adaptive;
    opt.max_moments = df.max_moments;
    opt.level = df.level;
    jobs.push_back(std::async(std::launch::async, [&post, opt] { return algorithm1(post, opt); }));
  }

  json densities = json::array(), regions = json::array();
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    const auto res = jobs[h].get();
    const double km = km_functional(data, functional, horizons[h]);
    json d = to_json(res.density, res.hpd, res.moments_used);
    d["t"] = horizons[h];
    d["moments"] = res.moments.values;
    d["km_estimate"] = km;
    json tails = json::array();
    for (double c : df.tail_c) tails.push_back({{"c", c}, {"mass", squared_tail_mass(res.density, c)}});
    d["squared_tail_mass"] = tails;
    densities.push_back(d);
    regions.push_back({{"t", horizons[h]}, {"hpd", to_json(res.hpd)}, {"km_estimate", km}});
  }

  json config = {{"command", "compare"},      {"data", data_path},
                 {"spec", prior},             {"functional", to_string(functional)},
                 {"horizons", horizons},      {"mesh_points", df.mesh_points},
                 {"level", df.level},         {"adaptive", df.adaptive},
                 {"moments", df.adaptive ? json(nullptr) : json(df.moments)}};
  if (df.mesh_lo) config["mesh"] = {*df.mesh_lo, *df.mesh_hi};
  if (df.adaptive) config["max_moments"] = df.max_moments;
  const auto out = prepare_out(out_dir);
  write_json(out / "densities.json", {{"config", config}, {"densities", densities}});
  write_json(out / "hpd.json", {{"config", config}, {"regions", regions}});
  return 0;
}

int cmd_simulate(const std::string& scenario_path, std::optional<std::uint64_t> seed,
                 std::vector<double> horizons, const std::string& out_dir) {
  auto cfg = scenario_path.empty() ? ScenarioConfig{} : scenario_from_json(read_json_file(scenario_path));
  if (seed) cfg.scenario.seed = *seed;
  if (cfg.calibration) cfg.scenario.censoring_rate = calibrate_censoring(cfg.scenario, *cfg.calibration);
  if (horizons.empty()) horizons = {30.0};
  for (double t : horizons)
    if (!(t > 0)) throw ConfigError("horizons must be positive");

  const auto data = generate(cfg.scenario);
  json truth = json::array();
  for (double t : horizons) truth.push_back(to_json(truth_summary(cfg.scenario.events, t)));
  const std::array<double, 2> q99{cfg.scenario.events[0].quantile(0.99),
                                  cfg.scenario.events[1].quantile(0.99)};

  const auto out = prepare_out(out_dir);
  std::ofstream csv(out / "data.csv");
  write_csv(csv, data);
  json config = to_json(cfg);
  config["command"] = "simulate";
  write_json(out / "truth.json", {{"config", config}, {"truth", truth}, {"quantile_99", q99}});
  return 0;
}

int cmd_km(const std::string& data_path, const std::vector<double>& horizons_abs,
           const std::vector<double>& horizons_q, const std::string& out_dir) {
  const auto data = load_csv(data_path, true);
  const auto horizons = resolve_horizons(data, horizons_abs, horizons_q);
  json groups = json::array();
  for (Group g : {Group::one, Group::two}) {
    if (data.group_sizes()[index_of(g)] == 0) continue;
    const auto km = kaplan_meier(data, g);
    json j = to_json(km);
    json rm = json::array();
    for (double t : horizons) {
      const double m1 = km_restricted_moment(km, t, 1);
      rm.push_back({{"t", t}, {"restricted_mean", m1},
                    {"restricted_variance", km_restricted_moment(km, t, 2) - m1 * m1}});
    }
    j["restricted"] = rm;
    groups.push_back(j);
  }
  json config = {{"command", "km"}, {"data", data_path}, {"horizons", horizons}};
  write_json(prepare_out(out_dir) / "km.json", {{"config", config}, {"groups", groups}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian nonparametric two-sample restricted mean survival analysis"};
  app.require_subcommand(1);

  std::string data_path, out_dir = ".", scenario_path;
  PriorFlags prior;
  DensityFlags dens;
  std::optional<std::uint64_t> seed;

  auto* fit = app.add_subcommand("fit", "MAP search of the score weights and threshold");
  fit->add_option("--data", data_path, "time,event,group CSV")->required();
  fit->add_option("--gamma", prior.gamma, "Precision gamma (default 1)");
  fit->add_option("--baseline-rate", prior.baseline_rate, "Exponential baseline rate (default 0.3)");
  double step = 0.1;
  bool unstratified = false;
  std::vector<double> taus;
  fit->add_option("--grid-step", step, "Simplex grid spacing")->check(CLI::Range(1e-3, 1.0));
  fit->add_flag("--unstratified", unstratified, "Search a single score only");
  fit->add_option("--tau", taus, "Threshold candidates (default: pooled deciles)");
  fit->add_option("--out", out_dir, "Output directory");

  auto* surv = app.add_subcommand("survival", "Posterior and Kaplan-Meier survival curves");
  surv->add_option("--data", data_path, "time,event,group CSV (omit for the prior)");
  add_prior_flags(surv, prior);
  std::vector<double> grid;
  surv->add_option("--horizons", grid, "Time grid");
  surv->add_option("--out", out_dir, "Output directory");

  auto* cmp = app.add_subcommand("compare", "Posterior density and HPD of a group difference");
  cmp->add_option("--data", data_path, "time,event,group CSV")->required();
  add_prior_flags(cmp, prior);
  cmp->add_option("--functional", dens.functional, "mean or variance")
      ->check(CLI::IsMember({"mean", "variance"}));
  cmp->add_option("--horizons", dens.horizons, "Absolute horizons");
  cmp->add_option("--quantile-horizons", dens.quantile_horizons, "Pooled-data quantile horizons");
  cmp->add_option("--mesh-points", dens.mesh_points, "Mesh size")->check(CLI::PositiveNumber);
  cmp->add_option("--mesh-lo", dens.mesh_lo, "Mesh lower end");
  cmp->add_option("--mesh-hi", dens.mesh_hi, "Mesh upper end");
  auto* n_opt = cmp->add_option("--moments", dens.moments, "Number of moment constraints")
                    ->check(CLI::Range(1, 40));
  cmp->add_flag("--adaptive", dens.adaptive, "Grow the number of moments until densities settle")
      ->excludes(n_opt);
  cmp->add_option("--max-moments", dens.max_moments, "Cap for --adaptive")->check(CLI::Range(2, 40));
  cmp->add_option("--level", dens.level, "HPD level")->check(CLI::Range(0.0, 1.0));
  cmp->add_option("--tail-c", dens.tail_c, "Thresholds c for P(difference^2 > c)");
  cmp->add_option("--out", out_dir, "Output directory");

  auto* sim = app.add_subcommand("simulate", "Draw a two-sample dataset and its true functionals");
  sim->add_option("--spec", scenario_path, "Scenario JSON (default: the reference mixtures)");
  sim->add_option("--seed", seed, "Overrides the scenario seed");
  std::vector<double> truth_t;
  sim->add_option("--horizons", truth_t, "Horizons for the true functionals (default 30)");
  sim->add_option("--out", out_dir, "Output directory");

  auto* km = app.add_subcommand("km", "Kaplan-Meier curves and restricted moments");
  km->add_option("--data", data_path, "time,event,group CSV")->required();
  std::vector<double> km_t, km_q;
  km->add_option("--horizons", km_t, "Absolute horizons");
  km->add_option("--quantile-horizons", km_q, "Pooled-data quantile horizons");
  km->add_option("--out", out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*fit) return cmd_fit(data_path, prior, step, unstratified, taus, out_dir);
    if (*surv) return cmd_survival(data_path, prior, grid, out_dir);
    if (*cmp) return cmd_compare(data_path, prior, dens, out_dir);
    if (*sim) return cmd_simulate(scenario_path, seed, truth_t, out_dir);
    if (*km) return cmd_km(data_path, km_t, km_q, out_dir);
  } catch (const ConfigError& e) {
    std::cerr << "rmst: " << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "rmst: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "rmst: numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "rmst: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
