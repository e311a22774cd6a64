#include <doctest.h>

#include "rmst/errors.hpp"
#include "rmst/json_io.hpp"

using namespace rmst;

TEST_CASE("prior spec round trip") {
  const auto j = json::parse(R"({"gamma": 1.5, "baseline": {"family": "exponential", "rate": 0.1},
                                 "score": {"pi1": [0.2, 0.3, 0.5], "pi2": [1, 0, 0], "tau": 4}})");
  const auto spec = prior_from_json(j);
  CHECK(spec.stratified());
  CHECK(*spec.tau() == 4.0);
  CHECK(spec.directing().gamma() == 1.5);
  CHECK(to_json(prior_from_json(to_json(spec))) == to_json(spec));

  const auto plain = prior_from_json(json::parse(
      R"({"gamma": 1, "baseline": {"rate": 0.3}, "score": {"pi1": [1, 0, 0]}})"));
  CHECK_FALSE(plain.stratified());
}

TEST_CASE("prior spec errors") {
  CHECK_THROWS_AS(prior_from_json(json::parse(R"({"gamma": 1})")), ConfigError);
  CHECK_THROWS_AS(prior_from_json(json::parse(
                      R"({"gamma": 1, "baseline": {"rate": 0.3}, "score": {"pi1": [1, 0, 0], "tau": 2}})")),
                  ConfigError);
  CHECK_THROWS_AS(prior_from_json(json::parse(
                      R"({"gamma": 1, "baseline": {"family": "weibull", "rate": 0.3}, "score": {"pi1": [1, 0, 0]}})")),
                  ConfigError);
  CHECK_THROWS_AS(prior_from_json(json::parse(
                      R"({"gamma": 1, "baseline": {"rate": 0.3}, "score": {"pi1": [0.5, 0, 0]}})")),
                  DomainError);
}

TEST_CASE("scenario round trip") {
  const auto cfg = scenario_from_json(json::parse(R"({"seed": 7, "calibrate": {"target": 0.7},
      "groups": [{"n": 10}, {"n": 12, "censoring_rate": 0.1}]})"));
  CHECK(cfg.scenario.seed == 7);
  CHECK(cfg.scenario.n == IntVec2{10, 12});
  CHECK(cfg.calibration->target == 0.7);
  const auto back = scenario_from_json(to_json(cfg));
  CHECK(to_json(back) == to_json(cfg));
}

TEST_CASE("non-finite numbers become null") {
  CHECK(number_or_null(-INFINITY).is_null());
  CHECK(number_or_null(1.0) == json(1.0));
}
