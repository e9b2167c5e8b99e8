#include "martrace/experiment.hpp"

#include <doctest.h>

#include <string>

using namespace martrace;

namespace {

const char* kBaseConfig = R"json({
  "space": {"kind": "interval", "a": 0.0, "b": 1.0,
            "density": {"family": "uniform", "c": 1.0}, "atom_level": 8},
  "kernel": {"family": "brownian_min"},
  "filtration": {"mode": "dyadic", "depth": 6},
  "study": "trace_study",
  "params": {"n_min": 2, "n_max": 6, "top_k": 3}
})json";

}  // namespace

TEST_CASE("parses a complete config") {
  const auto cfg = parse_config_text(kBaseConfig);
  CHECK(std::holds_alternative<Interval>(cfg.kind));
  CHECK(cfg.atom_level == 8);
  CHECK(cfg.kernel.name == "brownian_min");
  CHECK(cfg.filtration.depth == 6);
  CHECK(cfg.study == "trace_study");
  CHECK(cfg.n_min == 2);
  CHECK(cfg.n_max == 6);
  CHECK(cfg.top_k == 3);
  CHECK(cfg.seed == 42);  // default
}

TEST_CASE("defaults when filtration and params are omitted") {
  const auto cfg = parse_config_text(R"json({
    "space": {"kind": "circle", "circumference": 6.283185307179586,
              "density": {"family": "uniform", "c": 0.159154943091895},
              "atom_level": 10},
    "kernel": {"family": "cosine_series", "coeffs": "inverse_square", "M": 200},
    "study": "spectrum"
  })json");
  CHECK(cfg.filtration.depth == 8);
  CHECK(cfg.n_max == 8);
  CHECK(cfg.kernel.name == "cosine_inverse_square");
}

TEST_CASE("rejects malformed documents") {
  CHECK_THROWS_AS(parse_config_text("{ not json"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[1, 2, 3]"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("{}"), ConfigError);
}

TEST_CASE("rejects unknown keys everywhere") {
  std::string top = kBaseConfig;
  top.insert(top.rfind('}'), R"(, "extra": 1)");
  CHECK_THROWS_WITH_AS(parse_config_text(top),
                       doctest::Contains("unknown key 'extra'"), ConfigError);

  std::string sp = kBaseConfig;
  sp.replace(sp.find("\"atom_level\": 8"), 15, "\"atom_level\": 8, \"bogus\": 0");
  CHECK_THROWS_WITH_AS(parse_config_text(sp), doctest::Contains("bogus"), ConfigError);

  std::string pr = kBaseConfig;
  pr.replace(pr.find("\"top_k\": 3"), 10, "\"top_k\": 3, \"levels\": 4");
  CHECK_THROWS_WITH_AS(parse_config_text(pr), doctest::Contains("levels"), ConfigError);
}

TEST_CASE("names the offending field in family errors") {
  CHECK_THROWS_WITH_AS(parse_config_text(R"json({
      "space": {"kind": "interval", "a": 0, "b": 1,
                "density": {"family": "uniform", "c": 1}, "atom_level": 4},
      "kernel": {"family": "levy_area"},
      "study": "spectrum"
    })json"),
                       doctest::Contains("unknown kernel family 'levy_area'"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text(R"json({
      "space": {"kind": "moebius", "density": {"family": "uniform", "c": 1},
                "atom_level": 4},
      "kernel": {"family": "brownian_min"},
      "study": "spectrum"
    })json"),
                       doctest::Contains("unknown space kind 'moebius'"), ConfigError);
}

TEST_CASE("rejects invalid ranges before computing") {
  std::string deep = kBaseConfig;
  deep.replace(deep.find("\"depth\": 6"), 10, "\"depth\": 9");
  CHECK_THROWS_WITH_AS(parse_config_text(deep),
                       doctest::Contains("depth exceeds atom_level"), ConfigError);

  std::string range = kBaseConfig;
  range.replace(range.find("\"n_max\": 6"), 10, "\"n_max\": 7");
  CHECK_THROWS_AS(parse_config_text(range), ConfigError);

  std::string level = kBaseConfig;
  level.replace(level.find("\"atom_level\": 8"), 15, "\"atom_level\": 0");
  CHECK_THROWS_AS(parse_config_text(level), ConfigError);

  // torus atom budget: 2^7 per axis -> 16384 atoms
  CHECK_THROWS_WITH_AS(parse_config_text(R"json({
      "space": {"kind": "torus2", "circumference_x": 1, "circumference_y": 1,
                "density": {"family": "uniform", "c": 1}, "atom_level": 7},
      "kernel": {"family": "gaussian_rbf", "gamma": 1.0},
      "filtration": {"mode": "dyadic", "depth": 4},
      "study": "spectrum"
    })json"),
                       doctest::Contains("atom budget"), ConfigError);

  std::string study = kBaseConfig;
  study.replace(study.find("\"trace_study\""), 13, "\"eigen_study\"");
  CHECK_THROWS_WITH_AS(parse_config_text(study),
                       doctest::Contains("unknown study 'eigen_study'"), ConfigError);
}

TEST_CASE("rejects bad kernel and density parameters") {
  std::string alpha = kBaseConfig;
  alpha.replace(alpha.find("{\"family\": \"brownian_min\"}"), 26,
                "{\"family\": \"exp_abs\", \"alpha\": -2.0}");
  CHECK_THROWS_AS(parse_config_text(alpha), ConfigError);

  std::string dens = kBaseConfig;
  dens.replace(dens.find("{\"family\": \"uniform\", \"c\": 1.0}"), 31,
               "{\"family\": \"uniform\", \"c\": 0.0}");
  CHECK_THROWS_AS(parse_config_text(dens), ConfigError);
}

TEST_CASE("cover filtrations need grid-aligned endpoints") {
  const char* tpl = R"json({
    "space": {"kind": "interval", "a": 0.0, "b": 1.0,
              "density": {"family": "uniform", "c": 1.0}, "atom_level": 4},
    "kernel": {"family": "brownian_min"},
    "filtration": {"mode": "cover", "depth": 3,
                   "cover": [[0.0, 0.75], [0.25, 1.0]]},
    "study": "sandwich_identity",
    "params": {"n_min": 1, "n_max": 3}
  })json";
  const auto cfg = parse_config_text(tpl);
  REQUIRE(cfg.filtration.cover.size() == 2);
  const auto space = build_space(cfg.kind, cfg.density, cfg.atom_level, cfg.window);
  CHECK_NOTHROW(build_filtration(space, cfg.filtration));

  auto off = cfg.filtration;
  off.cover[0].second = 0.7501;  // not a multiple of the atom width
  CHECK_THROWS_AS(build_filtration(space, off), ConfigError);
}

TEST_CASE("catalog text lists the standard studies and kernels") {
  const auto all = catalog_text();
  CHECK(all.find("brownian_min") != std::string::npos);
  CHECK(all.find("cosine_series") != std::string::npos);
  CHECK(all.find("trace_study") != std::string::npos);
  CHECK(all.find("property_suite") != std::string::npos);
  const auto filtered = catalog_text("rank_one");
  CHECK(filtered.find("rank_one_exp") != std::string::npos);
  CHECK(filtered.find("brownian_min") == std::string::npos);
}

TEST_CASE("real formatting keeps 17 significant digits") {
  CHECK(format_real(0.1) == "0.10000000000000001");
  CHECK(format_real(1.0) == "1");
  CHECK(format_real(-0.5) == "-0.5");
}

TEST_CASE("random function suite is reproducible and seed dependent") {
  const auto s = build_space(Interval{0.0, 1.0}, Uniform{1.0}, 5);
  const auto a = random_function_suite(s, 4, 123);
  const auto b = random_function_suite(s, 4, 123);
  const auto c = random_function_suite(s, 4, 124);
  REQUIRE(a.size() == 4);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK((a[i] - b[i]).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a[i].size() == s.atom_count());
    CHECK(a[i].cwiseAbs().maxCoeff() <= 1.0);
  }
  CHECK((a[0] - c[0]).cwiseAbs().maxCoeff() > 0.0);
}
