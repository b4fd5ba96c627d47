#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "curveflow/config.hpp"
#include "curveflow/errors.hpp"

using namespace curveflow;

namespace {

const char* const kSphere = R"(; sphere preset
[domain]
kind = disk
radius = 1.0

[grid]
n_rho = 24
n_theta = 32

[curvature]
family = combined
n = 2
index = 1

[forcing]
preset = sphere
rho = 2.0

[initial]
preset = sphere_approach
rho_start = 1.6

[solver]
tol_res = 1e-7
window_time = 0.5
window_dt = 0.005
)";

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "test.ini");
}

int parse_error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("test.ini:") == 0);
    return e.line();
  }
  FAIL("no ParseError");
  return -1;
}

}  // namespace

TEST_CASE("sphere preset loads") {
  const RunConfig cfg = parse(kSphere);
  CHECK(cfg.flow.domain.kind == DomainKind::kDisk);
  CHECK(cfg.flow.n_rho == 24);
  CHECK(cfg.flow.n_theta == 32);
  CHECK(cfg.flow.scheme == TimeScheme::kImplicit);
  CHECK(cfg.flow.tol_res == 1e-7);
  CHECK(cfg.flow.window_time == 0.5);
  CHECK(cfg.flow.window_dt == 0.005);
  CHECK(cfg.has_sphere_reference);
  CHECK(cfg.sphere_rho == 2.0);
  CHECK(sphere_reference(cfg, 0.6, 0.0) == doctest::Approx(-std::sqrt(4.0 - 0.36)));
  const double x[2] = {0.3, -0.2};
  CHECK(cfg.flow.forcing.Phi(x, -1.7) == doctest::Approx(0.5));
}

TEST_CASE("defaults and optional keys") {
  const RunConfig cfg = parse("[domain]\nkind = disk\n");
  CHECK(cfg.flow.n_rho == 64);
  CHECK(cfg.flow.n_theta == 64);
  CHECK(cfg.out_dir == "out");
  CHECK(cfg.seed == 1);

  std::string with_dent = kSphere;
  with_dent.replace(with_dent.find("rho_start = 1.6"), 15, "rho_start = 1.6\ndent = 0.05\ndent_width = 0.2");
  const RunConfig d = parse(with_dent);
  const RunConfig base = parse(kSphere);
  CHECK(d.flow.initial.value(0.0, 0.0) - base.flow.initial.value(0.0, 0.0) == doctest::Approx(0.05));
  CHECK(d.flow.initial.value(0.2, 0.0) - base.flow.initial.value(0.2, 0.0) == doctest::Approx(0.05 * std::exp(-1.0)));
}

TEST_CASE("forcing hypotheses are checked") {
  SUBCASE("Phi must be positive") {
    const std::string text = "[forcing]\npreset = affine\nPhi0 = -1\nk = 1\n[initial]\npreset = paraboloid\n";
    try {
      parse(text);
      FAIL("accepted");
    } catch (const HypothesisError& e) {
      REQUIRE_FALSE(e.violations().empty());
      bool found = false;
      for (const auto& v : e.violations()) found = found || v.hypothesis.find("Phi > 0") != std::string::npos;
      CHECK(found);
      CHECK_FALSE(e.violations()[0].witness.empty());
    }
  }
  SUBCASE("phi_z must be strictly negative") {
    const std::string text = "[forcing]\npreset = affine\nPhi0 = 1\nk = 0\n[initial]\npreset = paraboloid\n";
    try {
      parse(text);
      FAIL("accepted");
    } catch (const HypothesisError& e) {
      bool found = false;
      for (const auto& v : e.violations()) found = found || v.hypothesis.find("phi_z") != std::string::npos;
      CHECK(found);
    }
  }
  SUBCASE("Phi_z must be non-negative") {
    const std::string text = "[forcing]\npreset = affine\nPhi0 = 30\nPhi1 = -0.5\nk = 1\n[initial]\npreset = paraboloid\n";
    CHECK_THROWS_AS(parse(text), HypothesisError);
  }
  SUBCASE("an admissible affine forcing loads") {
    const std::string text = "[forcing]\npreset = affine\nPhi0 = 1\nPhi1 = 0.1\nk = 1\nz_bound = 5\n[initial]\npreset = paraboloid\n";
    const RunConfig cfg = parse(text);
    CHECK_FALSE(cfg.has_sphere_reference);
    CHECK_THROWS_AS(sphere_reference(cfg, 0.0, 0.0), UsageError);
  }
}

TEST_CASE("malformed input reports the line") {
  CHECK(parse_error_line("[domain]\nkind = disk\n[grid]\nn_rho = 12\ncolour = red\n") == 5);
  CHECK(parse_error_line("[domain]\nkind = disk\n\n[plotting]\nx = 1\n") == 4);
  CHECK(parse_error_line("[grid]\nn_rho = twelve\n") == 2);
  CHECK(parse_error_line("[solver]\n\ntol_res = 1e-8x\n") == 3);
  CHECK(parse_error_line("[solver]\nt_max = nan\n") == 2);
  CHECK(parse_error_line("[barrier]\nenabled = maybe\n") == 2);
  CHECK(parse_error_line("[domain]\nkind = torus\n") == 2);
  CHECK(parse_error_line("[domain]\nkind = disk\nthis line has no equals sign\n") == 3);
  CHECK(parse_error_line("[curvature]\nfamily = cubic\n") == 2);
}

TEST_CASE("invalid values raise ConfigError") {
  CHECK_THROWS_AS(parse("[solver]\nsigma = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse("[solver]\nscheme = rk4\n"), ConfigError);
  CHECK_THROWS_AS(parse("[solver]\nwindow_dt = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse("[domain]\nkind = ellipse\n[initial]\npreset = sphere_approach\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), ConfigError);
}

TEST_CASE("hypothesis sampling is deterministic in the seed") {
  RunConfig cfg = parse(kSphere);
  cfg.seed = 7;
  CHECK_NOTHROW(validate_hypotheses(cfg));
  const std::string bad = "[forcing]\npreset = affine\nPhi0 = 0.2\nPhi1 = 0.05\nk = 1\nz_bound = 10\n[initial]\npreset = paraboloid\n";
  std::string first, second;
  try {
    parse(bad);
  } catch (const HypothesisError& e) {
    first = e.what();
  }
  try {
    parse(bad);
  } catch (const HypothesisError& e) {
    second = e.what();
  }
  CHECK_FALSE(first.empty());
  CHECK(first == second);
}
