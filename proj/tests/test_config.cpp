#include "doctest.h"
#include "moncrief/commands.hpp"
#include "moncrief/errors.hpp"

#include <filesystem>
#include <fstream>
#include <unistd.h>

using namespace moncrief;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("moncrief_config_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = scratch_dir() / name;
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("defaults are valid and round-trip through json") {
  const RunConfig c;
  CHECK_NOTHROW(validate(c));
  const RunConfig back = config_from_json(to_json(c));
  CHECK(to_json(back).dump() == to_json(c).dump());
  CHECK(config_hash(back) == config_hash(c));
  CHECK(config_hash(c).size() == 16);
}

TEST_CASE("hash follows the content") {
  RunConfig a, b;
  b.h = 0.02;
  CHECK(config_hash(a) != config_hash(b));
  b.h = a.h;
  CHECK(config_hash(a) == config_hash(b));
}

TEST_CASE("ini files are parsed with typed values") {
  const fs::path p = write_file("run.ini",
                                "[grid]\nh = 0.02\nL = 7\n"
                                "[solver]\ntol = 1e-9\n"
                                "[tt]\ncoefficients = 1, 0, 0.5, 0, 0, -2\nnormalize = true\n"
                                "[continuation]\nschedule = 0.5, 1, 2\n"
                                "[run]\nseed = 99\nout = somewhere\n");
  const RunConfig c = load_config(p.string());
  CHECK(c.h == 0.02);
  CHECK(c.L == 7);
  CHECK(c.tol == 1e-9);
  CHECK(c.coefficients[5] == -2);
  CHECK(c.normalize);
  CHECK(c.schedule == std::vector<double>{0.5, 1, 2});
  CHECK(c.seed == 99);
  CHECK(c.outDir == "somewhere");
}

TEST_CASE("json files use the same keys") {
  const fs::path p = write_file("run.json", R"({"grid": {"h": 0.03}, "scan": {"rays": 2}})");
  const RunConfig c = load_config(p.string());
  CHECK(c.h == 0.03);
  CHECK(c.scanRays == 2);
}

TEST_CASE("coefficient files override the inline list") {
  write_file("coef.txt", "1 2 3\n4, 5, 6\n");
  const fs::path p = write_file("coef.ini", "[tt]\ncoefficient_file = coef.txt\n");
  const RunConfig c = load_config(p.string());
  CHECK(c.coefficients == std::array<double, 6>{1, 2, 3, 4, 5, 6});
  write_file("short.txt", "1 2 3\n");
  const fs::path q = write_file("short.ini", "[tt]\ncoefficient_file = short.txt\n");
  CHECK_THROWS_AS(load_config(q.string()), ConfigError);
}

TEST_CASE("bad configurations are rejected") {
  CHECK_THROWS_AS(load_config((scratch_dir() / "missing.ini").string()), ConfigError);
  const char* bad[] = {
      "[grid]\nh = -0.1\n",          "[grid]\nh = abc\n",       "[nope]\nx = 1\n",
      "[grid]\nspacing = 0.1\n",     "[solver]\nmax_iter = 0\n", "[continuation]\nschedule = 2, 1\n",
      "[tt]\nnormalize = maybe\n",   "[scan]\nscales = 1, x\n",  "[mms]\nspacings = 0.5\n",
      "[tt]\ncoefficients = 1, 2\n",
  };
  int i = 0;
  for (const char* text : bad) {
    const fs::path p = write_file("bad" + std::to_string(i++) + ".ini", text);
    CAPTURE(text);
    CHECK_THROWS_AS(load_config(p.string()), ConfigError);
  }
  const fs::path j = write_file("bad.json", R"({"grid": {"h": "fine"}})");
  CHECK_THROWS_AS(load_config(j.string()), ConfigError);
  const fs::path k = write_file("broken.json", R"({"grid": )");
  CHECK_THROWS_AS(load_config(k.string()), ConfigError);
}

TEST_CASE("lists parse with whitespace and reject junk") {
  CHECK(parse_list(" 1, 2.5 ,3e-1", "k") == std::vector<double>{1, 2.5, 0.3});
  CHECK_THROWS_AS(parse_list("1, 2x", "k"), ConfigError);
}

TEST_CASE("reports track pass, fail and error") {
  RunReport r("solve", RunConfig{});
  r.check_below("small", 1e-12, 1e-10);
  r.check_above("big", 3.0, 2.0);
  CHECK(r.all_pass());
  CHECK(r.to_json()["status"] == "pass");
  r.check_below("nan fails", std::numeric_limits<double>::quiet_NaN(), 1.0);
  CHECK_FALSE(r.all_pass());
  CHECK(r.to_json()["status"] == "fail");
  CHECK(r.to_json()["checks"][2]["value"].is_null());
  r.fail("solver diverged");
  CHECK(r.to_json()["status"] == "error");
  CHECK(r.to_json()["config_hash"] == config_hash(RunConfig{}));
}

TEST_CASE("run directories are never reused") {
  const fs::path a = make_run_dir(scratch_dir() / "runs", "abc");
  const fs::path b = make_run_dir(scratch_dir() / "runs", "abc");
  CHECK(a != b);
  CHECK(fs::is_directory(a));
  CHECK(a.filename().string().rfind("abc-", 0) == 0);
}

TEST_CASE("metric files are tied to their grid") {
  const FuchsianGroup g = build_bolza_group(4);
  const SurfaceGrid grid = build_grid(g, 0.05);
  const SurfaceGrid other = build_grid(g, 0.06);
  const Vector e = grid.rho_factor_unknowns();
  const GammaMetric m = import_gamma(grid, {e, Vector::Zero(e.size()), e}, "rho");
  const nlohmann::json j = gamma_to_json(grid, m);
  const GammaMetric back = gamma_from_json(grid, j);
  CHECK(metric_distance(grid, back.gamma, m.gamma) == 0);
  CHECK(back.provenance == "rho (imported)");
  CHECK_THROWS_AS(gamma_from_json(other, j), ConfigError);
  nlohmann::json broken = j;
  broken.erase("g12");
  CHECK_THROWS_AS(gamma_from_json(grid, broken), ConfigError);
}
