#include "moncrief/report.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>

#include "moncrief/errors.hpp"

namespace moncrief {

using nlohmann::json;

RunReport::RunReport(std::string command, const RunConfig& config) {
  root_["command"] = std::move(command);
  root_["config"] = moncrief::to_json(config);
  root_["config_hash"] = config_hash(config);
  root_["checks"] = json::array();
  root_["timings"] = json::object();
}

void RunReport::check(const std::string& name, double value, double tolerance, bool pass) {
  json c;
  c["name"] = name;
  c["value"] = std::isfinite(value) ? json(value) : json(nullptr);
  c["tolerance"] = tolerance;
  c["pass"] = pass;
  root_["checks"].push_back(std::move(c));
}

void RunReport::check_below(const std::string& name, double value, double tolerance) {
  check(name, value, tolerance, value <= tolerance);
}

void RunReport::check_above(const std::string& name, double value, double threshold) {
  check(name, value, threshold, value >= threshold);
}

void RunReport::fail(const std::string& message) {
  error_ = message;
  root_["error"] = message;
}

bool RunReport::all_pass() const {
  if (failed()) return false;
  for (const auto& c : root_["checks"]) {
    if (!c["pass"].get<bool>()) return false;
  }
  return true;
}

json RunReport::to_json() const {
  json out = root_;
  out["status"] = failed() ? "error" : (all_pass() ? "pass" : "fail");
  return out;
}

std::filesystem::path make_run_dir(const std::filesystem::path& out, const std::string& hash) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
  std::filesystem::create_directories(out);
  const std::string base = hash + "-" + stamp;
  for (int i = 0;; ++i) {
    const std::filesystem::path dir = out / (i == 0 ? base : base + "-" + std::to_string(i));
    if (std::filesystem::create_directory(dir)) return dir;
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

void write_fields_csv(const std::filesystem::path& path, const SurfaceGrid& grid, const ScalarField& u,
                      const DerivedGeometry& geometry, const ScalarField& residual) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  const ScalarField R = curvature_g(grid, geometry.metric.gFull);
  f << "node,x,y,u,B,lambda,R,residual\n" << std::setprecision(12);
  for (Eigen::Index k = 0; k < grid.unknownCount; ++k) {
    f << k << ',' << grid.nodes[k].real() << ',' << grid.nodes[k].imag() << ',' << u[k] << ',' << geometry.B.values[k]
      << ',' << geometry.lambda.lambda[k] << ',' << R[k] << ',' << residual[k] << '\n';
  }
}

void write_scan_csv(const std::filesystem::path& path, const std::vector<ScanTable>& rays) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "ray,scale,supnorm,energy,areaG,minB,maxB\n" << std::setprecision(12);
  for (std::size_t r = 0; r < rays.size(); ++r) {
    for (const ScanRow& row : rays[r].rows) {
      f << r << ',' << row.scale << ',' << row.supNorm << ',' << row.energy << ',' << row.areaG << ',' << row.minB << ','
        << row.maxB << '\n';
    }
  }
}

std::string grid_hash(const LatticeGrid& grid) {
  std::uint64_t h = 14695981039346656037ull;
  const auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  mix(static_cast<std::uint64_t>(std::llround(grid.h * 1e12)));
  mix(static_cast<std::uint64_t>(grid.unknownCount));
  for (const auto& ij : grid.latticeIndex) {
    mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(ij[0])));
    mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(ij[1])));
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json gamma_to_json(const LatticeGrid& grid, const GammaMetric& gamma) {
  json j;
  j["grid_hash"] = grid_hash(grid);
  j["h"] = grid.h;
  j["provenance"] = gamma.provenance;
  j["curvature_error"] = gamma.maxCurvatureError;
  j["g11"] = std::vector<double>(gamma.gamma.t11.data(), gamma.gamma.t11.data() + gamma.gamma.size());
  j["g12"] = std::vector<double>(gamma.gamma.t12.data(), gamma.gamma.t12.data() + gamma.gamma.size());
  j["g22"] = std::vector<double>(gamma.gamma.t22.data(), gamma.gamma.t22.data() + gamma.gamma.size());
  return j;
}

GammaMetric gamma_from_json(const SurfaceGrid& grid, const json& j) {
  try {
    if (j.at("grid_hash").get<std::string>() != grid_hash(grid)) throw ConfigError("metric was sampled on another grid");
    const auto a = j.at("g11").get<std::vector<double>>();
    const auto b = j.at("g12").get<std::vector<double>>();
    const auto c = j.at("g22").get<std::vector<double>>();
    const auto n = static_cast<std::size_t>(grid.unknownCount);
    if (a.size() != n || b.size() != n || c.size() != n) throw ConfigError("metric size does not match the grid");
    SymTensorField t{Eigen::Map<const Vector>(a.data(), grid.unknownCount),
                     Eigen::Map<const Vector>(b.data(), grid.unknownCount),
                     Eigen::Map<const Vector>(c.data(), grid.unknownCount)};
    return import_gamma(grid, t, j.value("provenance", std::string("import")) + " (imported)");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed metric file: ") + e.what());
  }
}

json tt_to_json(const TTField& z, Eigen::Index interiorCount) {
  json j;
  j["coefficients"] = z.coefficients;
  j["L"] = z.L;
  j["supnorm"] = z.supNorm;
  j["tail_estimate"] = z.tailEstimate;
  j["z11"] = std::vector<double>(z.tensor.t11.data(), z.tensor.t11.data() + interiorCount);
  j["z12"] = std::vector<double>(z.tensor.t12.data(), z.tensor.t12.data() + interiorCount);
  return j;
}

}  // namespace moncrief
