#pragma once

// JSON run configuration shared by the simulate, breakdown, sensitivity and
// detect commands. Every key is optional; unknown keys are rejected.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rayreg/detection.hpp"
#include "rayreg/errors.hpp"
#include "rayreg/estimation.hpp"
#include "rayreg/image_io.hpp"
#include "rayreg/simulation.hpp"

namespace rayreg::cli {

using nlohmann::ordered_json;

class ConfigError : public Error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : Error("config error at " + (path.empty() ? std::string("/") : path) + ": " + what) {}
};

struct RunConfig {
  std::optional<std::string> link;
  std::optional<double> delta;
  std::optional<int> reweight_iterations;
  std::optional<int> max_iter;
  std::optional<double> grad_tol;
  std::optional<std::uint64_t> seed;
  std::optional<std::vector<double>> beta_true;
  std::optional<std::vector<std::size_t>> n;
  std::optional<std::vector<double>> epsilon;
  std::optional<double> outlier_value;
  std::optional<int> replications;
  std::optional<double> control_limit;
  std::optional<std::size_t> opening_se;
  std::optional<std::size_t> dilation_se;
  std::optional<double> merge_distance_m;
  std::optional<double> pixel_size_m;
};

namespace detail {

inline double number(const ordered_json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(path, "expected a finite number");
  return d;
}

inline std::int64_t integer(const ordered_json& v, const std::string& path) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9e15) return static_cast<std::int64_t>(d);
  }
  throw ConfigError(path, "expected an integer");
}

inline double positive(const ordered_json& v, const std::string& path) {
  const double d = number(v, path);
  if (!(d > 0.0)) throw ConfigError(path, "must be positive");
  return d;
}

inline std::size_t odd_size(const ordered_json& v, const std::string& path) {
  const auto i = integer(v, path);
  if (i < 1 || i % 2 == 0) throw ConfigError(path, "must be an odd integer >= 1");
  return static_cast<std::size_t>(i);
}

inline std::size_t sample_size(const ordered_json& v, const std::string& path) {
  const auto i = integer(v, path);
  if (i < 2) throw ConfigError(path, "must be an integer >= 2");
  return static_cast<std::size_t>(i);
}

inline double fraction(const ordered_json& v, const std::string& path) {
  const double d = number(v, path);
  if (!(d >= 0.0 && d < 1.0)) throw ConfigError(path, "must lie in [0, 1)");
  return d;
}

// A scalar or a non-empty array of scalars.
template <class T, class F>
std::vector<T> one_or_many(const ordered_json& v, const std::string& path, F item) {
  std::vector<T> out;
  if (v.is_array()) {
    if (v.empty()) throw ConfigError(path, "array must not be empty");
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(item(v[i], path + "/" + std::to_string(i)));
  } else {
    out.push_back(item(v, path));
  }
  return out;
}

}  // namespace detail

inline RunConfig parse_config(const ordered_json& j) {
  using namespace detail;
  if (!j.is_object()) throw ConfigError("", "expected a JSON object");
  RunConfig c;
  for (const auto& [key, v] : j.items()) {
    const std::string path = "/" + key;
    if (key == "link") {
      if (!v.is_string()) throw ConfigError(path, "expected a string");
      const auto s = v.get<std::string>();
      if (s != "log" && s != "identity") throw ConfigError(path, "expected \"log\" or \"identity\"");
      c.link = s;
    } else if (key == "delta") {
      const double d = number(v, path);
      if (!(d > 0.0 && d < 0.5)) throw ConfigError(path, "must lie in (0, 0.5)");
      c.delta = d;
    } else if (key == "reweight_iterations") {
      const auto i = integer(v, path);
      if (i < 0) throw ConfigError(path, "must be >= 0");
      c.reweight_iterations = static_cast<int>(i);
    } else if (key == "max_iter") {
      const auto i = integer(v, path);
      if (i < 1) throw ConfigError(path, "must be >= 1");
      c.max_iter = static_cast<int>(i);
    } else if (key == "grad_tol") {
      c.grad_tol = positive(v, path);
    } else if (key == "seed") {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        throw ConfigError(path, "expected a non-negative integer");
      c.seed = v.get<std::uint64_t>();
    } else if (key == "beta_true") {
      if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a non-empty array of numbers");
      std::vector<double> b;
      for (std::size_t i = 0; i < v.size(); ++i) b.push_back(number(v[i], path + "/" + std::to_string(i)));
      c.beta_true = b;
    } else if (key == "N") {
      c.n = one_or_many<std::size_t>(v, path, sample_size);
    } else if (key == "epsilon") {
      c.epsilon = one_or_many<double>(v, path, fraction);
    } else if (key == "outlier_value") {
      c.outlier_value = positive(v, path);
    } else if (key == "replications") {
      const auto i = integer(v, path);
      if (i < 1) throw ConfigError(path, "must be >= 1");
      c.replications = static_cast<int>(i);
    } else if (key == "control_limit") {
      c.control_limit = positive(v, path);
    } else if (key == "opening_se") {
      c.opening_se = odd_size(v, path);
    } else if (key == "dilation_se") {
      c.dilation_se = odd_size(v, path);
    } else if (key == "merge_distance_m") {
      const double d = number(v, path);
      if (d < 0.0) throw ConfigError(path, "must be >= 0");
      c.merge_distance_m = d;
    } else if (key == "pixel_size_m") {
      c.pixel_size_m = positive(v, path);
    } else {
      throw ConfigError(path, "unknown key");
    }
  }
  return c;
}

inline RunConfig read_config(const std::string& path) {
  const std::string text = io::read_file(path);
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": invalid JSON (" + e.what() + ")", 0, e.byte);
  }
  try {
    return parse_config(j);
  } catch (const ConfigError& e) {
    throw Error(path + ": " + e.what());
  }
}

// Robust-fitting settings with defaults filled in.
inline RobustConfig robust_config(const RunConfig& c) {
  RobustConfig r;
  if (c.delta) r.delta = *c.delta;
  if (c.reweight_iterations) r.reweight_iterations = *c.reweight_iterations;
  if (c.max_iter) r.max_iter = *c.max_iter;
  if (c.grad_tol) r.grad_tol = *c.grad_tol;
  return r;
}

inline LinkFunction link_function(const RunConfig& c) { return LinkFunction::parse(c.link.value_or("log")); }

inline DetectorConfig detector_config(const RunConfig& c) {
  DetectorConfig d;
  if (c.control_limit) d.control_limit = *c.control_limit;
  if (c.opening_se) d.opening_se = *c.opening_se;
  if (c.dilation_se) d.dilation_se = *c.dilation_se;
  if (c.merge_distance_m) d.merge_distance_m = *c.merge_distance_m;
  if (c.pixel_size_m) d.pixel_size_m = *c.pixel_size_m;
  return d;
}

// One scenario per (N, epsilon) pair, N varying slowest.
inline std::vector<ScenarioConfig> scenario_grid(const RunConfig& c, std::uint64_t seed) {
  ScenarioConfig base;
  if (c.beta_true) base.beta_true = Eigen::Map<const Eigen::VectorXd>(c.beta_true->data(), static_cast<Eigen::Index>(c.beta_true->size()));
  if (c.outlier_value) base.outlier_value = *c.outlier_value;
  if (c.replications) base.replications = *c.replications;
  base.master_seed = seed;
  base.link = link_function(c);
  base.robust = robust_config(c);
  const std::vector<std::size_t> ns = c.n.value_or(std::vector<std::size_t>{base.n});
  const std::vector<double> eps = c.epsilon.value_or(std::vector<double>{base.epsilon});
  std::vector<ScenarioConfig> grid;
  for (std::size_t n : ns) {
    for (double e : eps) {
      ScenarioConfig s = base;
      s.n = n;
      s.epsilon = e;
      s.validate();
      grid.push_back(s);
    }
  }
  return grid;
}

// Fully resolved configuration, as recorded in the manifest.
inline ordered_json effective_config(const RunConfig& c, std::uint64_t seed) {
  const RobustConfig r = robust_config(c);
  const DetectorConfig d = detector_config(c);
  const ScenarioConfig s;
  ordered_json j;
  j["link"] = c.link.value_or("log");
  j["delta"] = r.delta;
  j["reweight_iterations"] = r.reweight_iterations;
  j["max_iter"] = r.max_iter;
  j["grad_tol"] = r.grad_tol;
  j["seed"] = seed;
  j["beta_true"] = c.beta_true.value_or(std::vector<double>(s.beta_true.data(), s.beta_true.data() + s.beta_true.size()));
  j["N"] = c.n.value_or(std::vector<std::size_t>{s.n});
  j["epsilon"] = c.epsilon.value_or(std::vector<double>{s.epsilon});
  j["outlier_value"] = c.outlier_value.value_or(s.outlier_value);
  j["replications"] = c.replications.value_or(s.replications);
  j["control_limit"] = d.control_limit;
  j["opening_se"] = d.opening_se;
  j["dilation_se"] = d.dilation_se;
  j["merge_distance_m"] = d.merge_distance_m;
  j["pixel_size_m"] = d.pixel_size_m;
  return j;
}

}  // namespace rayreg::cli
