// rayreg command-line front end.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "json.hpp"
#include "manifest.hpp"
#include "rayreg/rayreg.hpp"
#include "rayreg/report.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace rayreg::cli {
namespace {

constexpr std::uint64_t kSimulationSeed = 2021;
constexpr std::uint64_t kSceneSeed = 7;

void warn(const std::string& msg) { std::cerr << "warning: " << msg << "\n"; }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Writes artifacts into one directory and remembers their names.
class OutputDir {
 public:
  explicit OutputDir(fs::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, std::string_view data) {
    fs::create_directories(dir_);
    io::write_file((dir_ / name).string(), data);
    written_.push_back(name);
    std::cout << "wrote " << (dir_ / name).string() << "\n";
  }
  void write_json(const std::string& name, const ordered_json& j) { write(name, j.dump(2) + "\n"); }

  const fs::path& path() const { return dir_; }
  const std::vector<std::string>& written() const { return written_; }

 private:
  fs::path dir_;
  std::vector<std::string> written_;
};

// csv: comma-separated with a header row; text: right-aligned columns.
std::string render_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows,
                         bool csv) {
  std::string out;
  if (csv) {
    auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + r[i];
      out += "\n";
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
  }
  std::vector<std::size_t> width(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) width[i] = header[i].size();
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += "  ";
      const std::size_t pad = width[i] - r[i].size();
      if (i == 0)
        out += r[i] + std::string(pad, ' ');
      else
        out += std::string(pad, ' ') + r[i];
    }
    out += "\n";
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

// ---- shared option groups ----

struct Globals {
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::string out_dir = "out";
  std::string format = "json";
  std::string config_path;

  unsigned thread_count() const { return threads == 0 ? default_threads() : threads; }
};

struct FitOptions {
  std::string link;
  std::optional<double> delta;
  std::optional<int> reweight_iterations;
  std::optional<int> max_iter;
  std::optional<double> grad_tol;

  void add(CLI::App* app) {
    app->add_option("--link", link, "Link function")->check(CLI::IsMember({"log", "identity"}));
    app->add_option("--delta", delta, "Tail probability for down-weighting");
    app->add_option("--reweight-iterations", reweight_iterations, "Weight/refit passes after the MLE");
    app->add_option("--max-iter", max_iter, "BFGS iteration cap");
    app->add_option("--grad-tol", grad_tol, "Convergence tolerance on the score");
  }

  void apply(RunConfig& c) const {
    if (!link.empty()) c.link = link;
    if (delta) {
      if (!(*delta > 0.0 && *delta < 0.5)) throw DomainError("--delta must lie in (0, 0.5)");
      c.delta = delta;
    }
    if (reweight_iterations) c.reweight_iterations = reweight_iterations;
    if (max_iter) c.max_iter = max_iter;
    if (grad_tol) c.grad_tol = grad_tol;
  }
};

struct DesignOptions {
  std::string data;
  std::string response;
  std::vector<std::string> covariates;
  std::string dummy;
  std::string reference;

  void add(CLI::App* app) {
    app->add_option("--data", data, "Headered CSV table")->required();
    app->add_option("--response", response, "Response column")->required();
    app->add_option("--covariates", covariates, "Covariate columns (an intercept is always added)")->delimiter(',');
    app->add_option("--dummy", dummy, "Label column coded as region indicators");
    app->add_option("--reference", reference, "Reference level for --dummy (default: first level)");
  }

  ModelSpec build(LinkFunction link) const {
    if (!dummy.empty() && !covariates.empty()) throw DomainError("use either --covariates or --dummy, not both");
    if (!reference.empty() && dummy.empty()) throw DomainError("--reference requires --dummy");
    const io::Table table = io::read_table(data);
    Eigen::VectorXd y = table.numeric_column(response);
    if (!dummy.empty()) {
      const auto labels = table.text_column(dummy);
      if (labels.empty()) throw DomainError("data table has no rows");
      return ModelSpec(dummy_design(labels, reference.empty() ? labels.front() : reference), std::move(y), link);
    }
    Eigen::MatrixXd x(y.size(), static_cast<Eigen::Index>(covariates.size() + 1));
    x.col(0).setOnes();
    std::vector<std::string> names{"(Intercept)"};
    for (std::size_t j = 0; j < covariates.size(); ++j) {
      x.col(static_cast<Eigen::Index>(j + 1)) = table.numeric_column(covariates[j]);
      names.push_back(covariates[j]);
    }
    return ModelSpec(DesignMatrix(std::move(x), std::move(names)), std::move(y), link);
  }
};

struct Run {
  std::string command;
  RunConfig config;
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
};

RunConfig load_config(const Globals& g) { return g.config_path.empty() ? RunConfig{} : read_config(g.config_path); }

std::uint64_t resolve_seed(const Globals& g, const RunConfig& c, std::uint64_t fallback) {
  if (g.seed) return *g.seed;
  return c.seed.value_or(fallback);
}

ordered_json fit_block(const FitResult& f, LinkFunction link, double pfa) {
  if (!f.converged) warn(std::string(to_string(f.method)) + " fit did not converge");
  return report::to_json(f, link, pfa);
}

std::vector<std::vector<std::string>> coefficient_rows(const FitResult& f, double pfa, bool with_method) {
  std::vector<std::vector<std::string>> rows;
  for (Eigen::Index i = 0; i < f.beta_hat.size(); ++i) {
    std::vector<std::string> r;
    if (with_method) r.emplace_back(to_string(f.method));
    r.push_back(f.column_names[static_cast<std::size_t>(i)]);
    r.push_back(fmt(f.beta_hat(i)));
    r.push_back(fmt(f.std_errors(i)));
    if (f.converged) {
      const WaldReport w = wald_test(f, {static_cast<std::size_t>(i)}, Eigen::VectorXd::Zero(1), pfa);
      r.push_back(fmt(w.statistic));
      r.push_back(fmt(w.p_value));
    } else {
      r.insert(r.end(), {"nan", "nan"});
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---- commands ----

void cmd_fit(const Globals& g, const DesignOptions& d, const FitOptions& fo, const std::string& method, double pfa,
             bool delta_flag, Run& run, OutputDir& out) {
  run.config = load_config(g);
  fo.apply(run.config);
  run.inputs.push_back(d.data);
  if (!g.config_path.empty()) run.inputs.push_back(g.config_path);
  if (method == "mle" && (delta_flag || run.config.delta)) warn("delta is ignored with --method mle");
  const LinkFunction link = link_function(run.config);
  const RobustConfig rc = robust_config(run.config);
  rc.validate();
  const ModelSpec spec = d.build(link);

  std::vector<FitResult> fits;
  if (method == "both") {
    FitPair p = fit_both(spec, rc);
    fits.push_back(std::move(p.mle));
    fits.push_back(std::move(p.wmle));
  } else {
    fits.push_back(fit(spec, rc, parse_method(method)));
  }
  const bool intercept_only = spec.parameters() == 1;
  if (!d.dummy.empty() && intercept_only) warn("only one level in '" + d.dummy + "'; no ground-type test is possible");

  if (g.format == "json") {
    ordered_json j;
    j["data"] = d.data;
    j["response"] = d.response;
    j["observations"] = spec.observations();
    j["pfa"] = pfa;
    ordered_json arr = ordered_json::array();
    for (const auto& f : fits) {
      ordered_json b = fit_block(f, link, pfa);
      if (!d.dummy.empty() && f.converged) {
        ordered_json tests = ordered_json::array();
        for (const auto& w : ground_type_detect(f, pfa)) tests.push_back(report::to_json(w));
        b["ground_type_tests"] = std::move(tests);
      }
      arr.push_back(std::move(b));
    }
    j["fits"] = std::move(arr);
    out.write_json("fit.json", j);
  } else {
    std::vector<std::vector<std::string>> rows;
    for (const auto& f : fits) {
      if (!f.converged) warn(std::string(to_string(f.method)) + " fit did not converge");
      for (auto& r : coefficient_rows(f, pfa, true)) rows.push_back(std::move(r));
    }
    const std::vector<std::string> header{"method", "coefficient", "estimate", "std_error", "wald_statistic", "p_value"};
    out.write(g.format == "csv" ? "fit.csv" : "fit.txt", render_table(header, rows, g.format == "csv"));
  }
}

std::vector<std::size_t> resolve_interest(const std::vector<std::string>& names, const std::vector<std::string>& columns) {
  std::vector<std::size_t> idx;
  for (const auto& n : names) {
    const auto it = std::find(columns.begin(), columns.end(), n);
    if (it != columns.end()) {
      idx.push_back(static_cast<std::size_t>(it - columns.begin()));
      continue;
    }
    std::size_t pos = 0;
    std::size_t v = 0;
    try {
      v = std::stoul(n, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != n.size() || pos == 0) throw DomainError("unknown coefficient '" + n + "'");
    idx.push_back(v);
  }
  return idx;
}

void cmd_wald(const Globals& g, const DesignOptions& d, const FitOptions& fo, const std::string& method,
              const std::vector<std::string>& test, const std::vector<double>& null_values, double pfa, Run& run,
              OutputDir& out) {
  run.config = load_config(g);
  fo.apply(run.config);
  run.inputs.push_back(d.data);
  if (!g.config_path.empty()) run.inputs.push_back(g.config_path);
  const LinkFunction link = link_function(run.config);
  const ModelSpec spec = d.build(link);
  const FitResult f = fit(spec, robust_config(run.config), parse_method(method));
  const auto interest = resolve_interest(test, f.column_names);
  Eigen::VectorXd null_value = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(interest.size()));
  if (!null_values.empty()) {
    if (null_values.size() != interest.size()) throw DomainError("--null needs one value per tested coefficient");
    for (std::size_t i = 0; i < null_values.size(); ++i) null_value(static_cast<Eigen::Index>(i)) = null_values[i];
  }
  const WaldReport w = wald_test(f, interest, null_value, pfa);
  std::vector<std::string> names;
  for (std::size_t i : interest) names.push_back(f.column_names[i]);

  if (g.format == "json") {
    ordered_json j;
    j["fit"] = report::to_json(f, link, pfa);
    ordered_json t = report::to_json(w);
    t["names"] = names;
    j["test"] = std::move(t);
    out.write_json("wald.json", j);
  } else {
    std::string joined;
    for (const auto& n : names) joined += (joined.empty() ? "" : "+") + n;
    const std::vector<std::string> header{"method", "coefficients", "statistic", "dof", "p_value", "threshold", "reject_null"};
    const std::vector<std::vector<std::string>> rows{{std::string(to_string(f.method)), joined, fmt(w.statistic),
                                                      std::to_string(w.dof), fmt(w.p_value), fmt(w.threshold),
                                                      w.reject_null ? "true" : "false"}};
    out.write(g.format == "csv" ? "wald.csv" : "wald.txt", render_table(header, rows, g.format == "csv"));
  }
}

void cmd_residuals(const Globals& g, const DesignOptions& d, const FitOptions& fo, const std::string& method, Run& run,
                   OutputDir& out) {
  run.config = load_config(g);
  fo.apply(run.config);
  run.inputs.push_back(d.data);
  if (!g.config_path.empty()) run.inputs.push_back(g.config_path);
  const LinkFunction link = link_function(run.config);
  const ModelSpec spec = d.build(link);
  const FitResult f = fit(spec, robust_config(run.config), parse_method(method));
  if (!f.converged) warn(std::string(to_string(f.method)) + " fit did not converge");
  const QuantileResiduals r = quantile_residuals(spec, f);
  if (!r.clamped.empty()) warn(std::to_string(r.clamped.size()) + " residuals were clamped");
  const auto& y = spec.response();

  if (g.format == "json") {
    ordered_json j;
    j["method"] = std::string(to_string(f.method));
    j["converged"] = f.converged;
    j["clamped"] = r.clamped;
    j["residuals"] = report::to_array(r.values);
    out.write_json("residuals.json", j);
  } else {
    const bool csv = g.format == "csv";
    std::vector<std::vector<std::string>> rows;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      auto num = [&](double v) { return csv ? io::format_double(v) : fmt(v); };
      rows.push_back({std::to_string(i), num(y(i)), num(f.mu_hat(i)), num(f.weights(i)), num(r.values(i))});
    }
    out.write(csv ? "residuals.csv" : "residuals.txt",
              render_table({"index", "y", "mu_hat", "weight", "residual"}, rows, csv));
  }
}

void write_curve(const Globals& g, OutputDir& out, const std::string& stem, const std::vector<CurvePoint>& curve) {
  if (g.format == "json") {
    out.write_json(stem + ".json", report::to_json(curve));
  } else if (g.format == "csv") {
    out.write(stem + ".csv", report::curve_csv(curve));
  } else {
    std::vector<std::vector<std::string>> rows;
    for (const auto& p : curve) rows.push_back({fmt(p.x), fmt(p.mle), fmt(p.wmle)});
    out.write(stem + ".txt", render_table({"x", "mle_value", "wmle_value"}, rows, false));
  }
}

std::vector<ScenarioConfig> scenario_setup(const Globals& g, const FitOptions& fo, std::optional<int> replications,
                                           Run& run) {
  run.config = load_config(g);
  fo.apply(run.config);
  if (replications) run.config.replications = replications;
  if (!g.config_path.empty()) run.inputs.push_back(g.config_path);
  run.seed = resolve_seed(g, run.config, kSimulationSeed);
  auto grid = scenario_grid(run.config, run.seed);
  if (grid.front().replications == 1) warn("replications = 1; Monte Carlo summaries are unreliable");
  for (const auto& s : grid)
    if (s.epsilon >= 0.5) warn("epsilon = " + fmt(s.epsilon) + " is at or beyond 50% contamination");
  return grid;
}

std::vector<std::size_t> breakdown_counts(const ScenarioConfig& s, std::optional<std::size_t> max_outliers,
                                          std::size_t step) {
  if (step == 0) throw DomainError("--step must be positive");
  const std::size_t hi = max_outliers.value_or(s.n / 5);
  if (hi >= s.n) throw DomainError("--max-outliers must be below N");
  std::vector<std::size_t> counts;
  for (std::size_t c = step; c <= hi; c += step) counts.push_back(c);
  if (counts.empty()) throw DomainError("no outlier counts to evaluate");
  return counts;
}

const ScenarioConfig& single_scenario(const std::vector<ScenarioConfig>& grid, const char* what) {
  std::size_t n = grid.front().n;
  for (const auto& s : grid)
    if (s.n != n) throw DomainError(std::string(what) + " takes a single N");
  return grid.front();
}

void cmd_simulate(const Globals& g, const FitOptions& fo, std::optional<int> replications, bool with_breakdown,
                  bool with_sensitivity, Run& run, OutputDir& out) {
  const auto grid = scenario_setup(g, fo, replications, run);
  const auto cells = run_table(grid, g.thread_count());
  if (g.format == "json") {
    out.write_json("table.json", report::to_json(cells));
  } else if (g.format == "text") {
    out.write("table.txt", report::text_table(cells));
  } else {
    std::vector<std::vector<std::string>> rows;
    for (const auto& c : cells) {
      for (const MonteCarloReport* r : {&c.wmle, &c.mle}) {
        for (Eigen::Index i = 0; i < r->truth.size(); ++i)
          rows.push_back({std::to_string(c.scenario.n), io::format_double(c.scenario.epsilon),
                          std::string(to_string(r->method)), r->parameter_names[static_cast<std::size_t>(i)],
                          io::format_double(r->mean(i)), io::format_double(r->relative_bias_pct(i)),
                          io::format_double(r->mse(i))});
        rows.push_back({std::to_string(c.scenario.n), io::format_double(c.scenario.epsilon),
                        std::string(to_string(r->method)), "absolute_total", "",
                        io::format_double(r->absolute_total_rb), io::format_double(r->absolute_total_mse)});
      }
    }
    out.write("table.csv", render_table({"N", "epsilon", "method", "parameter", "mean", "rb_pct", "mse"}, rows, true));
  }
  // curves use the first cell's N and are always CSV
  if (with_breakdown) {
    const ScenarioConfig& s = grid.front();
    out.write("breakdown.csv", report::curve_csv(breakdown_curve(s, breakdown_counts(s, std::nullopt, 1), g.thread_count())));
  }
  if (with_sensitivity) {
    ScenarioConfig s = grid.front();
    std::vector<double> values;
    for (int v = 1; v <= 20; ++v) values.push_back(v);
    out.write("sensitivity.csv", report::curve_csv(sensitivity_curve(s, values, SensitivityMode::single_outlier,
                                                                      g.thread_count())));
  }
}

void cmd_breakdown(const Globals& g, const FitOptions& fo, std::optional<int> replications,
                   std::optional<std::size_t> max_outliers, std::size_t step, Run& run, OutputDir& out) {
  const auto grid = scenario_setup(g, fo, replications, run);
  const ScenarioConfig& s = single_scenario(grid, "breakdown");
  write_curve(g, out, "breakdown", breakdown_curve(s, breakdown_counts(s, max_outliers, step), g.thread_count()));
}

void cmd_sensitivity(const Globals& g, const FitOptions& fo, std::optional<int> replications,
                     std::vector<double> values, const std::string& mode, Run& run, OutputDir& out) {
  const auto grid = scenario_setup(g, fo, replications, run);
  ScenarioConfig s = single_scenario(grid, "sensitivity");
  const SensitivityMode m = parse_sensitivity_mode(mode);
  if (m == SensitivityMode::contaminated_fraction && !run.config.epsilon) s.epsilon = 0.05;
  if (values.empty())
    for (int v = 1; v <= 20; ++v) values.push_back(v);
  write_curve(g, out, "sensitivity", sensitivity_curve(s, values, m, g.thread_count()));
}

Rect parse_rect(const std::vector<std::size_t>& v) {
  if (v.size() != 4) throw DomainError("--train expects row,col,rows,cols");
  return Rect{v[0], v[1], v[2], v[3]};
}

std::vector<TruthPoint> read_truth(const std::string& path) {
  const io::Table t = io::read_table(path);
  const Eigen::VectorXd r = t.numeric_column("row");
  const Eigen::VectorXd c = t.numeric_column("col");
  std::vector<TruthPoint> out;
  for (Eigen::Index i = 0; i < r.size(); ++i) out.push_back({r(i), c(i)});
  return out;
}

struct DetectOptions {
  std::string interest;
  std::vector<std::string> covariates;
  std::vector<std::size_t> train;
  std::string method = "wmle";
  std::string truth;
  bool upper_tail_only = false;
  std::optional<double> control_limit;
};

void cmd_detect(const Globals& g, const DetectOptions& o, const FitOptions& fo, Run& run, OutputDir& out) {
  run.config = load_config(g);
  fo.apply(run.config);
  if (o.control_limit) {
    if (!(*o.control_limit > 0.0)) throw DomainError("--control-limit must be positive");
    run.config.control_limit = o.control_limit;
  }
  if (o.method == "mle" && run.config.delta) warn("delta is ignored with --method mle");
  run.inputs.push_back(o.interest);
  for (const auto& c : o.covariates) run.inputs.push_back(c);
  if (!o.truth.empty()) run.inputs.push_back(o.truth);
  if (!g.config_path.empty()) run.inputs.push_back(g.config_path);

  const ImageMatrix interest = io::read_image(o.interest);
  std::vector<ImageMatrix> covs;
  for (const auto& c : o.covariates) covs.push_back(io::read_image(c));
  DetectorConfig dc = detector_config(run.config);
  dc.upper_tail_only = o.upper_tail_only;
  const Rect train = parse_rect(o.train);
  const Method method = parse_method(o.method);
  const LinkFunction link = link_function(run.config);

  DetectionResult r = o.truth.empty()
                          ? detect(interest, covs, train, dc, robust_config(run.config), method, link)
                          : detect(interest, covs, train, dc, robust_config(run.config), read_truth(o.truth), method, link);
  if (!r.fit.converged) warn(std::string(to_string(method)) + " fit did not converge");

  out.write("mask.pgm", io::to_pgm(r.mask));
  out.write("mask.csv", io::to_csv(r.mask));
  ordered_json cl;
  cl["method"] = std::string(to_string(method));
  cl["control_limit"] = dc.control_limit;
  cl["upper_tail_only"] = dc.upper_tail_only;
  cl["flagged_pixels"] = r.raw_mask.count();
  cl["mask_pixels"] = r.mask.count();
  cl["clamped_residuals"] = r.clamped_residuals;
  cl["fit"] = report::to_json(r.fit, link);
  cl["clusters"] = report::to_json(r.clusters);
  out.write_json("clusters.json", cl);
  if (r.score) out.write_json("score.json", report::to_json(*r.score));
}

void cmd_synth_scene(const Globals& g, SceneConfig sc, const std::string& image_format, Run& run, OutputDir& out) {
  run.config = load_config(g);
  if (!g.config_path.empty()) run.inputs.push_back(g.config_path);
  run.seed = resolve_seed(g, run.config, kSceneSeed);
  sc.seed = run.seed;
  const SyntheticScene s = make_scene(sc);
  const bool binary = image_format == "rrm";
  const std::string ext = binary ? ".rrm" : ".csv";
  auto encode = [&](const ImageMatrix& m) { return binary ? io::to_rrm(m) : io::to_csv(m); };
  out.write("interest" + ext, encode(s.interest));
  for (std::size_t k = 0; k < s.references.size(); ++k) out.write("ref" + std::to_string(k + 1) + ext, encode(s.references[k]));
  std::string truth = "row,col\n";
  for (const auto& t : s.truth) truth += io::format_double(t.row) + "," + io::format_double(t.col) + "\n";
  out.write("truth.csv", truth);
  ordered_json j;
  j["rows"] = sc.rows;
  j["cols"] = sc.cols;
  j["seed"] = sc.seed;
  j["references"] = sc.references;
  j["targets"] = s.truth.size();
  j["target_size"] = sc.target_size;
  j["target_amplitude"] = sc.target_amplitude;
  j["training"] = {s.training.row, s.training.col, s.training.rows, s.training.cols};
  j["training_pixels"] = s.training.area();
  j["anomalous_training_pixels"] = s.anomalous_training_pixels;
  out.write_json("scene.json", j);
}

// ---- driver ----

std::vector<std::string> strip_out_dir(const std::vector<std::string>& args) {
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--out-dir") {
      ++i;
      continue;
    }
    if (args[i].rfind("--out-dir=", 0) == 0) continue;
    kept.push_back(args[i]);
  }
  return kept;
}

int run(const std::vector<std::string>& args);

int replay(const std::string& manifest_path, const std::string& out_dir) {
  const ordered_json m = ordered_json::parse(io::read_file(manifest_path));
  const auto args = m.at("args").get<std::vector<std::string>>();
  const fs::path target = fs::absolute(out_dir);
  const fs::path old_cwd = fs::current_path();
  fs::current_path(m.at("cwd").get<std::string>());
  int rc = 1;
  try {
    for (const auto& in : m.at("inputs")) {
      const auto path = in.at("path").get<std::string>();
      if (sha256_hex(io::read_file(path)) != in.at("sha256").get<std::string>())
        throw Error("input '" + path + "' changed since the manifest was written");
    }
    std::vector<std::string> full = args;
    full.insert(full.end(), {"--out-dir", target.string()});
    rc = run(full);
  } catch (...) {
    fs::current_path(old_cwd);
    throw;
  }
  fs::current_path(old_cwd);
  return rc;
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Rayleigh regression: robust fitting, inference, Monte Carlo evaluation and anomaly detection"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)");
  app.add_option("--out-dir", g.out_dir, "Output directory");
  app.add_option("--format", g.format, "Primary report format")->check(CLI::IsMember({"json", "csv", "text"}));
  app.add_option("--config", g.config_path, "JSON run configuration");

  std::function<void(Run&, OutputDir&)> action;
  std::string command;

  FitOptions fo;
  DesignOptions design;
  std::string method = "both";
  double pfa = 0.05;
  auto* fit_cmd = app.add_subcommand("fit", "Fit MLE and/or WMLE on tabular data");
  design.add(fit_cmd);
  fo.add(fit_cmd);
  fit_cmd->add_option("--method", method)->check(CLI::IsMember({"mle", "wmle", "both"}));
  fit_cmd->add_option("--pfa", pfa, "Test size for the per-coefficient Wald tests");
  fit_cmd->callback([&] {
    command = "fit";
    const bool delta_flag = fit_cmd->count("--delta") > 0;
    action = [&, delta_flag](Run& r, OutputDir& o) { cmd_fit(g, design, fo, method, pfa, delta_flag, r, o); };
  });

  std::string wald_method = "wmle";
  std::vector<std::string> test;
  std::vector<double> null_values;
  auto* wald_cmd = app.add_subcommand("wald", "Wald test on a subset of coefficients");
  design.add(wald_cmd);
  fo.add(wald_cmd);
  wald_cmd->add_option("--method", wald_method)->check(CLI::IsMember({"mle", "wmle"}));
  wald_cmd->add_option("--test", test, "Coefficients under test (names or 0-based indices)")->delimiter(',')->required();
  wald_cmd->add_option("--null", null_values, "Null values (default 0)")->delimiter(',');
  wald_cmd->add_option("--pfa", pfa, "Test size");
  wald_cmd->callback([&] {
    command = "wald";
    action = [&](Run& r, OutputDir& o) { cmd_wald(g, design, fo, wald_method, test, null_values, pfa, r, o); };
  });

  std::string res_method = "wmle";
  auto* res_cmd = app.add_subcommand("residuals", "Quantile residuals of a fit");
  design.add(res_cmd);
  fo.add(res_cmd);
  res_cmd->add_option("--method", res_method)->check(CLI::IsMember({"mle", "wmle"}));
  res_cmd->callback([&] {
    command = "residuals";
    action = [&](Run& r, OutputDir& o) { cmd_residuals(g, design, fo, res_method, r, o); };
  });

  std::optional<int> replications;
  bool with_breakdown = false, with_sensitivity = false;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo table of MLE vs WMLE");
  fo.add(sim_cmd);
  sim_cmd->add_option("--replications", replications);
  sim_cmd->add_flag("--breakdown", with_breakdown, "Also write breakdown.csv for the first N");
  sim_cmd->add_flag("--sensitivity", with_sensitivity, "Also write sensitivity.csv for the first N");
  sim_cmd->callback([&] {
    command = "simulate";
    action = [&](Run& r, OutputDir& o) { cmd_simulate(g, fo, replications, with_breakdown, with_sensitivity, r, o); };
  });

  std::optional<std::size_t> max_outliers;
  std::size_t step = 1;
  auto* bd_cmd = app.add_subcommand("breakdown", "Total relative bias against the number of outliers");
  fo.add(bd_cmd);
  bd_cmd->add_option("--replications", replications);
  bd_cmd->add_option("--max-outliers", max_outliers, "Largest outlier count (default N/5)");
  bd_cmd->add_option("--step", step, "Outlier count increment");
  bd_cmd->callback([&] {
    command = "breakdown";
    action = [&](Run& r, OutputDir& o) { cmd_breakdown(g, fo, replications, max_outliers, step, r, o); };
  });

  std::vector<double> values;
  std::string mode = "single";
  auto* sens_cmd = app.add_subcommand("sensitivity", "Mean absolute sensitivity curve");
  fo.add(sens_cmd);
  sens_cmd->add_option("--replications", replications);
  sens_cmd->add_option("--values", values, "Outlier values (default 1..20)")->delimiter(',');
  sens_cmd->add_option("--mode", mode)->check(CLI::IsMember({"single", "fraction"}));
  sens_cmd->callback([&] {
    command = "sensitivity";
    action = [&](Run& r, OutputDir& o) { cmd_sensitivity(g, fo, replications, values, mode, r, o); };
  });

  DetectOptions det;
  auto* det_cmd = app.add_subcommand("detect", "Residual control-chart anomaly detection on images");
  fo.add(det_cmd);
  det_cmd->add_option("--interest", det.interest, "Image of interest (CSV or RRM1)")->required();
  det_cmd->add_option("--covariates", det.covariates, "Reference images")->delimiter(',');
  det_cmd->add_option("--train", det.train, "Training rectangle row,col,rows,cols")->delimiter(',')->required();
  det_cmd->add_option("--method", det.method)->check(CLI::IsMember({"mle", "wmle"}));
  det_cmd->add_option("--truth", det.truth, "Truth CSV with row,col columns");
  det_cmd->add_option("--control-limit", det.control_limit);
  det_cmd->add_flag("--upper-tail-only", det.upper_tail_only, "Flag only r > L");
  det_cmd->callback([&] {
    command = "detect";
    action = [&](Run& r, OutputDir& o) { cmd_detect(g, det, fo, r, o); };
  });

  SceneConfig scene;
  std::string image_format = "rrm";
  auto* scene_cmd = app.add_subcommand("synth-scene", "Generate the seeded synthetic detection scene");
  scene_cmd->add_option("--rows", scene.rows);
  scene_cmd->add_option("--cols", scene.cols);
  scene_cmd->add_option("--references", scene.references);
  scene_cmd->add_option("--image-format", image_format)->check(CLI::IsMember({"rrm", "csv"}));
  scene_cmd->callback([&] {
    command = "synth-scene";
    action = [&](Run& r, OutputDir& o) { cmd_synth_scene(g, scene, image_format, r, o); };
  });

  std::string manifest_path;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run a command from its manifest.json");
  replay_cmd->add_option("manifest", manifest_path, "Path to manifest.json")->required();
  replay_cmd->callback([&] { command = "replay"; });

  app.fallthrough();
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (command == "replay") return replay(manifest_path, g.out_dir);
    OutputDir out(g.out_dir);
    Run r;
    r.command = command;
    action(r, out);
    Manifest m;
    m.command = command;
    m.args = strip_out_dir(args);
    m.cwd = fs::current_path().string();
    m.config = effective_config(r.config, r.seed);
    m.seed = r.seed;
    m.inputs = r.inputs;
    m.outputs = out.written();
    out.write_json(kManifestName, m.to_json());
    return 0;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << " (line " << e.line() << ", byte " << e.byte_offset() << ")\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return 1;
}

}  // namespace
}  // namespace rayreg::cli

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return rayreg::cli::run(args);
}
