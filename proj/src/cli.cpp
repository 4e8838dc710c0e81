#include "subsel/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <exception>
#include <iostream>
#include <optional>
#include <span>

#include "subsel/core.hpp"
#include "subsel/embeddings.hpp"
#include "subsel/io.hpp"
#include "subsel/parallel.hpp"
#include "subsel/solver.hpp"
#include "subsel/study_config.hpp"

namespace subsel {

namespace {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool on_off(const std::string& value, const std::string& flag) {
  if (value == "on") return true;
  if (value == "off") return false;
  throw ConfigError(flag + " expects 'on' or 'off', got '" + value + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  auto v = io::split(text, ',');
  std::erase_if(v, [](const std::string& s) { return s.empty(); });
  return v;
}

std::vector<Index> parse_index_list(const std::string& text, const std::string& flag) {
  std::vector<Index> out;
  for (const auto& item : split_list(text)) {
    char* end = nullptr;
    const long v = std::strtol(item.c_str(), &end, 10);
    if (end != item.c_str() + item.size()) throw ConfigError(flag + ": cannot parse '" + item + "' as an integer");
    out.push_back(static_cast<Index>(v));
  }
  if (out.empty()) throw ConfigError(flag + " is empty");
  return out;
}

json matrix_json(const Matrix<double>& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const Vector<double>& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

void write_manifest(const std::string& out_path, const std::string& command, const json& inputs, const json& config,
                    std::uint64_t seed, bool timing, const json& timings) {
  json manifest;
  manifest["command"] = command;
  manifest["inputs"] = inputs;
  manifest["config"] = config;
  manifest["seed"] = seed;
  manifest["version"] = kVersion;
  if (timing) manifest["timings"] = timings;
  io::write_text(out_path + ".manifest.json", manifest.dump(2) + "\n");
}

// Options shared by fit, fit-group and sweep.
struct FitOptions {
  std::string x_path, y_path, out_path, csv_path;
  Index k = 0;
  std::string k_list;
  double gamma = 0;
  std::string loss = "ols";
  std::string groups;
  std::uint64_t seed = 0;
  Index max_iters = 500;
  Index stall_window = 25;
  std::string step_size = "auto";
  std::string standardize = "on";
  std::string refit = "on";
  std::string timing = "on";
  std::string mode = "subgradient";
  int threads = 0;

  void add_to(CLI::App* cmd, bool needs_k, bool needs_k_list, bool needs_groups) {
    cmd->add_option("--x", x_path, "Predictor CSV (headered, rows = observations)")->required();
    cmd->add_option("--y", y_path, "Response CSV (headered, rows = observations)")->required();
    if (needs_k) cmd->add_option("--k", k, "Sparsity budget")->required();
    if (needs_k_list) cmd->add_option("--k-list", k_list, "Comma-separated budgets")->required();
    if (needs_groups) cmd->add_option("--groups", groups, "Comma-separated 1-based group id per column")->required();
    cmd->add_option("--gamma", gamma, "Ridge weight (> 0)")->required();
    cmd->add_option("--loss", loss, "Loss list: ols, logistic, pinball:<q>; last entry broadcasts");
    cmd->add_option("--out", out_path, "Result JSON path")->required();
    cmd->add_option("--csv", csv_path, "Optional CSV mirror of the result");
    cmd->add_option("--seed", seed, "Seed recorded in the manifest");
    cmd->add_option("--max-iters", max_iters, "Iteration cap");
    cmd->add_option("--stall-window", stall_window, "Stop after this many iterations without a support change");
    cmd->add_option("--step-size", step_size, "Constant dual step or 'auto'");
    cmd->add_option("--standardize", standardize, "on|off");
    cmd->add_option("--refit", refit, "on|off: exact dual solve on the final support for non-OLS losses");
    cmd->add_option("--mode", mode, "subgradient|ols_alternating");
    cmd->add_option("--timing", timing, "on|off: record wall-clock times in outputs");
    cmd->add_option("--threads", threads, std::string("Worker threads (0: ") + kThreadsEnv + " or 1)");
  }

  SolverConfig<double> solver_config() const {
    SolverConfig<double> c;
    c.max_iters = max_iters;
    c.stall_window = stall_window;
    c.seed = seed;
    c.refit = on_off(refit, "--refit");
    c.threads = resolve_threads(threads);
    if (mode == "subgradient")
      c.mode = SolverMode::Subgradient;
    else if (mode == "ols_alternating")
      c.mode = SolverMode::OlsAlternating;
    else
      throw ConfigError("--mode expects subgradient or ols_alternating");
    if (step_size != "auto") {
      char* end = nullptr;
      const double v = std::strtod(step_size.c_str(), &end);
      if (end != step_size.c_str() + step_size.size()) throw ConfigError("--step-size expects a number or 'auto'");
      c.step_size = v;
    }
    c.validate();
    return c;
  }

  json config_json(const SolverConfig<double>& c) const {
    json j;
    j["k"] = k;
    if (!k_list.empty()) j["k_list"] = k_list;
    j["gamma"] = gamma;
    j["loss"] = loss;
    if (!groups.empty()) j["groups"] = groups;
    j["max_iters"] = c.max_iters;
    j["stall_window"] = c.stall_window;
    j["step_size"] = step_size;
    j["standardize"] = standardize;
    j["refit"] = refit;
    j["mode"] = mode;
    j["threads"] = c.threads;
    return j;
  }
};

// Loaded, validated and (optionally) standardized inputs.
struct PreparedData {
  DesignMatrix<double> raw_x;
  DesignMatrix<double> x;
  ResponseBlock<double> y;
  std::optional<StandardizationRecord<double>> record;
  Vector<double> centres;  // per-coordinate response offsets (zero when not standardized)
  SelectionProblem<double> problem;
};

PreparedData prepare(const FitOptions& opt) {
  const auto xt = io::read_csv(opt.x_path);
  const auto yt = io::read_csv(opt.y_path);
  PreparedData d;
  d.raw_x = DesignMatrix<double>(xt.values, xt.header);
  ResponseBlock<double> raw_y(yt.values, yt.header);
  check_rows(d.raw_x.rows(), raw_y.rows());

  std::vector<LossSpec<double>> losses;
  for (const auto& item : split_list(opt.loss)) losses.push_back(LossSpec<double>::parse(item));
  d.problem.losses = broadcast_losses(std::move(losses), raw_y.cols());
  d.problem.k = opt.k;
  d.problem.gamma = opt.gamma;
  for (Index t = 0; t < raw_y.cols(); ++t)
    for (Index i = 0; i < raw_y.rows(); ++i) check_label(d.problem.losses[static_cast<std::size_t>(t)], raw_y.values()(i, t));

  d.centres = Vector<double>::Zero(raw_y.cols());
  if (on_off(opt.standardize, "--standardize")) {
    auto [xs, rec] = standardize(d.raw_x);
    d.x = std::move(xs);
    d.record = std::move(rec);
    // OLS coordinates are centred by their mean, pinball ones by their
    // q-quantile; logistic labels are left alone.
    for (Index t = 0; t < raw_y.cols(); ++t) {
      const auto& loss = d.problem.losses[static_cast<std::size_t>(t)];
      if (loss.kind == LossKind::OLS) {
        d.centres(t) = raw_y.values().col(t).mean();
      } else if (loss.kind == LossKind::Pinball) {
        const Vector<double> col = raw_y.values().col(t);
        const Vector<double> level = Vector<double>::Constant(1, loss.quantile);
        d.centres(t) = empirical_quantiles(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())),
                                           level)
                           .values(0);
      }
    }
    d.y = ResponseBlock<double>(raw_y.values().rowwise() - d.centres.transpose(), raw_y.labels());
  } else {
    d.x = d.raw_x;
    d.y = raw_y;
  }
  return d;
}

// Coefficients on the original predictor scale plus per-coordinate intercepts.
std::pair<Matrix<double>, Vector<double>> original_scale(const PreparedData& d, const Matrix<double>& beta) {
  if (!d.record) return {beta, Vector<double>::Zero(beta.cols())};
  Matrix<double> b = beta.array().colwise() / d.record->column_scales.array();
  Vector<double> intercept = d.centres - (d.record->column_means.transpose() * b).transpose();
  return {std::move(b), std::move(intercept)};
}

json result_json(const PreparedData& d, const SelectionResult<double>& r, const std::optional<GroupStructure>& groups,
                 bool timing) {
  const auto [beta, intercept] = original_scale(d, r.beta);
  const Support features = groups ? r.support.expand(*groups) : r.support;
  json out;
  json support = json::array();
  for (Index u : r.support.indices()) support.push_back(u + 1);
  out["support"] = support;
  json names = json::array();
  for (Index j : features.indices()) names.push_back(d.x.names()[static_cast<std::size_t>(j)]);
  out["selected_features"] = names;
  out["objective"] = r.objective;
  out["tight"] = r.tight;
  out["gap"] = std::isfinite(r.gap) ? json(r.gap) : json("inf");
  out["iterations"] = r.iterations;
  out["wall_time_s"] = timing ? r.wall_time_s : 0.0;
  out["feature_names"] = d.x.names();
  out["coordinate_labels"] = d.y.labels();
  out["beta"] = matrix_json(beta);
  out["intercept"] = vector_json(intercept);
  out["beta_standardized"] = matrix_json(r.beta);
  return out;
}

void write_beta_csv(const std::string& path, const PreparedData& d, const SelectionResult<double>& r) {
  const auto [beta, intercept] = original_scale(d, r.beta);
  std::vector<std::string> header{"feature"};
  for (const auto& l : d.y.labels()) header.push_back(l);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> icpt{"(intercept)"};
  for (Index t = 0; t < intercept.size(); ++t) icpt.push_back(io::format_number(intercept(t)));
  rows.push_back(std::move(icpt));
  for (Index j = 0; j < beta.rows(); ++j) {
    std::vector<std::string> row{d.x.names()[static_cast<std::size_t>(j)]};
    for (Index t = 0; t < beta.cols(); ++t) row.push_back(io::format_number(beta(j, t)));
    rows.push_back(std::move(row));
  }
  io::write_csv(path, header, rows);
}

int command_fit(const FitOptions& opt, bool group_mode) {
  const auto start = Clock::now();
  PreparedData d = prepare(opt);
  const SolverConfig<double> config = opt.solver_config();
  std::optional<GroupStructure> groups;
  if (group_mode) {
    std::vector<Index> ids = parse_index_list(opt.groups, "--groups");
    for (Index& g : ids) {
      if (g < 1) throw ConfigError("--groups ids are 1-based");
      --g;
    }
    groups = GroupStructure(ids);
    d.problem.groups = groups;
  }
  const auto load_s = seconds_since(start);
  const SelectionResult<double> r =
      group_mode ? fit_group(d.x, d.y, d.problem, config) : fit(d.x, d.y, d.problem, config);
  const bool timing = on_off(opt.timing, "--timing");

  json doc = result_json(d, r, groups, timing);
  io::write_text(opt.out_path, doc.dump(2) + "\n");
  if (!opt.csv_path.empty()) write_beta_csv(opt.csv_path, d, r);

  json inputs{{"x", opt.x_path}, {"y", opt.y_path}};
  write_manifest(opt.out_path, group_mode ? "fit-group" : "fit", inputs, opt.config_json(config), opt.seed, timing,
                 json{{"load_s", load_s}, {"fit_s", r.wall_time_s}, {"total_s", seconds_since(start)}});
  std::cout << "selected " << r.support.count() << (group_mode ? " groups" : " features") << ", objective "
            << io::format_number(r.objective) << (r.tight ? " (certified)" : "") << "\n";
  return kExitOk;
}

int command_sweep(const FitOptions& opt) {
  const auto start = Clock::now();
  PreparedData d = prepare(opt);
  const SolverConfig<double> config = opt.solver_config();
  const std::vector<Index> ks = parse_index_list(opt.k_list, "--k-list");
  for (Index k : ks) {
    d.problem.k = k;
    d.problem.validate(d.x.cols(), d.y.cols());
  }
  const auto rows = sweep_k(d.x, d.y, d.problem, config, ks);
  const bool timing = on_off(opt.timing, "--timing");

  json doc;
  doc["rows"] = json::array();
  std::vector<std::vector<std::string>> csv;
  for (const auto& row : rows) {
    json j = result_json(d, row.result, std::nullopt, timing);
    j["k"] = row.k;
    doc["rows"].push_back(std::move(j));
    std::string support;
    for (Index u : row.result.support.indices()) support += (support.empty() ? "" : " ") + std::to_string(u + 1);
    csv.push_back({std::to_string(row.k), io::format_number(row.result.objective), row.result.tight ? "1" : "0",
                   std::to_string(row.result.iterations), support});
  }
  io::write_text(opt.out_path, doc.dump(2) + "\n");
  if (!opt.csv_path.empty()) io::write_csv(opt.csv_path, {"k", "objective", "tight", "iterations", "support"}, csv);
  write_manifest(opt.out_path, "sweep", json{{"x", opt.x_path}, {"y", opt.y_path}}, opt.config_json(config), opt.seed,
                 timing, json{{"total_s", seconds_since(start)}});
  std::cout << "swept " << rows.size() << " budgets\n";
  return kExitOk;
}

struct SimulateOptions {
  std::string config_path, out_path, timing = "on";
  int threads = 0;
};

int command_simulate(const SimulateOptions& opt) {
  const auto start = Clock::now();
  StudyPlan plan = load_study_config(opt.config_path);
  const bool timing = on_off(opt.timing, "--timing");
  plan.settings.threads = resolve_threads(opt.threads > 0 ? opt.threads : plan.settings.threads);
  const auto rows = run_study(plan.cells, plan.settings);
  io::write_csv(opt.out_path, study_csv_header(plan.kind), study_csv_rows(rows, timing));
  json config(plan.resolved);
  config["threads"] = plan.settings.threads;
  write_manifest(opt.out_path, "simulate", json{{"config", opt.config_path}}, config, plan.settings.solver.seed,
                 timing, json{{"total_s", seconds_since(start)}});
  std::cout << "simulated " << rows.size() << " scenarios x " << plan.settings.repetitions << " repetitions\n";
  return kExitOk;
}

struct EmbedOptions {
  std::string kind;
  std::vector<std::string> inputs;
  std::string out_path;
  Index m = 50;
  std::string levels;
  double bandwidth = 0;
  double grid_min = 0, grid_max = 0;
  Index grid_size = 100;
  int threads = 0;
  std::string timing = "on";
};

int command_embed(const EmbedOptions& opt) {
  const auto start = Clock::now();
  const bool timing = on_off(opt.timing, "--timing");
  const int threads = resolve_threads(opt.threads);
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  json config;
  if (opt.kind == "quantiles" || opt.kind == "kde") {
    if (opt.inputs.size() != 1) throw ConfigError("embed " + opt.kind + " takes exactly one --input");
    const auto groups = io::read_long_csv(opt.inputs.front());
    Vector<double> grid;
    if (opt.kind == "quantiles") {
      if (!opt.levels.empty()) {
        const auto items = split_list(opt.levels);
        grid.resize(static_cast<Index>(items.size()));
        for (std::size_t r = 0; r < items.size(); ++r) grid(static_cast<Index>(r)) = std::stod(items[r]);
      } else {
        grid = interior_levels<double>(opt.m);
      }
      check_levels(grid);
      config = json{{"levels", opt.levels.empty() ? json(opt.m) : json(opt.levels)}};
    } else {
      if (!(opt.bandwidth > 0)) throw NonPositiveBandwidth();
      if (opt.grid_size < 2 || !(opt.grid_max > opt.grid_min))
        throw ConfigError("kde grid needs --grid-size >= 2 and --grid-max > --grid-min");
      grid = Vector<double>::LinSpaced(opt.grid_size, opt.grid_min, opt.grid_max);
      config = json{{"bandwidth", opt.bandwidth}, {"grid_min", opt.grid_min}, {"grid_max", opt.grid_max},
                    {"grid_size", opt.grid_size}};
    }
    header.push_back("id");
    for (Index r = 0; r < grid.size(); ++r)
      header.push_back((opt.kind == "quantiles" ? "q_" : "f_") + io::format_number(grid(r)));
    rows.resize(groups.size());
    std::vector<std::exception_ptr> errors(groups.size());
    parallel_for(static_cast<long>(groups.size()), threads, [&](long g) {
      const auto& [id, samples] = groups[static_cast<std::size_t>(g)];
      try {
        const std::span<const double> view(samples);
        const Vector<double> values = opt.kind == "quantiles" ? empirical_quantiles(view, grid).values
                                                              : kde_density(view, opt.bandwidth, grid).values;
        auto& row = rows[static_cast<std::size_t>(g)];
        row.push_back(id);
        for (Index r = 0; r < values.size(); ++r) row.push_back(io::format_number(values(r)));
      } catch (...) {
        errors[static_cast<std::size_t>(g)] = std::current_exception();
      }
    });
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  } else if (opt.kind == "laplacian") {
    if (opt.inputs.empty()) throw ConfigError("embed laplacian needs at least one --input");
    Index vertices = -1;
    for (const auto& path : opt.inputs) {
      const Vector<double> v = laplacian_embed(GraphSpec<double>{io::read_matrix_csv(path)});
      const Index size = static_cast<Index>(std::lround(std::sqrt(static_cast<double>(v.size()))));
      if (vertices < 0) {
        vertices = size;
        header.push_back("graph");
        for (Index i = 0; i < size; ++i)
          for (Index j = 0; j < size; ++j) header.push_back("L_" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
      } else if (size != vertices) {
        throw DimensionMismatch("all graphs must have the same vertex count");
      }
      std::vector<std::string> row{path};
      for (Index r = 0; r < v.size(); ++r) row.push_back(io::format_number(v(r)));
      rows.push_back(std::move(row));
    }
  } else {
    throw ConfigError("unknown embedding '" + opt.kind + "' (expected quantiles, kde or laplacian)");
  }
  io::write_csv(opt.out_path, header, rows);
  config["threads"] = threads;
  write_manifest(opt.out_path, "embed " + opt.kind, json{{"input", opt.inputs}}, config, 0, timing,
                 json{{"total_s", seconds_since(start)}});
  std::cout << "embedded " << rows.size() << " rows\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Best-subset variable selection with multivariate, functional and distributional responses"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  FitOptions fit_opt, group_opt, sweep_opt;
  fit_opt.add_to(app.add_subcommand("fit", "Select k features"), true, false, false);
  group_opt.add_to(app.add_subcommand("fit-group", "Select k groups of columns"), true, false, true);
  sweep_opt.add_to(app.add_subcommand("sweep", "One fit per budget in --k-list"), false, true, false);

  SimulateOptions sim_opt;
  auto* sim = app.add_subcommand("simulate", "Run a simulation study from a scenario grid");
  sim->add_option("--config", sim_opt.config_path, "Scenario grid (key = value)")->required();
  sim->add_option("--out", sim_opt.out_path, "Results CSV path")->required();
  sim->add_option("--threads", sim_opt.threads, "Worker threads across repetitions");
  sim->add_option("--timing", sim_opt.timing, "on|off: record wall-clock times");

  EmbedOptions embed_opt;
  auto* embed = app.add_subcommand("embed", "Embed distributional or graph responses as coordinates");
  embed->add_option("kind", embed_opt.kind, "quantiles | kde | laplacian")->required();
  embed->add_option("--input", embed_opt.inputs, "Input CSV (long id,value format; adjacency matrix for laplacian)")
      ->required();
  embed->add_option("--out", embed_opt.out_path, "Output CSV")->required();
  embed->add_option("--m", embed_opt.m, "Number of interior quantile levels (r - 0.5)/m");
  embed->add_option("--levels", embed_opt.levels, "Explicit comma-separated quantile levels");
  embed->add_option("--bandwidth", embed_opt.bandwidth, "KDE bandwidth");
  embed->add_option("--grid-min", embed_opt.grid_min, "KDE grid start");
  embed->add_option("--grid-max", embed_opt.grid_max, "KDE grid end");
  embed->add_option("--grid-size", embed_opt.grid_size, "KDE grid points");
  embed->add_option("--threads", embed_opt.threads, "Worker threads across ids");
  embed->add_option("--timing", embed_opt.timing, "on|off: record wall-clock times in the manifest");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    const auto* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    if (name == "fit") return command_fit(fit_opt, false);
    if (name == "fit-group") return command_fit(group_opt, true);
    if (name == "sweep") return command_sweep(sweep_opt);
    if (name == "simulate") return command_simulate(sim_opt);
    if (name == "embed") return command_embed(embed_opt);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const GuardError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitGuard;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace subsel
