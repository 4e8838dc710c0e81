#include "subsel/study_config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "subsel/io.hpp"

namespace subsel {

namespace {

using Entries = std::map<std::string, std::vector<std::string>>;

const std::set<std::string>& known_keys(StudyKind kind) {
  static const std::set<std::string> common{"study",     "reps",         "seed",      "threads", "n",
                                            "m",         "k",            "gamma",     "max_iters",
                                            "stall_window", "step_size"};
  static const std::set<std::string> multivariate = [] {
    auto s = common;
    s.insert({"p", "rho_x", "rho_y", "effect", "s_true"});
    return s;
  }();
  static const std::set<std::string> wasserstein = [] {
    auto s = common;
    s.insert({"p", "rho", "mu0", "sigma0", "beta", "gamma_slope", "v1", "v2"});
    return s;
  }();
  return kind == StudyKind::Multivariate ? multivariate : wasserstein;
}

double to_real(const std::string& key, const std::string& text) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v))
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "' as a number");
  return v;
}

long long to_integer(const std::string& key, const std::string& text) {
  const double v = to_real(key, text);
  if (v != std::floor(v)) throw ConfigError("config key '" + key + "' must be an integer, got '" + text + "'");
  return static_cast<long long>(v);
}

std::vector<double> reals(const Entries& e, const std::string& key, std::vector<double> fallback) {
  const auto it = e.find(key);
  if (it == e.end()) return fallback;
  std::vector<double> out;
  for (const auto& v : it->second) out.push_back(to_real(key, v));
  return out;
}

std::vector<Index> integers(const Entries& e, const std::string& key, std::vector<Index> fallback) {
  const auto it = e.find(key);
  if (it == e.end()) return fallback;
  std::vector<Index> out;
  for (const auto& v : it->second) out.push_back(static_cast<Index>(to_integer(key, v)));
  return out;
}

double scalar_real(const Entries& e, const std::string& key, double fallback) {
  const auto v = reals(e, key, {fallback});
  if (v.size() != 1) throw ConfigError("config key '" + key + "' takes a single value");
  return v.front();
}

Index scalar_integer(const Entries& e, const std::string& key, Index fallback) {
  const auto v = integers(e, key, {fallback});
  if (v.size() != 1) throw ConfigError("config key '" + key + "' takes a single value");
  return v.front();
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

}  // namespace

StudyPlan parse_study_config(const std::string& text) {
  Entries entries;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    std::string key = line.substr(0, eq);
    key.erase(0, key.find_first_not_of(" \t\r"));
    key.erase(key.find_last_not_of(" \t\r") + 1);
    if (eq == std::string::npos) {
      if (!key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
      continue;
    }
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": missing key");
    auto values = io::split(line.substr(eq + 1), ',');
    std::erase_if(values, [](const std::string& v) { return v.empty(); });
    if (values.empty()) throw ConfigError("config key '" + key + "' has no value");
    if (!entries.emplace(key, values).second) throw ConfigError("config key '" + key + "' given twice");
  }

  StudyPlan plan;
  const auto study = entries.find("study");
  if (study == entries.end()) throw ConfigError("config must set 'study' (multivariate or wasserstein)");
  if (study->second == std::vector<std::string>{"multivariate"}) {
    plan.kind = StudyKind::Multivariate;
  } else if (study->second == std::vector<std::string>{"wasserstein"}) {
    plan.kind = StudyKind::Wasserstein;
  } else {
    throw ConfigError("unknown study '" + join(study->second) + "'");
  }
  for (const auto& [key, values] : entries)
    if (!known_keys(plan.kind).count(key)) throw ConfigError("unknown config key '" + key + "'");

  plan.settings.repetitions = scalar_integer(entries, "reps", 1);
  plan.settings.threads = static_cast<int>(scalar_integer(entries, "threads", 0));
  plan.settings.solver.max_iters = scalar_integer(entries, "max_iters", plan.settings.solver.max_iters);
  plan.settings.solver.stall_window = scalar_integer(entries, "stall_window", plan.settings.solver.stall_window);
  if (entries.count("step_size")) plan.settings.solver.step_size = scalar_real(entries, "step_size", 0);
  const auto seed = static_cast<std::uint64_t>(scalar_integer(entries, "seed", 1));
  plan.settings.solver.seed = seed;
  if (plan.settings.repetitions < 1) throw ConfigError("reps must be at least 1");

  const auto gammas = reals(entries, "gamma", {0.0});
  if (plan.kind == StudyKind::Multivariate) {
    MultivariateScenario base;
    base.seed = seed;
    if (entries.count("s_true")) {
      base.s_true.clear();
      for (Index j : integers(entries, "s_true", {})) base.s_true.push_back(j - 1);
    }
    const auto ps = integers(entries, "p", {5});
    const auto rx = reals(entries, "rho_x", {0.0});
    const auto ry = reals(entries, "rho_y", {0.0});
    const auto effects = reals(entries, "effect", {1.0});
    const auto ns = integers(entries, "n", {2000});
    const auto ms = integers(entries, "m", {20});
    const auto ks = integers(entries, "k", {static_cast<Index>(base.s_true.size())});
    for (Index p : ps)
      for (double rho_x : rx)
        for (double rho_y : ry)
          for (double effect : effects)
            for (Index n : ns)
              for (Index m : ms)
                for (Index k : ks)
                  for (double gamma : gammas) {
                    StudyCell cell;
                    cell.kind = StudyKind::Multivariate;
                    cell.multivariate = base;
                    cell.multivariate.n = n;
                    cell.multivariate.p = p;
                    cell.multivariate.m = m;
                    cell.multivariate.rho_x = rho_x;
                    cell.multivariate.rho_y = rho_y;
                    cell.multivariate.effect = effect;
                    cell.multivariate.validate();
                    cell.k = k;
                    cell.gamma = gamma;
                    if (k < 1 || k > p) throw InfeasibleBudget("k=" + std::to_string(k) + " outside [1, p]");
                    plan.cells.push_back(cell);
                  }
  } else {
    WassersteinScenario base;
    base.seed = seed;
    base.p = scalar_integer(entries, "p", base.p);
    base.rho = scalar_real(entries, "rho", base.rho);
    base.mu0 = scalar_real(entries, "mu0", base.mu0);
    base.sigma0 = scalar_real(entries, "sigma0", base.sigma0);
    base.beta = scalar_real(entries, "beta", base.beta);
    base.gamma_slope = scalar_real(entries, "gamma_slope", base.gamma_slope);
    base.v1 = scalar_real(entries, "v1", base.v1);
    base.v2 = scalar_real(entries, "v2", base.v2);
    for (Index n : integers(entries, "n", {200}))
      for (Index m : integers(entries, "m", {50}))
        for (Index k : integers(entries, "k", {1}))
          for (double gamma : gammas) {
            StudyCell cell;
            cell.kind = StudyKind::Wasserstein;
            cell.wasserstein = base;
            cell.wasserstein.n = n;
            cell.wasserstein.m = m;
            cell.wasserstein.validate();
            cell.k = k;
            cell.gamma = gamma;
            if (k < 1 || k > base.p) throw InfeasibleBudget("k=" + std::to_string(k) + " outside [1, p]");
            plan.cells.push_back(cell);
          }
  }
  for (const auto& [key, values] : entries) plan.resolved[key] = join(values);
  return plan;
}

StudyPlan load_study_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_study_config(text.str());
}

std::vector<std::string> study_csv_header(StudyKind kind) {
  std::vector<std::string> h;
  if (kind == StudyKind::Multivariate)
    h = {"study", "n", "p", "m", "rho_x", "rho_y", "effect", "k", "gamma", "reps"};
  else
    h = {"study", "n", "p", "m", "k", "gamma", "reps"};
  for (const char* c : {"eaverage_mean", "eaverage_sd", "emax_mean", "emax_sd", "time_mean", "correct_prop"})
    h.emplace_back(c);
  return h;
}

std::vector<std::vector<std::string>> study_csv_rows(const std::vector<StudyRow>& rows, bool with_timing) {
  using io::format_number;
  std::vector<std::vector<std::string>> out;
  for (const StudyRow& r : rows) {
    std::vector<std::string> line;
    const StudyCell& c = r.cell;
    if (c.kind == StudyKind::Multivariate) {
      const auto& s = c.multivariate;
      const double gamma = c.gamma > 0 ? c.gamma : default_gamma(s.n);
      line = {"multivariate",          std::to_string(s.n),       std::to_string(s.p),
              std::to_string(s.m),     format_number(s.rho_x),    format_number(s.rho_y),
              format_number(s.effect), std::to_string(c.k),       format_number(gamma),
              std::to_string(r.repetitions)};
    } else {
      const auto& s = c.wasserstein;
      const double gamma = c.gamma > 0 ? c.gamma : default_gamma(s.n);
      line = {"wasserstein",       std::to_string(s.n), std::to_string(s.p),          std::to_string(s.m),
              std::to_string(c.k), format_number(gamma), std::to_string(r.repetitions)};
    }
    for (double v : {r.eaverage_mean, r.eaverage_sd, r.emax_mean, r.emax_sd}) line.push_back(format_number(v));
    line.push_back(format_number(with_timing ? r.time_mean : 0.0));
    line.push_back(format_number(r.correct_prop));
    out.push_back(std::move(line));
  }
  return out;
}

}  // namespace subsel
