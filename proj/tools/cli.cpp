#include "cli.hpp"

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <multistop/dp.hpp>
#include <multistop/ingest.hpp>
#include <multistop/model.hpp>
#include <multistop/parallel.hpp>
#include <multistop/policy.hpp>
#include <multistop/sim.hpp>
#include <multistop/spsa.hpp>
#include <multistop/structure.hpp>

namespace multistop::cli {

using nlohmann::json;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// A model file plus the optional "scenario" block pinning run settings.
struct Scenario {
  Model model;
  std::string hash;
  json settings = json::object();

  int grid() const {
    return settings.value("grid", BeliefGrid::resolution_for(model.states(), 100));
  }
  int horizon() const {
    if (settings.contains("horizon")) return settings["horizon"].get<int>();
    if (model.discount() < 1.0) return std::max(1, horizon_for_tolerance(model, 0.01));
    return 100;
  }
  int runs() const { return settings.value("runs", 1000); }
  std::uint64_t seed() const { return settings.value("seed", std::uint64_t{1}); }
  int period(int horizon) const { return settings.value("period", default_period(horizon, model.stops())); }
  SpsaConfig spsa() const {
    SpsaConfig cfg;
    cfg.horizon = horizon();
    if (settings.contains("spsa")) cfg = spsa_config_from_json(settings["spsa"].dump(), cfg);
    return cfg;
  }
};

Scenario load_scenario(const std::string& path) {
  const std::string text = read_text(path);
  Scenario sc{load_model(path), content_hash(text), json::object()};
  if (!path.ends_with(".toml")) {
    const json doc = json::parse(text, nullptr, false);
    if (doc.is_object() && doc.contains("scenario") && doc["scenario"].is_object()) sc.settings = doc["scenario"];
  }
  return sc;
}

struct Globals {
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::string out;
};

std::uint64_t seed_for(const Globals& g, const Scenario& sc) { return g.seed.value_or(sc.seed()); }

void emit(const Globals& g, std::ostream& out, const std::string& text) {
  if (g.out.empty()) {
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
    return;
  }
  std::ofstream f(g.out, std::ios::binary);
  if (!f) throw Error("cannot write " + g.out);
  f << text;
  if (!text.empty() && text.back() != '\n') f << '\n';
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f << text;
}

std::vector<double> as_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

/// Policies named on the command line: a JSON policy file or one of
/// periodic[:k], heuristic, grid_dp, always_stop, never_stop.
std::unique_ptr<Policy> make_policy(const std::string& spec, const Scenario& sc, int horizon) {
  const Model& m = sc.model;
  if (spec == "heuristic") return std::make_unique<HeuristicPolicy>(heuristic_policy(m, BeliefGrid(m.states(), sc.grid())));
  if (spec == "grid_dp") {
    BeliefGrid grid(m.states(), sc.grid());
    return std::make_unique<GridPolicy>(m, solve(m, grid));
  }
  if (spec == "always_stop") return std::make_unique<ConstantPolicy>(Action::Stop);
  if (spec == "never_stop") return std::make_unique<ConstantPolicy>(Action::Continue);
  if (spec == "periodic") return std::make_unique<PeriodicPolicy>(sc.period(horizon));
  if (spec.starts_with("periodic:")) return std::make_unique<PeriodicPolicy>(std::stoi(spec.substr(9)));

  const std::string text = read_text(spec);
  const json doc = json::parse(text, nullptr, false);
  if (!doc.is_object() || !doc.contains("kind")) throw ParseError(spec + ": policy file needs a 'kind'");
  const std::string kind = doc["kind"].get<std::string>();
  if (kind == "linear_threshold") {
    auto params = threshold_from_json(text, m.states(), m.stops());
    const auto bad = feasibility_violations(params, 1e-12);
    if (!bad.empty()) throw ValidationError(spec + ": infeasible threshold coefficients (" + bad.front() + ")");
    return std::make_unique<LinearThresholdPolicy>(std::move(params));
  }
  if (kind == "softmax") return std::make_unique<SoftmaxPolicy>(softmax_from_json(text, m.states(), m.stops()));
  if (kind == "periodic") return std::make_unique<PeriodicPolicy>(doc.at("period").get<int>());
  if (kind == "heuristic") {
    return std::make_unique<HeuristicPolicy>(
        heuristic_policy(m, BeliefGrid(m.states(), doc.value("grid", sc.grid()))));
  }
  if (kind == "grid_dp") {
    if (doc.contains("table")) return std::make_unique<GridPolicy>(m, load_table(doc["table"].get<std::string>()));
    BeliefGrid grid(m.states(), doc.value("grid", sc.grid()));
    return std::make_unique<GridPolicy>(m, solve(m, grid));
  }
  throw ValidationError(spec + ": unknown policy kind '" + kind + "'");
}

std::vector<int> parse_range(const std::string& text) {
  std::vector<int> out;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const int lo = std::stoi(text.substr(0, dots));
    const int hi = std::stoi(text.substr(dots + 2));
    if (lo > hi) throw ValidationError("state range is empty");
    for (int s = lo; s <= hi; ++s) out.push_back(s);
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  if (out.empty()) throw ValidationError("state range is empty");
  return out;
}

Vector parse_vector(const std::string& text) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) vals.push_back(std::stod(item));
  return Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

// ---------------------------------------------------------------------------

int cmd_check(const Globals& g, std::ostream& out, const std::string& path, const std::string& other,
              bool structure, int lines) {
  const Scenario sc = load_scenario(path);
  const std::uint64_t seed = seed_for(g, sc);
  json doc;
  doc["scenario_hash"] = sc.hash;
  doc["seed"] = seed;
  doc["assumptions"] = json::parse(assumption_report_json(check_assumptions(sc.model)));
  if (!other.empty()) {
    const Model q = load_model(other);
    const auto v = copositive_leq(sc.model.transition(), q.transition());
    json c;
    c["holds"] = to_string(v.holds);
    if (v.witness) {
      c["witness"] = {{"description", v.witness->description}, {"point", as_std(v.witness->point)}};
    }
    doc["copositive_leq"] = c;
  }
  if (structure) {
    const Model& m = sc.model;
    BeliefGrid grid(m.states(), sc.grid());
    GridPolicy policy(m, solve(m, grid));
    RngStream rng(seed);
    const auto towards_first = sample_lines(m.states(), 1, static_cast<std::size_t>(lines), rng);
    const auto towards_last = sample_lines(m.states(), m.states(), static_cast<std::size_t>(lines), rng);
    json per_l = json::array();
    for (int l = 1; l <= m.stops(); ++l) {
      per_l.push_back({{"l", l},
                       {"monotone_first", to_string(policy_monotone_on_lines(policy, l, towards_first).holds)},
                       {"monotone_last", to_string(policy_monotone_on_lines(policy, l, towards_last).holds)}});
    }
    const auto inc = check_increments(policy.table());
    const auto nest = nested_sets(stopping_sets(policy.table()));
    doc["structure"] = {{"grid", sc.grid()},
                        {"lines", lines},
                        {"per_stop", per_l},
                        {"nested", to_string(nest.holds)},
                        {"value_decreases", inc.value_decreases},
                        {"increment_increases", inc.increment_increases}};
  }
  emit(g, out, doc.dump(2));
  return kExitOk;
}

int cmd_solve(const Globals& g, std::ostream& out, const std::string& path, int grid_m, double tol, int max_iter) {
  const Scenario sc = load_scenario(path);
  const Model& m = sc.model;
  BeliefGrid grid(m.states(), grid_m > 0 ? grid_m : sc.grid());
  SolveOptions opt;
  opt.tol = tol;
  opt.max_iter = max_iter;
  const ValueTable table = solve(m, grid, opt);
  json doc = json::parse(table_to_json(table, sc.hash, seed_for(g, sc)));
  std::vector<double> at_start;
  for (int l = 1; l <= m.stops(); ++l) at_start.push_back(value_at(m, table, m.initial_belief(), l));
  doc["initial_values"] = at_start;
  emit(g, out, doc.dump(1));
  return kExitOk;
}

int cmd_export_sets(const Globals& g, std::ostream& out, const std::string& path, const std::string& format) {
  if (format != "csv") throw ValidationError("export-sets: only csv is supported");
  const json meta = json::parse(read_text(path), nullptr, false);
  const ValueTable table = load_table(path);
  std::ostringstream os;
  os << "# scenario_hash=" << meta.value("scenario_hash", std::string("unknown"))
     << " seed=" << meta.value("seed", std::uint64_t{0}) << '\n';
  os << stopping_sets_csv(table);
  emit(g, out, os.str());
  return kExitOk;
}

int cmd_train(const Globals& g, std::ostream& out, std::ostream& err, const std::string& path,
              const std::string& config, const std::string& param, const std::string& trace) {
  const Scenario sc = load_scenario(path);
  SpsaConfig cfg = sc.spsa();
  cfg.seed = seed_for(g, sc);
  if (!config.empty()) cfg = spsa_config_from_json(read_text(config), cfg);
  if (g.seed) cfg.seed = *g.seed;
  cfg.validate();

  json doc;
  TrainedPolicy training;
  if (param == "linear") {
    auto res = train_linear_threshold(sc.model, cfg);
    doc = json::parse(threshold_to_json(res.params));
    training = std::move(res.training);
  } else if (param == "softmax") {
    auto res = train_softmax(sc.model, cfg);
    doc = json::parse(softmax_to_json(res.params));
    training = std::move(res.training);
  } else {
    throw ValidationError("train-spsa: --param must be linear or softmax");
  }
  doc["scenario_hash"] = sc.hash;
  doc["seed"] = cfg.seed;
  doc["selection_estimate"] = training.selection_estimate;
  doc["restart_estimates"] = training.restart_estimates;
  doc["iterations"] = training.result.iterations;
  doc["config"] = json::parse(spsa_config_to_json(cfg));
  if (!trace.empty()) {
    write_file(trace, "# scenario_hash=" + sc.hash + " seed=" + std::to_string(training.restart_seed) + "\n" +
                          trace_csv(training.result.trace));
  }
  err << "trained " << param << " policy, selection estimate " << training.selection_estimate << '\n';
  emit(g, out, doc.dump(2));
  return kExitOk;
}

int cmd_simulate(const Globals& g, std::ostream& out, const std::string& path, const std::string& policy_spec,
                 int horizon, int runs, bool include_runs) {
  const Scenario sc = load_scenario(path);
  const int n = horizon > 0 ? horizon : sc.horizon();
  const int r = runs > 0 ? runs : sc.runs();
  const auto policy = make_policy(policy_spec, sc, n);
  const EvalReport rep = evaluate(sc.model, *policy, n, r, seed_for(g, sc));
  emit(g, out, eval_report_json(rep, sc.hash, include_runs));
  return kExitOk;
}

int cmd_compare(const Globals& g, std::ostream& out, const std::string& path, const std::vector<std::string>& specs,
                int horizon, int runs) {
  if (specs.empty()) throw ValidationError("compare: need at least one policy");
  const Scenario sc = load_scenario(path);
  const int n = horizon > 0 ? horizon : sc.horizon();
  const int r = runs > 0 ? runs : sc.runs();
  const std::uint64_t seed = seed_for(g, sc);
  std::vector<EvalReport> reports;
  for (const auto& s : specs) reports.push_back(evaluate(sc.model, *make_policy(s, sc, n), n, r, seed));
  std::ostringstream os;
  os.precision(17);
  os << "# scenario_hash=" << sc.hash << " seed=" << seed << " horizon=" << n << " runs=" << r << '\n';
  os << "policy,source,mean,std_error,ci_low,ci_high,first_vs_this_pct\n";
  for (std::size_t k = 0; k < reports.size(); ++k) {
    const auto& rep = reports[k];
    os << rep.policy_id << ',' << specs[k] << ',' << rep.mean << ',' << rep.std_error << ',' << rep.ci_low << ','
       << rep.ci_high << ',' << relative_improvement(reports.front().mean, rep.mean) << '\n';
  }
  emit(g, out, os.str());
  return kExitOk;
}

struct FitArgs {
  std::string events;
  std::string states = "2..8";
  double width = 2.0;
  int restarts = 10;
  int max_iter = 500;
  double tol = 1e-8;
  std::string export_model;
  std::string rewards;
  double discount = 0.99;
  int stops = 5;
  std::string cdf;
};

int cmd_fit(const Globals& g, std::ostream& out, const FitArgs& a) {
  const std::string text = read_text(a.events);
  const std::string hash = content_hash(text);
  const std::uint64_t seed = g.seed.value_or(1);
  const auto sessions = bin_sessions(parse_events_csv(text), a.width);
  std::vector<std::vector<long>> seqs;
  for (const auto& s : sessions) seqs.push_back(s.counts);
  EmOptions opt;
  opt.restarts = a.restarts;
  opt.max_iter = a.max_iter;
  opt.rel_tol = a.tol;
  const BicScan scan = bic_scan(seqs, parse_range(a.states), seed, opt);
  json doc = json::parse(bic_scan_json(scan, hash, seed));
  doc["sessions"] = sessions.size();
  doc["bin_width"] = a.width;
  emit(g, out, doc.dump(2));

  const FitResult* best = nullptr;
  for (const auto& f : scan.fits) {
    if (f.states == scan.best_states) best = &f;
  }
  if (!a.export_model.empty()) {
    const Vector r = a.rewards.empty() ? Vector::LinSpaced(best->states, best->states, 1) : parse_vector(a.rewards);
    write_file(a.export_model, model_to_json(fitted_model(*best, {r}, a.discount, a.stops)) + "\n");
  }
  if (!a.cdf.empty()) {
    std::ostringstream os;
    os.precision(17);
    os << "# scenario_hash=" << hash << " seed=" << seed << '\n' << "session,step,cdf\n";
    for (std::size_t s = 0; s < seqs.size(); ++s) {
      const auto u = forecast_cdfs(seqs[s], *best);
      for (std::size_t t = 0; t < u.size(); ++t) os << s + 1 << ',' << t + 1 << ',' << u[t] << '\n';
    }
    write_file(a.cdf, os.str());
  }
  return kExitOk;
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multiple-stopping POMDP solver and policy trainer", "multistop"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Random seed (overrides the scenario seed)");
  app.add_option("--threads", g.threads, "Worker thread cap (0 = all cores)");
  app.add_option("--out", g.out, "Output file (default: stdout)");

  std::string model_path, other_path, table_path, policy_path, config_path, trace_path, format = "csv";
  std::string param = "linear";
  bool structure = false, include_runs = false;
  int lines = 200, grid_m = 0, max_iter = 10000, horizon = 0, runs = 0;
  double tol = 1e-6;
  std::vector<std::string> policies;
  FitArgs fit;

  auto* check = app.add_subcommand("check", "Check model assumptions and orderings");
  check->add_option("model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  check->add_option("--copositive-with", other_path, "Second model; tests P <= P_other")->check(CLI::ExistingFile);
  check->add_flag("--structure", structure, "Solve and test threshold/nesting structure");
  check->add_option("--lines", lines, "Sampled lines per vertex")->check(CLI::PositiveNumber);

  auto* solve_cmd = app.add_subcommand("solve", "Value iteration on a belief grid");
  solve_cmd->add_option("model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  solve_cmd->add_option("--grid", grid_m, "Grid resolution M")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--tol", tol, "Sup-norm tolerance")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--max-iter", max_iter, "Sweep cap")->check(CLI::PositiveNumber);

  auto* sets = app.add_subcommand("export-sets", "Stopping sets of a solved table");
  sets->add_option("table", table_path, "Table file from solve")->required()->check(CLI::ExistingFile);
  sets->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv"}));

  auto* train = app.add_subcommand("train-spsa", "Train a policy with SPSA");
  train->add_option("model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  train->add_option("--config", config_path, "SPSA config JSON")->check(CLI::ExistingFile);
  train->add_option("--param", param, "Parametrization")->check(CLI::IsMember({"linear", "softmax"}));
  train->add_option("--trace", trace_path, "Write the iteration trace CSV here");

  auto* sim = app.add_subcommand("simulate", "Monte-Carlo evaluation of one policy");
  sim->add_option("model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  sim->add_option("policy", policy_path, "Policy file or builtin name")->required();
  sim->add_option("--N", horizon, "Horizon")->check(CLI::PositiveNumber);
  sim->add_option("--runs", runs, "Number of runs")->check(CLI::PositiveNumber);
  sim->add_flag("--include-runs", include_runs, "Emit per-run rewards");

  auto* cmp = app.add_subcommand("compare", "Evaluate several policies on common seeds");
  cmp->add_option("model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  cmp->add_option("--policies", policies, "Policy files or builtin names")->required();
  cmp->add_option("--N", horizon, "Horizon")->check(CLI::PositiveNumber);
  cmp->add_option("--runs", runs, "Number of runs")->check(CLI::PositiveNumber);

  auto* fit_cmd = app.add_subcommand("fit", "Fit Poisson HMMs to an event log");
  fit_cmd->add_option("events", fit.events, "Event CSV")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--states", fit.states, "State counts, e.g. 2..8 or 2,3,4");
  fit_cmd->add_option("--width", fit.width, "Bin width in seconds")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--restarts", fit.restarts, "EM restarts")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--max-iter", fit.max_iter, "EM iteration cap")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--tol", fit.tol, "Relative log-likelihood tolerance")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--export-model", fit.export_model, "Write the BIC-selected model here");
  fit_cmd->add_option("--rewards", fit.rewards, "Stop reward for the exported model, e.g. 4,3,2,1");
  fit_cmd->add_option("--discount", fit.discount, "Discount for the exported model");
  fit_cmd->add_option("--stops", fit.stops, "Stop budget for the exported model");
  fit_cmd->add_option("--cdf", fit.cdf, "Write one-step-ahead predictive cdf values here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (seed_opt->count() > 0) g.seed = seed_value;
  if (g.threads > 0) set_max_threads(g.threads);

  try {
    if (check->parsed()) return cmd_check(g, out, model_path, other_path, structure, lines);
    if (solve_cmd->parsed()) return cmd_solve(g, out, model_path, grid_m, tol, max_iter);
    if (sets->parsed()) return cmd_export_sets(g, out, table_path, format);
    if (train->parsed()) return cmd_train(g, out, err, model_path, config_path, param, trace_path);
    if (sim->parsed()) return cmd_simulate(g, out, model_path, policy_path, horizon, runs, include_runs);
    if (cmp->parsed()) return cmd_compare(g, out, model_path, policies, horizon, runs);
    if (fit_cmd->parsed()) return cmd_fit(g, out, fit);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: bad number (" << e.what() << ")\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace multistop::cli
