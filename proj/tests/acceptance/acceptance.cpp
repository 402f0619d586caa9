// Acceptance suite: one PASS/FAIL line per criterion. Thresholds are pinned
// below. A criterion may be pinned as a known failure; the process exits
// nonzero only when some status differs from its pinned expectation.

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <multistop/dp.hpp>
#include <multistop/filter.hpp>
#include <multistop/ingest.hpp>
#include <multistop/parallel.hpp>
#include <multistop/policy.hpp>
#include <multistop/sim.hpp>
#include <multistop/spsa.hpp>
#include <multistop/structure.hpp>

#include "fixtures.hpp"

using namespace multistop;
using namespace multistop::testing;

namespace {

// ---- pinned thresholds -----------------------------------------------------

constexpr double kRatioTol = 0.05;
const std::vector<double> kRatioRef = {1.0000, 1.6617, 2.1154, 2.4586, 2.7519};
const std::vector<double> kRhoCandidates = {0.8, 0.9, 0.95};
constexpr std::size_t kMinGridPoints = 100;

constexpr int kLinesPerFamily = 200;

constexpr int kFilterTriples = 10000;
constexpr double kFilterTol = 1e-12;

constexpr int kTreeHorizon = 4;
constexpr int kTreeGrid = 400;
constexpr int kTreeBeliefs = 20;
constexpr double kTreeTol = 1e-2;

constexpr int kDominancePairs = 20;
constexpr double kDominanceTol = 1e-8;
constexpr int kReflexiveSamples = 1000;
constexpr double kQuadraticTol = 1e-12;

constexpr int kPhiDraws = 100000;
constexpr int kInducedPolicies = 100;

constexpr int kEvalRuns = 1000;
constexpr double kTrainedRatio = 0.80;
constexpr double kLinearOverSoftmaxPct = 10.0;
constexpr double kOverPeriodicPct = 15.0;
constexpr double kOverHeuristicPct = 5.0;

constexpr std::size_t kEmSteps = 10000;
constexpr double kRateRelTol = 0.10;
constexpr double kRowTvTol = 0.10;
constexpr double kLlDropTol = 1e-8;
constexpr int kBicSeeds = 20;
constexpr double kBicHitRate = 0.80;
constexpr int kBicRestarts = 4;

// ---- helpers ---------------------------------------------------------------

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string summary;
  std::vector<std::string> notes;
};

struct Criterion {
  int id;
  std::string title;
  bool expect_pass;
  std::string known_reason;
  std::function<Outcome()> run;
};

struct Scenario {
  Model model;
  nlohmann::json settings;
};

Scenario load_scenario(const std::string& file) {
  const std::string path = scenario_path(file);
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  const auto doc = nlohmann::json::parse(ss.str());
  return {load_model(path), doc.value("scenario", nlohmann::json::object())};
}

SpsaConfig spsa_for(const Scenario& sc) {
  SpsaConfig cfg;
  cfg.horizon = sc.settings.at("horizon").get<int>();
  cfg.seed = sc.settings.at("seed").get<std::uint64_t>();
  if (sc.settings.contains("spsa")) cfg = spsa_config_from_json(sc.settings["spsa"].dump(), cfg);
  return cfg;
}

std::vector<double> value_ratios(const Model& m, const ValueTable& t) {
  std::vector<double> v;
  const double base = value_at(m, t, m.initial_belief(), 1);
  for (int l = 1; l <= m.stops(); ++l) v.push_back(value_at(m, t, m.initial_belief(), l) / base);
  return v;
}

double max_residual(const std::vector<double>& ratios) {
  double r = 0.0;
  for (std::size_t i = 0; i < ratios.size(); ++i) r = std::max(r, std::abs(ratios[i] - kRatioRef[i]));
  return r;
}

Vector uniform_vector(RngStream& rng, int n, double lo, double hi) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * rng.uniform();
  return v;
}

std::string join(const std::vector<double>& xs, const char* f = "%.4f") {
  std::string s = "(";
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + fmt(f, xs[i]);
  return s + ")";
}

// Trained artifacts shared by several criteria.
struct Trained {
  Scenario sc;
  SpsaConfig cfg;
  ThresholdParams linear;
  SoftmaxParams softmax;
  bool has_softmax = false;
  EvalReport linear_eval;
  EvalReport softmax_eval;
};

Trained& example_training() {
  static Trained t = [] {
    Trained out{load_scenario("eq16.json"), {}, {}, {}, false, {}, {}};
    out.cfg = spsa_for(out.sc);
    out.linear = train_linear_threshold(out.sc.model, out.cfg).params;
    out.linear_eval = evaluate(out.sc.model, LinearThresholdPolicy(out.linear), out.cfg.horizon, kEvalRuns,
                               out.sc.settings["seed"].get<std::uint64_t>());
    return out;
  }();
  return t;
}

// ---- criteria --------------------------------------------------------------

Outcome value_ratio_table() {
  const Scenario sc = load_scenario("eq16.json");
  const int res = BeliefGrid::resolution_for(3, kMinGridPoints);
  const BeliefGrid grid(3, res);
  Outcome o;
  double best_listed = 1e9, best_listed_rho = 0;
  for (double rho : kRhoCandidates) {
    const Model m = sc.model.with_discount(rho);
    const auto ratios = value_ratios(m, solve(m, grid));
    const double r = max_residual(ratios);
    o.notes.push_back(fmt("rho=%.2f ratios %s max residual %.4f", rho, join(ratios).c_str(), r));
    if (r < best_listed) {
      best_listed = r;
      best_listed_rho = rho;
    }
  }
  double best = 1e9, best_rho = 0;
  std::vector<double> best_ratios;
  for (int k = 0; k <= 38; ++k) {
    const double rho = 0.80 + 0.005 * k;
    const Model m = sc.model.with_discount(rho);
    const auto ratios = value_ratios(m, solve(m, grid));
    if (max_residual(ratios) < best) {
      best = max_residual(ratios);
      best_rho = rho;
      best_ratios = ratios;
    }
  }
  o.notes.push_back(fmt("scan over rho in [0.80, 0.99]: best rho=%.3f ratios %s max residual %.4f", best_rho,
                        join(best_ratios).c_str(), best));
  o.pass = best_listed <= kRatioTol;
  o.summary = fmt("grid %zu points; best listed rho=%.2f residual %.3f (tol %.2f); best scanned rho=%.3f residual %.3f",
                  grid.size(), best_listed_rho, best_listed, kRatioTol, best_rho, best);
  return o;
}

Outcome structural_properties() {
  const Scenario sc = load_scenario("eq16.json");
  const Model& m = sc.model;
  const BeliefGrid grid(3, sc.settings["grid"].get<int>());
  const ValueTable t = solve(m, grid);
  const GridPolicy policy(m, t);
  RngStream rng(sc.settings["seed"].get<std::uint64_t>());
  const auto up = sample_lines(3, 1, kLinesPerFamily, rng);
  const auto down = sample_lines(3, 3, kLinesPerFamily, rng);
  int mono_bad = 0;
  for (int l = 1; l <= m.stops(); ++l) {
    mono_bad += !policy_monotone_on_lines(policy, l, up).ok();
    mono_bad += !policy_monotone_on_lines(policy, l, down).ok();
  }
  const bool nested = nested_sets(stopping_sets(t)).ok();
  const auto inc = check_increments(t);
  Outcome o;
  o.pass = nested && mono_bad == 0 && inc.increment_increases == 0 && inc.value_decreases == 0;
  o.summary = fmt("nesting %s; line-monotonicity failures %d; W increases %zu; V decreases %zu", nested ? "ok" : "VIOLATED",
                  mono_bad, inc.increment_increases, inc.value_decreases);
  o.notes.push_back(fmt("rho=%.2f, grid %zu points, %d lines toward each of e_1 and e_S", m.discount(), grid.size(),
                        kLinesPerFamily));
  return o;
}

Outcome counterexamples() {
  Outcome o;
  const Scenario ex2 = load_scenario("eq16_ex2.json");
  const BeliefGrid g2(3, ex2.settings["grid"].get<int>());
  const GridPolicy p2(ex2.model, solve(ex2.model, g2));
  RngStream rng(ex2.settings["seed"].get<std::uint64_t>());
  const auto up = sample_lines(3, 1, kLinesPerFamily, rng);
  const auto down = sample_lines(3, 3, kLinesPerFamily, rng);
  int witnesses = 0;
  for (int l = 1; l <= ex2.model.stops(); ++l) {
    for (const auto* lines : {&up, &down}) {
      const auto v = policy_monotone_on_lines(p2, l, *lines);
      if (v.holds == Verdict::False) {
        ++witnesses;
        if (witnesses == 1) o.notes.push_back("first monotonicity witness: " + v.witness->description);
      }
    }
  }
  const Scenario ex3 = load_scenario("eq16_ex3.json");
  const BeliefGrid g3(3, ex3.settings["grid"].get<int>());
  const auto nest = nested_sets(stopping_sets(solve(ex3.model, g3)));
  if (nest.witness) o.notes.push_back("nesting witness: " + nest.witness->description);
  o.pass = witnesses >= 1 && nest.holds == Verdict::False;
  o.summary = fmt("r=(1,2,1): %d (l, family) combinations with a monotonicity witness; per-stop rewards: nesting %s",
                  witnesses, nest.holds == Verdict::False ? "violated (witness found)" : "holds");
  return o;
}

Outcome filter_exactness() {
  RngStream rng(4004);
  double worst = 0.0, worst_sum = 0.0;
  for (int k = 0; k < kFilterTriples; ++k) {
    const int s = 2 + k % 5;
    Model m = k % 4 == 0 ? Model(random_stochastic(rng, s, s),
                                 PoissonObservation{uniform_vector(rng, s, 0.0, 20.0), 0}, {Vector::Ones(s)}, 0.9, 1,
                                 rng.dirichlet_ones(s))
                         : random_explicit_model(rng, s, 2 + k % 6, 1, 0.9);
    const Belief pi = rng.dirichlet_ones(s);
    const Vector sigma = observation_likelihoods(m, pi);
    worst_sum = std::max(worst_sum, std::abs(sigma.sum() - 1.0));
    const int y = rng.categorical(sigma);
    // Bayes rule on joint probabilities, written out.
    const Matrix& p = m.transition();
    const Matrix& b = m.observation_matrix();
    std::vector<double> joint(static_cast<std::size_t>(s), 0.0);
    double z = 0.0;
    for (int j = 0; j < s; ++j) {
      for (int i = 0; i < s; ++i) joint[static_cast<std::size_t>(j)] += pi[i] * p(i, j) * b(j, y);
      z += joint[static_cast<std::size_t>(j)];
    }
    const Belief post = update(m, pi, y).belief;
    for (int j = 0; j < s; ++j) worst = std::max(worst, std::abs(post[j] - joint[static_cast<std::size_t>(j)] / z));
  }
  Outcome o;
  o.pass = worst < kFilterTol && worst_sum < kFilterTol;
  o.summary = fmt("%d triples: max |T - oracle| = %.2e, max |sum sigma - 1| = %.2e (tol %.0e)", kFilterTriples, worst,
                  worst_sum, kFilterTol);
  return o;
}

// Exact finite-horizon value by enumerating the belief tree.
double tree_value(const Matrix& p, const Matrix& b, const std::vector<Vector>& r, double rho, const Belief& pi, int l,
                  int steps) {
  if (steps == 0 || l == 0) return 0.0;
  double next_same = 0.0, next_less = 0.0;
  for (int y = 0; y < b.cols(); ++y) {
    Belief post(pi.size());
    for (int j = 0; j < pi.size(); ++j) {
      double acc = 0.0;
      for (int i = 0; i < pi.size(); ++i) acc += pi[i] * p(i, j);
      post[j] = acc * b(j, y);
    }
    const double sigma = post.sum();
    if (sigma <= 0.0) continue;
    post /= sigma;
    next_same += sigma * tree_value(p, b, r, rho, post, l, steps - 1);
    next_less += sigma * tree_value(p, b, r, rho, post, l - 1, steps - 1);
  }
  const double stop = r[static_cast<std::size_t>(l - 1)].dot(pi) + rho * next_less;
  return std::max(stop, rho * next_same);
}

Outcome small_tree_oracle() {
  RngStream rng(5005);
  double worst = 0.0;
  const int models = 3;
  for (int k = 0; k < models; ++k) {
    const Matrix p = random_stochastic(rng, 2, 2), b = random_stochastic(rng, 2, 2);
    const std::vector<Vector> r = {uniform_vector(rng, 2, -3.0, 3.0), uniform_vector(rng, 2, -3.0, 3.0)};
    const Model m(p, ExplicitObservation{b}, r, 0.9, 2, Vector::Constant(2, 0.5));
    const ValueTable t = iterate(m, BeliefGrid(2, kTreeGrid), kTreeHorizon, ValueInit::Zero);
    for (int n = 0; n < kTreeBeliefs; ++n) {
      const Belief pi = rng.dirichlet_ones(2);
      for (int l = 1; l <= 2; ++l) {
        worst = std::max(worst, std::abs(value_nearest(t, pi, l) - tree_value(p, b, r, 0.9, pi, l, kTreeHorizon)));
      }
    }
  }
  Outcome o;
  o.pass = worst < kTreeTol;
  o.summary = fmt("%d random models, %d beliefs each, horizon %d, grid M=%d: max |grid - tree| = %.2e (tol %.0e)",
                  models, kTreeBeliefs, kTreeHorizon, kTreeGrid, worst, kTreeTol);
  return o;
}

Outcome dominance() {
  const Vector rates = example_rates();
  const Vector r = vec({9, 3, 1});
  const double rho = 0.97;
  const Vector pi0 = Vector::Constant(3, 1.0 / 3);
  RngStream rng(6006);
  int found = 0, tries = 0, violating = 0;
  double worst = 1e9, worst_swapped = 1e9;
  const BeliefGrid grid(3, 13);
  while (found < kDominancePairs && tries < 200000) {
    ++tries;
    const Matrix pbar = random_tp2(rng, 3, 3), p = random_tp2(rng, 3, 3);
    const Model mbar(pbar, PoissonObservation{rates, 0}, {r}, rho, 5, pi0), m(p, PoissonObservation{rates, 0}, {r}, rho, 5, pi0);
    if (!check_assumptions(mbar).all() || !check_assumptions(m).all()) continue;
    if (!copositive_leq(pbar, p).ok()) continue;
    ++found;
    const ValueTable tbar = solve(mbar, grid), t = solve(m, grid);
    double gap = 1e9;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      gap = std::min(gap, t.value(i, 5) - tbar.value(i, 5));
      worst_swapped = std::min(worst_swapped, tbar.value(i, 5) - t.value(i, 5));
    }
    worst = std::min(worst, gap);
    violating += gap < -kDominanceTol;
  }

  RngStream rr(6007);
  bool reflexive = true;
  double worst_quad = 0.0;
  for (int k = 0; k < kReflexiveSamples; ++k) {
    const int s = 2 + k % 5;
    const Matrix p = random_stochastic(rr, s, s);
    reflexive = reflexive && copositive_leq(p, p).ok();
    const Belief pi = rr.dirichlet_ones(s);
    for (const auto& g : copositivity_matrices(p, p)) worst_quad = std::max(worst_quad, std::abs(pi.dot(g * pi)));
  }

  Outcome o;
  o.pass = found == kDominancePairs && violating == 0 && reflexive && worst_quad < kQuadraticTol;
  o.summary = fmt("%d/%d ordered pairs violate V_P >= V_Pbar (worst min gap %.3g); reflexivity %s, max |quadratic form| %.1e",
                  violating, found, worst, reflexive ? "ok" : "FAILED", worst_quad);
  o.notes.push_back(fmt("swapped orientation V_Pbar >= V_P: worst min gap %.3g over the same pairs", worst_swapped));
  o.notes.push_back(fmt("pairs drawn: %d candidates for %d accepted", tries, found));
  return o;
}

Outcome reparametrization() {
  RngStream rng(7007);
  std::size_t violations = 0;
  for (int k = 0; k < kPhiDraws; ++k) {
    const int states = k % 2 == 0 ? 3 : 4, stops = k % 2 == 0 ? 5 : 3;
    std::vector<Vector> phi;
    for (int l = 0; l < stops; ++l) {
      Vector row(states - 1);
      for (int i = 0; i < states - 1; ++i) row[i] = 2.0 * rng.normal();
      phi.push_back(row);
    }
    violations += feasibility_violations(theta_from_phi(phi)).size();
  }
  int mono_bad = 0, nest_bad = 0;
  for (int k = 0; k < kInducedPolicies; ++k) {
    const int states = k % 2 == 0 ? 3 : 4, stops = k % 2 == 0 ? 5 : 3;
    std::vector<Vector> phi;
    for (int l = 0; l < stops; ++l) {
      Vector row(states - 1);
      for (int i = 0; i < states - 1; ++i) row[i] = 2.0 * rng.normal();
      phi.push_back(row);
    }
    const LinearThresholdPolicy policy(theta_from_phi(phi));
    const auto up = sample_lines(states, 1, kLinesPerFamily, rng);
    const auto down = sample_lines(states, states, kLinesPerFamily, rng);
    for (int l = 1; l <= stops; ++l) {
      mono_bad += !policy_monotone_on_lines(policy, l, up).ok();
      mono_bad += !policy_monotone_on_lines(policy, l, down).ok();
    }
    nest_bad += !nested_sets(policy_stop_sets(policy, BeliefGrid(states, 12), stops)).ok();
  }
  Outcome o;
  o.pass = violations == 0 && mono_bad == 0 && nest_bad == 0;
  o.summary = fmt("%d draws: %zu inequality violations; %d induced policies: %d monotonicity and %d nesting failures",
                  kPhiDraws, violations, kInducedPolicies, mono_bad, nest_bad);
  return o;
}

Outcome trained_quality() {
  Trained& tr = example_training();
  const Model& m = tr.sc.model;
  const ValueTable t = solve(m, BeliefGrid(3, tr.sc.settings["grid"].get<int>()));
  const double v0 = value_at(m, t, m.initial_belief(), m.stops());
  const double cv = continue_value(m, t, m.initial_belief(), m.stops());
  const EvalReport dp = evaluate(m, GridPolicy(m, t), tr.cfg.horizon, kEvalRuns, tr.linear_eval.seed);
  const double ratio = tr.linear_eval.mean / cv;
  Outcome o;
  o.pass = ratio >= kTrainedRatio;
  o.summary = fmt("trained linear J=%.3f +- %.3f vs grid-DP value of the simulated problem %.3f: ratio %.3f (min %.2f)",
                  tr.linear_eval.mean, tr.linear_eval.std_error, cv, ratio, kTrainedRatio);
  o.notes.push_back(fmt("V(pi0, L) including a decision before the first observation: %.3f (ratio %.3f)", v0,
                        tr.linear_eval.mean / v0));
  o.notes.push_back(fmt("grid-DP policy simulated: J=%.3f +- %.3f; trained/DP-sim %.3f", dp.mean, dp.std_error,
                        tr.linear_eval.mean / dp.mean));
  o.notes.push_back(fmt("budget: %d restarts x %d iterations x %d runs, horizon %d", tr.cfg.restarts, tr.cfg.max_iter,
                        tr.cfg.mc_runs, tr.cfg.horizon));
  return o;
}

Outcome parametrization_advantage() {
  Trained& tr = example_training();
  if (!tr.has_softmax) {
    tr.softmax = train_softmax(tr.sc.model, tr.cfg).params;
    tr.softmax_eval = evaluate(tr.sc.model, SoftmaxPolicy(tr.softmax), tr.cfg.horizon, kEvalRuns, tr.linear_eval.seed);
    tr.has_softmax = true;
  }
  const double adv = relative_improvement(tr.linear_eval.mean, tr.softmax_eval.mean);
  Outcome o;
  o.pass = adv >= kLinearOverSoftmaxPct;
  o.summary = fmt("linear J=%.3f, softmax J=%.3f: advantage %.1f%% (min %.0f%%)", tr.linear_eval.mean,
                  tr.softmax_eval.mean, adv, kLinearOverSoftmaxPct);
  return o;
}

Outcome application_comparison() {
  const Scenario sc = load_scenario("periscope_eq24.json");
  const Model& m = sc.model;
  const SpsaConfig cfg = spsa_for(sc);
  const int n = sc.settings["horizon"].get<int>();
  const int runs = sc.settings["runs"].get<int>();
  const std::uint64_t seed = sc.settings["seed"].get<std::uint64_t>();
  const auto lin = train_linear_threshold(m, cfg);
  const EvalReport el = evaluate(m, LinearThresholdPolicy(lin.params), n, runs, seed);
  const EvalReport ep = evaluate(m, PeriodicPolicy(default_period(n, m.stops())), n, runs, seed);
  const EvalReport eh = evaluate(m, heuristic_policy(m, BeliefGrid(4, sc.settings["grid"].get<int>())), n, runs, seed);
  const double vp = relative_improvement(el.mean, ep.mean), vh = relative_improvement(el.mean, eh.mean);
  Outcome o;
  o.pass = vp >= kOverPeriodicPct && vh >= kOverHeuristicPct;
  o.summary = fmt("linear J=%.3f, periodic J=%.3f (+%.1f%%, min %.0f%%), heuristic J=%.3f (+%.1f%%, min %.0f%%)", el.mean,
                  ep.mean, vp, kOverPeriodicPct, eh.mean, vh, kOverHeuristicPct);
  o.notes.push_back(fmt("N=%d, rho=%.2f, %d runs, period %d", n, m.discount(), runs, default_period(n, m.stops())));
  return o;
}

bool trace_monotone(const FitResult& f, double& worst_drop) {
  bool ok = true;
  for (std::size_t i = 1; i < f.log_likelihood_trace.size(); ++i) {
    const double drop = f.log_likelihood_trace[i - 1] - f.log_likelihood_trace[i];
    worst_drop = std::max(worst_drop, drop);
    ok = ok && drop <= kLlDropTol;
  }
  return ok;
}

Outcome em_recovery() {
  const Scenario sc = load_scenario("periscope_eq24.json");
  const Matrix p = sc.model.transition();
  const Vector g = std::get<PoissonObservation>(sc.model.observation_law()).rates;
  const Vector init = sc.model.initial_belief();
  RngStream rng(11011);
  const auto y = simulate_counts(p, g, init, kEmSteps, rng);
  const FitResult fit = fit_poisson_hmm({y}, 4, 11);

  double worst_rate = 0.0, worst_tv = 0.0, worst_drop = -1e300;
  for (int i = 0; i < 4; ++i) {
    worst_rate = std::max(worst_rate, std::abs(fit.rates[i] - g[i]) / g[i]);
    worst_tv = std::max(worst_tv, 0.5 * (fit.transition.row(i) - p.row(i)).cwiseAbs().sum());
  }
  bool monotone = trace_monotone(fit, worst_drop);
  // Every EM run, not just the selected one.
  RngStream starts(11012);
  for (int k = 0; k < 10; ++k) {
    Vector g0(4);
    for (int i = 0; i < 4; ++i) g0[i] = 1.0 + 40.0 * starts.uniform();
    monotone = trace_monotone(fit_poisson_hmm_from({y}, random_stochastic(starts, 4, 4), g0, starts.dirichlet_ones(4), {}),
                              worst_drop) && monotone;
  }

  int hits = 0;
  EmOptions opt;
  opt.restarts = kBicRestarts;
  std::map<int, int> picks;
  for (int k = 0; k < kBicSeeds; ++k) {
    RngStream r(derive_seed(11013, static_cast<std::uint64_t>(k)));
    const auto series = simulate_counts(p, g, init, kEmSteps, r);
    const BicScan scan = bic_scan({series}, {2, 3, 4, 5, 6}, static_cast<std::uint64_t>(k), opt);
    for (const auto& f : scan.fits) monotone = trace_monotone(f, worst_drop) && monotone;
    hits += scan.best_states == 4;
    ++picks[scan.best_states];
  }
  std::string pick_text;
  for (const auto& [s, c] : picks) pick_text += fmt(" S=%d:%d", s, c);

  Outcome o;
  o.pass = worst_rate <= kRateRelTol && worst_tv <= kRowTvTol && monotone && hits >= kBicHitRate * kBicSeeds;
  o.summary = fmt("rate error %.1f%% (max %.0f%%), row TV %.3f (max %.2f), LL monotone %s, BIC picks 4 in %d/%d",
                  100 * worst_rate, 100 * kRateRelTol, worst_tv, kRowTvTol, monotone ? "yes" : "NO", hits, kBicSeeds);
  o.notes.push_back("fitted rates " + join(std::vector<double>(fit.rates.data(), fit.rates.data() + 4), "%.2f"));
  o.notes.push_back(fmt("largest single-step log-likelihood drop %.2e; BIC selections:", worst_drop) + pick_text);
  return o;
}

Outcome determinism() {
  int mismatches = 0;
  std::vector<std::string> checked;
  auto same = [&](const std::string& what, const std::string& a, const std::string& b) {
    checked.push_back(what);
    mismatches += a != b;
  };
  const Scenario sc = load_scenario("eq16.json");
  const Model& m = sc.model;
  const BeliefGrid grid(3, 13);
  // Repeats run single-threaded and then with several workers.
  set_max_threads(1);
  const std::string s1 = table_to_json(solve(m, grid), "x", 1);
  set_max_threads(4);
  same("solve", s1, table_to_json(solve(m, grid), "x", 1));

  const auto pol = LinearThresholdPolicy(theta_from_phi(unflatten(Vector::LinSpaced(10, -1, 1), 5, 2)));
  set_max_threads(1);
  const std::string e1 = eval_report_json(evaluate(m, pol, 339, kEvalRuns, 1601), "x", true);
  set_max_threads(4);
  same("evaluate", e1, eval_report_json(evaluate(m, pol, 339, kEvalRuns, 1601), "x", true));

  SpsaConfig cfg = spsa_for(sc);
  cfg.max_iter = 40;
  cfg.restarts = 2;
  auto phi = [&] {
    const auto t = train_linear_threshold(m, cfg);
    return threshold_to_json(t.params) + trace_csv(t.training.result.trace);
  };
  same("train-spsa", phi(), phi());

  RngStream r1(3), r2(3);
  const auto y1 = simulate_counts(m.transition(), example_rates(), m.initial_belief(), 2000, r1);
  const auto y2 = simulate_counts(m.transition(), example_rates(), m.initial_belief(), 2000, r2);
  EmOptions opt;
  opt.restarts = 3;
  same("fit", bic_scan_json(bic_scan({y1}, {2, 3}, 5, opt), "x", 5), bic_scan_json(bic_scan({y2}, {2, 3}, 5, opt), "x", 5));

  const Trained& tr = example_training();
  same("trained policy evaluation",
       eval_report_json(evaluate(m, LinearThresholdPolicy(tr.linear), tr.cfg.horizon, kEvalRuns, 1601), "x", true),
       eval_report_json(tr.linear_eval, "x", true));
  set_max_threads(0);

  Outcome o;
  o.pass = mismatches == 0;
  std::string names;
  for (const auto& c : checked) names += (names.empty() ? "" : ", ") + c;
  o.summary = fmt("%zu repeated computations, %d differ (%s)", checked.size(), mismatches, names.c_str());
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  const std::vector<Criterion> criteria = {
      {1, "value ratios over stop budgets at pi0", false,
       "no discount in {0.8, 0.9, 0.95} reproduces the published ratios; the best fit is near 0.97", value_ratio_table},
      {2, "threshold structure on the base model", true, "", structural_properties},
      {3, "counterexamples are detected", true, "", counterexamples},
      {4, "filter matches Bayes rule", true, "", filter_exactness},
      {5, "grid solver matches belief-tree enumeration", true, "", small_tree_oracle},
      {6, "value dominance under the copositive order", false,
       "the ordering as defined yields V_P <= V_Pbar on every generated pair; the reverse inequality holds", dominance},
      {7, "spherical parametrization is feasible", true, "", reparametrization},
      {8, "trained linear threshold quality", true, "", trained_quality},
      {9, "linear threshold beats softmax", true, "", parametrization_advantage},
      {10, "scheduling comparison on the engagement model", true, "", application_comparison},
      {11, "EM recovery and BIC order selection", true, "", em_recovery},
      {12, "determinism under fixed seeds", true, "", determinism},
  };

  int unexpected = 0, passed = 0, ran = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.summary = std::string("error: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    passed += o.pass;
    const bool as_pinned = o.pass == c.expect_pass;
    unexpected += !as_pinned;
    std::cout << fmt("criterion %2d: %s  %s (%.1fs)", c.id, o.pass ? "PASS" : "FAIL", c.title.c_str(), secs) << '\n';
    std::cout << "    " << o.summary << '\n';
    for (const auto& n : o.notes) std::cout << "    " << n << '\n';
    if (!c.expect_pass) {
      std::cout << "    pinned as a known failure: " << c.known_reason << (o.pass ? " (but it passed)" : "") << '\n';
    } else if (!as_pinned) {
      std::cout << "    UNEXPECTED: pinned to pass\n";
    }
    std::cout.flush();
  }
  std::cout << fmt("%d/%d criteria pass; %d status(es) differ from the pinned expectation\n", passed, ran, unexpected);
  return unexpected == 0 ? 0 : 1;
}
