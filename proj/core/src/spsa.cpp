#include "multistop/spsa.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "multistop/sim.hpp"

namespace multistop {

using nlohmann::json;

void SpsaConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ValidationError(std::string("spsa config: ") + what);
  };
  require(kappa > 0.5 && kappa <= 1.0, "kappa must lie in (0.5, 1]");
  require(upsilon > 0.0 && upsilon <= 1.0, "upsilon must lie in (0, 1]");
  require(varsigma > 0.0, "varsigma must be positive");
  require(epsilon_gain > 0.0, "epsilon_gain must be positive");
  require(mu_gain > 0.0, "mu_gain must be positive");
  require(max_iter >= 1, "max_iter must be at least 1");
  require(grad_tol > 0.0, "grad_tol must be positive");
  require(grad_patience >= 1, "grad_patience must be at least 1");
  require(mc_runs >= 1, "mc_runs must be at least 1");
  require(horizon >= 1, "horizon must be at least 1");
  require(restarts >= 1, "restarts must be at least 1");
  require(selection_runs >= 1, "selection_runs must be at least 1");
  require(init_scale > 0.0, "init_scale must be positive");
}

double SpsaConfig::step_size(int n) const { return epsilon_gain * std::pow(n + 1.0 + varsigma, -kappa); }

double SpsaConfig::perturbation(int n) const { return mu_gain * std::pow(n + 1.0, -upsilon); }

SpsaConfig spsa_config_from_json(const std::string& text, SpsaConfig cfg) {
  json doc;
  try {
    doc = json::parse(text);
    auto take = [&](const char* key, auto& slot) {
      if (doc.contains(key)) slot = doc[key].get<std::decay_t<decltype(slot)>>();
    };
    take("kappa", cfg.kappa);
    take("upsilon", cfg.upsilon);
    take("varsigma", cfg.varsigma);
    take("epsilon_gain", cfg.epsilon_gain);
    take("mu_gain", cfg.mu_gain);
    take("max_iter", cfg.max_iter);
    take("grad_tol", cfg.grad_tol);
    take("grad_patience", cfg.grad_patience);
    take("mc_runs", cfg.mc_runs);
    take("horizon", cfg.horizon);
    take("seed", cfg.seed);
    take("common_random_numbers", cfg.common_random_numbers);
    take("restarts", cfg.restarts);
    take("selection_runs", cfg.selection_runs);
    take("init_scale", cfg.init_scale);
  } catch (const json::exception& e) {
    throw ParseError(std::string("spsa config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string spsa_config_to_json(const SpsaConfig& cfg) {
  json doc = {{"kappa", cfg.kappa},
              {"upsilon", cfg.upsilon},
              {"varsigma", cfg.varsigma},
              {"epsilon_gain", cfg.epsilon_gain},
              {"mu_gain", cfg.mu_gain},
              {"max_iter", cfg.max_iter},
              {"grad_tol", cfg.grad_tol},
              {"grad_patience", cfg.grad_patience},
              {"mc_runs", cfg.mc_runs},
              {"horizon", cfg.horizon},
              {"seed", cfg.seed},
              {"common_random_numbers", cfg.common_random_numbers},
              {"restarts", cfg.restarts},
              {"selection_runs", cfg.selection_runs},
              {"init_scale", cfg.init_scale}};
  return doc.dump(2);
}

GradientSample gradient_estimate(const Vector& phi, double c, const Objective& objective, RngStream& rng,
                                 std::uint64_t seed_plus, std::uint64_t seed_minus) {
  if (!(c > 0.0)) throw ValidationError("spsa: perturbation size must be positive");
  GradientSample g;
  g.direction.resize(phi.size());
  for (Eigen::Index i = 0; i < phi.size(); ++i) g.direction[i] = rng.rademacher();
  g.j_plus = objective(phi + c * g.direction, seed_plus);
  g.j_minus = objective(phi - c * g.direction, seed_minus);
  g.gradient = (g.j_plus - g.j_minus) / (2.0 * c) * g.direction;
  return g;
}

SpsaResult train(const Objective& objective, const Vector& initial, const SpsaConfig& cfg) {
  cfg.validate();
  RngStream directions(derive_seed(cfg.seed, 0x64697273ULL));
  const std::uint64_t eval_root = derive_seed(cfg.seed, 0x6576616cULL);

  SpsaResult res;
  res.phi = initial;
  res.best_phi = initial;
  res.best_estimate = -std::numeric_limits<double>::infinity();
  int quiet = 0;
  for (int n = 0; n < cfg.max_iter; ++n) {
    const std::uint64_t sp = derive_seed(eval_root, 2 * static_cast<std::uint64_t>(n));
    const std::uint64_t sm = cfg.common_random_numbers ? sp : derive_seed(eval_root, 2 * static_cast<std::uint64_t>(n) + 1);
    const GradientSample g = gradient_estimate(res.phi, cfg.perturbation(n), objective, directions, sp, sm);
    const double norm = g.gradient.norm();
    res.trace.push_back({n, g.j_plus, g.j_minus, norm});
    const double proxy = 0.5 * (g.j_plus + g.j_minus);
    if (proxy > res.best_estimate) {
      res.best_estimate = proxy;
      res.best_phi = res.phi;
    }
    res.phi += cfg.step_size(n) * g.gradient;
    res.iterations = n + 1;
    quiet = norm < cfg.grad_tol ? quiet + 1 : 0;
    if (quiet >= cfg.grad_patience) {
      res.small_gradient = true;
      break;
    }
  }
  return res;
}

std::string trace_csv(const std::vector<SpsaTraceRow>& trace) {
  std::ostringstream os;
  os.precision(17);
  os << "iter,J_plus,J_minus,grad_norm\n";
  for (const auto& r : trace) os << r.iter << ',' << r.j_plus << ',' << r.j_minus << ',' << r.grad_norm << '\n';
  return os.str();
}

Objective linear_objective(const Model& model, int horizon, int runs) {
  return [model, horizon, runs](const Vector& phi, std::uint64_t seed) {
    const int dim = model.states() - 1;
    LinearThresholdPolicy policy(theta_from_phi(unflatten(phi, model.stops(), dim)));
    return mean_reward(model, policy, horizon, runs, seed);
  };
}

Objective softmax_objective(const Model& model, int horizon, int runs) {
  return [model, horizon, runs](const Vector& flat, std::uint64_t seed) {
    SoftmaxPolicy policy(SoftmaxParams::unflatten(flat, model.stops(), model.states() - 1));
    return mean_reward(model, policy, horizon, runs, seed);
  };
}

TrainedPolicy train_multistart(const Objective& objective, int dim, const SpsaConfig& cfg,
                               const std::optional<Vector>& initial) {
  cfg.validate();
  const std::uint64_t selection_seed = derive_seed(cfg.seed, 0x73656c65ULL);
  // Scoring needs more runs than one gradient step; the objective scales with
  // the seed only, so wrap it to average several batches.
  const int batches = std::max(1, cfg.selection_runs / cfg.mc_runs);
  auto score = [&](const Vector& phi) {
    double acc = 0.0;
    for (int b = 0; b < batches; ++b) acc += objective(phi, derive_seed(selection_seed, static_cast<std::uint64_t>(b)));
    return acc / batches;
  };

  TrainedPolicy best;
  best.selection_estimate = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < cfg.restarts; ++k) {
    SpsaConfig local = cfg;
    local.seed = derive_seed(cfg.seed, 0x1000ULL + static_cast<std::uint64_t>(k));
    Vector start(dim);
    if (initial) {
      start = *initial;
    } else {
      RngStream rng(derive_seed(local.seed, 0x696e6974ULL));
      for (int i = 0; i < dim; ++i) start[i] = cfg.init_scale * rng.normal();
    }
    SpsaResult res = train(objective, start, local);
    const double final_score = score(res.phi);
    const double best_score = score(res.best_phi);
    const bool use_final = final_score >= best_score;
    const double s = use_final ? final_score : best_score;
    best.restart_estimates.push_back(s);
    if (s > best.selection_estimate) {
      best.selection_estimate = s;
      best.phi = use_final ? res.phi : res.best_phi;
      best.restart_seed = local.seed;
      best.result = std::move(res);
    }
  }
  return best;
}

TrainedThreshold train_linear_threshold(const Model& model, const SpsaConfig& cfg) {
  const int dim = model.stops() * (model.states() - 1);
  TrainedThreshold out;
  out.training = train_multistart(linear_objective(model, cfg.horizon, cfg.mc_runs), dim, cfg);
  out.params = theta_from_phi(unflatten(out.training.phi, model.stops(), model.states() - 1));
  return out;
}

TrainedSoftmax train_softmax(const Model& model, const SpsaConfig& cfg) {
  const int dim = 2 * model.stops() * (model.states() - 1);
  TrainedSoftmax out;
  out.training = train_multistart(softmax_objective(model, cfg.horizon, cfg.mc_runs), dim, cfg);
  out.params = SoftmaxParams::unflatten(out.training.phi, model.stops(), model.states() - 1);
  return out;
}

}  // namespace multistop
