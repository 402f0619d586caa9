#include "multistop/dp.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "multistop/filter.hpp"
#include "multistop/parallel.hpp"

namespace multistop {

using nlohmann::json;

namespace {

/// Successor beliefs of one point, reduced to their grid indices.
struct Successors {
  std::vector<double> likelihood;
  std::vector<std::size_t> index;
};

Successors successors(const Model& model, const BeliefGrid& grid, const Belief& pi) {
  Successors s;
  const Belief predicted = model.transition().transpose() * pi;
  const Matrix& b = model.observation_matrix();
  for (Eigen::Index y = 0; y < b.cols(); ++y) {
    Belief unnorm = b.col(y).cwiseProduct(predicted);
    const double sigma = unnorm.sum();
    if (!(sigma > 0.0)) continue;
    s.likelihood.push_back(sigma);
    s.index.push_back(grid.nearest(unnorm / sigma));
  }
  return s;
}

/// sum_y sigma(pi, y) V(T(pi, y), l)
double expected_next(const Successors& s, const Matrix& values, int l) {
  double acc = 0.0;
  for (std::size_t k = 0; k < s.index.size(); ++k) {
    acc += s.likelihood[k] * values(static_cast<Eigen::Index>(s.index[k]), l);
  }
  return acc;
}

QValues q_values(const Model& model, const Successors& s, const Belief& pi, const Matrix& values,
                 int l) {
  const double rho = model.discount();
  QValues q;
  q.stop = model.reward(l).dot(pi) + rho * expected_next(s, values, l - 1);
  q.go_on = rho * expected_next(s, values, l);
  return q;
}

Matrix initial_values(const Model& model, const BeliefGrid& grid, ValueInit init) {
  const int stops = model.stops();
  Matrix v = Matrix::Zero(static_cast<Eigen::Index>(grid.size()), stops + 1);
  if (init == ValueInit::Zero) return v;
  // V_0(pi, l) = sum_{j<l} rho^j (P^j r_{l-j})' pi
  const double rho = model.discount();
  for (int l = 1; l <= stops; ++l) {
    Vector coef = Vector::Zero(model.states());
    Vector propagated;
    double weight = 1.0;
    for (int j = 0; j < l; ++j) {
      propagated = model.reward(l - j);
      for (int k = 0; k < j; ++k) propagated = model.transition() * propagated;
      coef += weight * propagated;
      weight *= rho;
    }
    for (std::size_t i = 0; i < grid.size(); ++i) v(static_cast<Eigen::Index>(i), l) = coef.dot(grid.point(i));
  }
  return v;
}

ValueTable run_sweeps(const Model& model, const BeliefGrid& grid, ValueInit init, int max_sweeps,
                      double tol, bool stop_on_tol) {
  const auto n = grid.size();
  const int stops = model.stops();
  std::vector<Successors> next(n);
  parallel_for(n, [&](std::size_t i) { next[i] = successors(model, grid, grid.point(i)); });

  Matrix values = initial_values(model, grid, init);
  Matrix fresh = values;
  Eigen::MatrixXi policy = Eigen::MatrixXi::Constant(static_cast<Eigen::Index>(n), stops, 1);
  double residual = std::numeric_limits<double>::infinity();
  int sweeps = 0;
  bool converged = false;

  while (sweeps < max_sweeps) {
    parallel_for(n, [&](std::size_t i) {
      const auto row = static_cast<Eigen::Index>(i);
      for (int l = 1; l <= stops; ++l) {
        const QValues q = q_values(model, next[i], grid.point(i), values, l);
        fresh(row, l) = q.value();
        policy(row, l - 1) = to_int(q.best());
      }
    });
    residual = (fresh - values).cwiseAbs().maxCoeff();
    values.swap(fresh);
    ++sweeps;
    if (stop_on_tol && residual < tol) {
      converged = true;
      break;
    }
  }
  if (!stop_on_tol) converged = true;
  return ValueTable(grid, std::move(values), std::move(policy), sweeps, residual, converged);
}

}  // namespace

ValueTable::ValueTable(BeliefGrid grid, Matrix values, Eigen::MatrixXi policy, int iterations,
                       double residual, bool converged)
    : grid_(std::move(grid)),
      values_(std::move(values)),
      policy_(std::move(policy)),
      iterations_(iterations),
      residual_(residual),
      converged_(converged) {}

ValueTable solve(const Model& model, const BeliefGrid& grid, const SolveOptions& options) {
  if (model.discount() >= 1.0) throw ValidationError("solve: discount must be below 1");
  if (grid.states() != model.states()) throw ValidationError("solve: grid dimension differs from model");
  if (!(options.tol > 0.0) || options.max_iter < 1) throw ValidationError("solve: bad tolerance or iteration cap");
  ValueTable table = run_sweeps(model, grid, options.init, options.max_iter, options.tol, true);
  if (!table.converged()) {
    std::ostringstream os;
    os << "value iteration stopped after " << table.iterations() << " sweeps with residual "
       << table.residual();
    throw ConvergenceError(os.str(), table.residual());
  }
  return table;
}

ValueTable iterate(const Model& model, const BeliefGrid& grid, int sweeps, ValueInit init) {
  if (grid.states() != model.states()) throw ValidationError("iterate: grid dimension differs from model");
  if (sweeps < 0) throw ValidationError("iterate: negative sweep count");
  return run_sweeps(model, grid, init, sweeps, 0.0, false);
}

QValues lookahead(const Model& model, const ValueTable& table, const Belief& pi, int l) {
  if (l < 1 || l > table.stops()) throw ValidationError("lookahead: stop index out of range");
  return q_values(model, successors(model, table.grid(), pi), pi, table.values(), l);
}

double value_at(const Model& model, const ValueTable& table, const Belief& pi, int l) {
  if (l == 0) return 0.0;
  return lookahead(model, table, pi, l).value();
}

double value_nearest(const ValueTable& table, const Belief& pi, int l) {
  return table.value(table.grid().nearest(pi), l);
}

double continue_value(const Model& model, const ValueTable& table, const Belief& pi, int l) {
  return model.discount() * expected_next(successors(model, table.grid(), pi), table.values(), l);
}

StopSets stopping_sets(const ValueTable& table) {
  StopSets sets;
  const auto n = table.grid().size();
  for (int l = 1; l <= table.stops(); ++l) {
    std::vector<bool> row(n);
    for (std::size_t i = 0; i < n; ++i) row[i] = table.action(i, l) == Action::Stop;
    sets.indicator.push_back(std::move(row));
  }
  return sets;
}

std::string stopping_sets_csv(const ValueTable& table) {
  std::ostringstream os;
  os.precision(17);
  const auto& grid = table.grid();
  for (int k = 1; k <= grid.states(); ++k) os << "pi_" << k << ',';
  os << "l,action\n";
  for (int l = 1; l <= table.stops(); ++l) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      for (int k = 0; k < grid.states(); ++k) os << grid.point(i)[k] << ',';
      os << l << ',' << to_int(table.action(i, l)) << '\n';
    }
  }
  return os.str();
}

IncrementReport check_increments(const ValueTable& table, double tol) {
  IncrementReport rep;
  for (std::size_t i = 0; i < table.grid().size(); ++i) {
    for (int l = 1; l <= table.stops(); ++l) {
      if (table.value(i, l) < table.value(i, l - 1) - tol) ++rep.value_decreases;
      if (l >= 2 && table.increment(i, l) > table.increment(i, l - 1) + tol) ++rep.increment_increases;
    }
  }
  return rep;
}

double finite_stop_bound(int stops, double max_stop_reward, double continue_reward_floor) {
  if (stops < 1) throw ValidationError("finite_stop_bound: stop budget must be positive");
  if (!(max_stop_reward > 0.0)) throw ValidationError("finite_stop_bound: need a positive stop reward");
  if (!(continue_reward_floor < 0.0)) {
    throw ValidationError("finite_stop_bound: continue reward floor must be strictly negative");
  }
  return stops * max_stop_reward / std::abs(continue_reward_floor);
}

double finite_stop_bound(const Model& model) {
  if (!model.continue_penalty()) throw ValidationError("finite_stop_bound: model has no continue_penalty");
  return finite_stop_bound(model.stops(), model.max_reward(), *model.continue_penalty());
}

int horizon_for_tolerance(double discount, double max_abs_reward, double epsilon) {
  if (!(discount > 0.0 && discount < 1.0)) throw ValidationError("horizon_for_tolerance: discount must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw ValidationError("horizon_for_tolerance: epsilon must be positive");
  auto within = [&](int n) { return std::pow(discount, n) / (1.0 - discount) * max_abs_reward <= epsilon; };
  if (within(0)) return 0;
  int n = static_cast<int>(std::ceil(std::log((1.0 - discount) * epsilon / max_abs_reward) / std::log(discount)));
  n = std::max(n, 1);
  while (n > 1 && within(n - 1)) --n;
  while (!within(n)) ++n;
  return n;
}

int horizon_for_tolerance(const Model& model, double epsilon) {
  return horizon_for_tolerance(model.discount(), model.max_abs_reward(), epsilon);
}

std::string table_to_json(const ValueTable& table, const std::string& scenario_hash, std::uint64_t seed) {
  json doc;
  doc["scenario_hash"] = scenario_hash;
  doc["seed"] = seed;
  doc["states"] = table.grid().states();
  doc["resolution"] = table.grid().resolution();
  doc["stops"] = table.stops();
  doc["iterations"] = table.iterations();
  doc["residual"] = table.residual();
  doc["converged"] = table.converged();
  json values = json::array();
  json policy = json::array();
  for (std::size_t i = 0; i < table.grid().size(); ++i) {
    json vr = json::array();
    json pr = json::array();
    for (int l = 0; l <= table.stops(); ++l) vr.push_back(table.value(i, l));
    for (int l = 1; l <= table.stops(); ++l) pr.push_back(to_int(table.action(i, l)));
    values.push_back(vr);
    policy.push_back(pr);
  }
  doc["values"] = values;
  doc["policy"] = policy;
  return doc.dump(1);
}

ValueTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
    const int states = doc.at("states").get<int>();
    const int resolution = doc.at("resolution").get<int>();
    const int stops = doc.at("stops").get<int>();
    BeliefGrid grid(states, resolution);
    const auto& vj = doc.at("values");
    const auto& pj = doc.at("policy");
    if (vj.size() != grid.size() || pj.size() != grid.size()) throw ParseError("table: row count differs from grid");
    const auto n = static_cast<Eigen::Index>(grid.size());
    Matrix values(n, stops + 1);
    Eigen::MatrixXi policy(n, stops);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& vr = vj[static_cast<std::size_t>(i)];
      const auto& pr = pj[static_cast<std::size_t>(i)];
      if (vr.size() != static_cast<std::size_t>(stops + 1) || pr.size() != static_cast<std::size_t>(stops)) {
        throw ParseError("table: row width differs from stop count");
      }
      for (int l = 0; l <= stops; ++l) values(i, l) = vr[static_cast<std::size_t>(l)].get<double>();
      for (int l = 0; l < stops; ++l) policy(i, l) = pr[static_cast<std::size_t>(l)].get<int>();
    }
    return ValueTable(std::move(grid), std::move(values), std::move(policy), doc.at("iterations").get<int>(),
                      doc.at("residual").get<double>(), doc.at("converged").get<bool>());
  } catch (const json::exception& e) {
    throw ParseError(std::string("table: ") + e.what());
  }
}

}  // namespace multistop
