#include "multistop/structure.hpp"

#include <json.hpp>

#include "multistop/grid.hpp"
#include "multistop/parallel.hpp"

namespace multistop {

using nlohmann::json;

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::True: return "true";
    case Verdict::False: return "false";
    case Verdict::Unknown: return "unknown";
  }
  return "unknown";
}

OrderingVerdict is_tp2(const Matrix& a, double tol) {
  for (Eigen::Index i1 = 0; i1 < a.rows(); ++i1) {
    for (Eigen::Index i2 = i1 + 1; i2 < a.rows(); ++i2) {
      for (Eigen::Index j1 = 0; j1 < a.cols(); ++j1) {
        for (Eigen::Index j2 = j1 + 1; j2 < a.cols(); ++j2) {
          const double minor = a(i1, j1) * a(i2, j2) - a(i1, j2) * a(i2, j1);
          if (minor < -tol) {
            return OrderingVerdict::no(
                {"negative 2x2 minor " + std::to_string(minor),
                 {static_cast<int>(i1 + 1), static_cast<int>(i2 + 1), static_cast<int>(j1 + 1),
                  static_cast<int>(j2 + 1)},
                 {}});
          }
        }
      }
    }
  }
  return OrderingVerdict::yes();
}

bool mlr_geq(const Belief& p1, const Belief& p2, double tol) {
  for (Eigen::Index i = 0; i < p1.size(); ++i) {
    for (Eigen::Index j = i + 1; j < p1.size(); ++j) {
      if (p1[j] * p2[i] > p2[j] * p1[i] + tol) return false;
    }
  }
  return true;
}

bool fosd_geq(const Belief& p1, const Belief& p2, double tol) {
  double t1 = 0.0;
  double t2 = 0.0;
  for (Eigen::Index j = p1.size() - 1; j >= 0; --j) {
    t1 += p1[j];
    t2 += p2[j];
    if (t1 > t2 + tol) return false;
  }
  return true;
}

bool AssumptionReport::a3() const {
  for (const auto& v : decreasing_reward_gap) {
    if (!v.ok()) return false;
  }
  return true;
}

namespace {

OrderingVerdict decreasing(const Vector& v, const std::string& name) {
  for (Eigen::Index i = 0; i + 1 < v.size(); ++i) {
    if (v[i + 1] > v[i] + kProductTolerance) {
      return OrderingVerdict::no({name + " increases between entries " + std::to_string(i + 1) + " and " +
                                      std::to_string(i + 2),
                                  {static_cast<int>(i + 1), static_cast<int>(i + 2)},
                                  {}});
    }
  }
  return OrderingVerdict::yes();
}

json verdict_json(const OrderingVerdict& v) {
  json out;
  out["holds"] = to_string(v.holds);
  if (v.witness) {
    out["witness"]["description"] = v.witness->description;
    out["witness"]["indices"] = v.witness->indices;
    if (v.witness->point.size() > 0) {
      out["witness"]["point"] =
          std::vector<double>(v.witness->point.data(), v.witness->point.data() + v.witness->point.size());
    }
  }
  return out;
}

}  // namespace

AssumptionReport check_assumptions(const Model& model) {
  AssumptionReport rep;
  rep.tp2_transition = is_tp2(model.transition());
  rep.tp2_observation = is_tp2(model.observation_matrix());
  if (!rep.tp2_observation.ok() && is_tp2(model.observation_matrix().rowwise().reverse()).ok()) {
    rep.tp2_observation = OrderingVerdict::yes();
    rep.observation_order_reversed = true;
  }
  const Matrix gap = Matrix::Identity(model.states(), model.states()) - model.discount() * model.transition();
  for (int l = 1; l <= model.stops(); ++l) {
    rep.decreasing_reward_gap.push_back(decreasing(gap * model.reward(l), "(I - rho P) r_" + std::to_string(l)));
    rep.rewards_decreasing.push_back(decreasing(model.reward(l), "r").ok());
  }
  rep.shared_reward = model.shared_reward();
  if (!rep.shared_reward) {
    rep.warnings.push_back("stop rewards differ across stop indices; the threshold and nesting results assume a common reward");
  }
  if (rep.tp2_transition.ok() && rep.a3()) {
    for (std::size_t k = 0; k < rep.rewards_decreasing.size(); ++k) {
      if (!rep.rewards_decreasing[k]) {
        rep.warnings.push_back("r_" + std::to_string(k + 1) + " is not decreasing although A1 and A3 hold");
      }
    }
  }
  return rep;
}

std::string assumption_report_json(const AssumptionReport& report, int indent) {
  json doc;
  doc["A1"] = verdict_json(report.tp2_transition);
  doc["A2"] = verdict_json(report.tp2_observation);
  doc["A2"]["observation_order"] = report.observation_order_reversed ? "reversed" : "as_given";
  json a3 = json::array();
  for (const auto& v : report.decreasing_reward_gap) a3.push_back(verdict_json(v));
  doc["A3"] = {{"holds", report.a3() ? "true" : "false"}, {"per_stop", a3}};
  doc["rewards_decreasing"] = report.rewards_decreasing;
  doc["shared_reward"] = report.shared_reward;
  doc["all_pass"] = report.all();
  doc["warnings"] = report.warnings;
  return doc.dump(indent);
}

std::vector<Matrix> copositivity_matrices(const Matrix& p, const Matrix& q) {
  if (p.rows() != p.cols() || q.rows() != q.cols() || p.rows() != q.rows()) {
    throw ValidationError("copositivity: matrices must be square with equal size");
  }
  const auto s = p.rows();
  std::vector<Matrix> out;
  for (Eigen::Index j = 0; j + 1 < s; ++j) {
    Matrix g(s, s);
    for (Eigen::Index m = 0; m < s; ++m) {
      for (Eigen::Index n = 0; n < s; ++n) g(m, n) = p(m, j) * q(n, j + 1) - p(m, j + 1) * q(n, j);
    }
    out.push_back(0.5 * (g + g.transpose()));
  }
  return out;
}

OrderingVerdict copositive_leq(const Matrix& p, const Matrix& q, int grid_density, double tol) {
  if (grid_density < 1) throw ValidationError("copositivity: grid density must be positive");
  const auto gammas = copositivity_matrices(p, q);
  const int s = static_cast<int>(p.rows());

  std::vector<std::size_t> open;
  for (std::size_t j = 0; j < gammas.size(); ++j) {
    const Matrix& g = gammas[j];
    if (g.minCoeff() >= -kProductTolerance) continue;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(g, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() >= -kProductTolerance) continue;
    open.push_back(j);
  }
  if (open.empty()) return OrderingVerdict::yes();

  constexpr std::uint64_t kMaxSamples = 200000;
  std::vector<Belief> samples;
  if (BeliefGrid::point_count(s, grid_density) <= kMaxSamples) {
    BeliefGrid grid(s, grid_density);
    for (std::size_t i = 0; i < grid.size(); ++i) samples.push_back(grid.point(i));
  } else {
    RngStream rng(derive_seed(0x636f706fULL, static_cast<std::uint64_t>(s)));
    for (std::uint64_t i = 0; i < kMaxSamples; ++i) samples.push_back(rng.dirichlet_ones(s));
  }
  for (std::size_t j : open) {
    for (const auto& pi : samples) {
      const double form = pi.dot(gammas[j] * pi);
      if (form < -tol) {
        return OrderingVerdict::no({"negative quadratic form " + std::to_string(form) + " for Gamma^" +
                                        std::to_string(j + 1),
                                    {static_cast<int>(j + 1)},
                                    pi});
      }
    }
  }
  return OrderingVerdict::unknown();
}

Belief Line::point(double e) const {
  Belief out = (1.0 - e) * anchor;
  out[vertex - 1] += e;
  return out;
}

std::vector<Line> sample_lines(int states, int vertex, std::size_t count, RngStream& rng, int eps_points) {
  if (vertex != 1 && vertex != states) throw ValidationError("lines: vertex must be 1 or S");
  if (eps_points < 2) throw ValidationError("lines: need at least two points per line");
  std::vector<double> eps(static_cast<std::size_t>(eps_points));
  for (int k = 0; k < eps_points; ++k) eps[static_cast<std::size_t>(k)] = static_cast<double>(k) / (eps_points - 1);
  std::vector<Line> out;
  out.reserve(count);
  for (std::size_t c = 0; c < count; ++c) {
    const Vector face = rng.dirichlet_ones(states - 1);
    Belief anchor = Belief::Zero(states);
    for (int i = 0, k = 0; i < states; ++i) {
      if (i == vertex - 1) continue;
      anchor[i] = face[k++];
    }
    out.push_back({std::move(anchor), vertex, eps});
  }
  return out;
}

namespace {

/// Points of the line from MLR-smallest to MLR-largest.
std::vector<double> ascending_order(const Line& line) {
  std::vector<double> e = line.eps;
  std::sort(e.begin(), e.end());
  if (line.vertex != 1) std::reverse(e.begin(), e.end());
  return e;
}

}  // namespace

OrderingVerdict policy_monotone_on_lines(const Policy& policy, int l, const std::vector<Line>& lines) {
  std::vector<std::optional<Witness>> found(lines.size());
  parallel_for(lines.size(), [&](std::size_t k) {
    RngStream rng(derive_seed(0x6c696e65ULL, k));
    const auto order = ascending_order(lines[k]);
    int prev = to_int(Action::Continue);
    for (double e : order) {
      const Belief pi = lines[k].point(e);
      const int a = to_int(policy.act(pi, l, 1, rng));
      if (a > prev) {
        found[k] = Witness{"action rises from stop to continue along line " + std::to_string(k + 1) +
                               " toward vertex " + std::to_string(lines[k].vertex),
                           {l, static_cast<int>(k + 1)},
                           pi};
        return;
      }
      prev = a;
    }
  });
  for (auto& w : found) {
    if (w) return OrderingVerdict::no(std::move(*w));
  }
  return OrderingVerdict::yes();
}

int stop_runs_on_line(const Policy& policy, int l, const Line& line) {
  RngStream rng(0x72756e73ULL);
  std::vector<double> e = line.eps;
  std::sort(e.begin(), e.end());
  int runs = 0;
  bool inside = false;
  for (double x : e) {
    const bool stop = policy.act(line.point(x), l, 1, rng) == Action::Stop;
    if (stop && !inside) ++runs;
    inside = stop;
  }
  return runs;
}

OrderingVerdict nested_sets(const StopSets& sets) {
  for (int l = 2; l <= sets.stops(); ++l) {
    const auto& lower = sets.indicator[static_cast<std::size_t>(l - 2)];
    const auto& upper = sets.indicator[static_cast<std::size_t>(l - 1)];
    for (std::size_t i = 0; i < lower.size(); ++i) {
      if (lower[i] && !upper[i]) {
        return OrderingVerdict::no({"grid point " + std::to_string(i + 1) + " stops with " + std::to_string(l - 1) +
                                        " stops left but not with " + std::to_string(l),
                                    {l - 1, l, static_cast<int>(i + 1)},
                                    {}});
      }
    }
  }
  return OrderingVerdict::yes();
}

StopSets policy_stop_sets(const Policy& policy, const BeliefGrid& grid, int stops) {
  StopSets sets;
  RngStream rng(0x73657473ULL);
  for (int l = 1; l <= stops; ++l) {
    std::vector<bool> row(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) row[i] = policy.act(grid.point(i), l, 1, rng) == Action::Stop;
    sets.indicator.push_back(std::move(row));
  }
  return sets;
}

}  // namespace multistop
