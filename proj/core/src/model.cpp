#include "multistop/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace multistop {

namespace {

constexpr double kStochasticTolerance = 1e-12;

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

void check_stochastic_rows(const Matrix& m, const std::string& name) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      require(std::isfinite(m(i, j)) && m(i, j) >= 0.0,
              name + ": entry (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                  ") is negative or not finite");
    }
    const double s = m.row(i).sum();
    if (std::abs(s - 1.0) > kStochasticTolerance) {
      std::ostringstream os;
      os.precision(17);
      os << name << ": row " << i + 1 << " sums to " << s << ", not 1";
      throw ValidationError(os.str());
    }
  }
}

double poisson_log_pmf(long y, double rate) {
  return static_cast<double>(y) * std::log(rate) - rate - std::lgamma(static_cast<double>(y) + 1.0);
}

}  // namespace

int poisson_truncation_bound(const Vector& rates, double tail_tolerance) {
  int bound = 0;
  for (Eigen::Index i = 0; i < rates.size(); ++i) {
    const double g = rates[i];
    if (g <= 0.0) continue;
    double cdf = 0.0;
    int y = 0;
    for (;; ++y) {
      cdf += std::exp(poisson_log_pmf(y, g));
      if (cdf >= 1.0 - tail_tolerance) break;
    }
    bound = std::max(bound, y);
  }
  return bound;
}

Matrix discretize_observations(const PoissonObservation& law) {
  const auto states = law.rates.size();
  const int top = law.max_count;
  Matrix b = Matrix::Zero(states, top + 1);
  for (Eigen::Index i = 0; i < states; ++i) {
    const double g = law.rates[i];
    if (g <= 0.0) {
      b(i, 0) = 1.0;
      continue;
    }
    double head = 0.0;
    for (int y = 0; y < top; ++y) {
      b(i, y) = std::exp(poisson_log_pmf(y, g));
      head += b(i, y);
    }
    b(i, top) = std::max(0.0, 1.0 - head);
  }
  return b;
}

Model::Model(Matrix transition, ObservationLaw observation, std::vector<Vector> rewards,
             double discount, int stops, Vector initial_belief,
             std::optional<double> continue_penalty)
    : transition_(std::move(transition)),
      observation_(std::move(observation)),
      rewards_(std::move(rewards)),
      discount_(discount),
      stops_(stops),
      initial_belief_(std::move(initial_belief)),
      continue_penalty_(continue_penalty) {
  const auto s = transition_.rows();
  require(s >= 2, "states: need at least 2 states");
  require(transition_.cols() == s, "transition: matrix must be square");
  check_stochastic_rows(transition_, "transition");

  if (auto* ex = std::get_if<ExplicitObservation>(&observation_)) {
    require(ex->matrix.rows() == s, "observation: matrix must have one row per state");
    require(ex->matrix.cols() >= 1, "observation: empty alphabet");
    check_stochastic_rows(ex->matrix, "observation");
    obs_matrix_ = ex->matrix;
  } else {
    auto& po = std::get<PoissonObservation>(observation_);
    require(po.rates.size() == s, "observation: need one Poisson rate per state");
    for (Eigen::Index i = 0; i < s; ++i) {
      require(std::isfinite(po.rates[i]) && po.rates[i] >= 0.0,
              "observation: Poisson rates must be finite and nonnegative");
    }
    if (po.max_count <= 0) po.max_count = std::max(1, poisson_truncation_bound(po.rates));
    obs_matrix_ = discretize_observations(po);
  }

  require(stops_ >= 1, "stops: budget must be at least 1");
  require(!rewards_.empty(), "rewards: missing");
  if (rewards_.size() == 1 && stops_ > 1) rewards_.resize(static_cast<std::size_t>(stops_), rewards_.front());
  require(rewards_.size() == static_cast<std::size_t>(stops_),
          "rewards: need one vector per stop or a single shared vector");
  for (const auto& r : rewards_) {
    require(r.size() == s, "rewards: each vector needs one entry per state");
    require(r.allFinite(), "rewards: entries must be finite");
  }

  require(std::isfinite(discount_) && discount_ >= 0.0 && discount_ <= 1.0,
          "discount: must lie in [0, 1]");
  if (continue_penalty_) {
    require(std::isfinite(*continue_penalty_) && *continue_penalty_ < 0.0,
            "continue_penalty: must be strictly negative");
  }
  if (discount_ == 1.0) {
    require(max_reward() > 0.0, "discount: rho = 1 needs a positive stop reward");
    require(continue_penalty_.has_value(), "discount: rho = 1 needs a continue_penalty");
  }

  require(initial_belief_.size() == s, "initial_belief: need one entry per state");
  for (Eigen::Index i = 0; i < s; ++i) {
    require(std::isfinite(initial_belief_[i]) && initial_belief_[i] >= 0.0,
            "initial_belief: entries must be nonnegative");
  }
  require(std::abs(initial_belief_.sum() - 1.0) <= kStochasticTolerance,
          "initial_belief: entries must sum to 1");
}

bool Model::shared_reward() const {
  for (const auto& r : rewards_) {
    if (r != rewards_.front()) return false;
  }
  return true;
}

double Model::max_reward() const {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& r : rewards_) m = std::max(m, r.maxCoeff());
  return m;
}

double Model::max_abs_reward() const {
  double m = 0.0;
  for (const auto& r : rewards_) m = std::max(m, r.cwiseAbs().maxCoeff());
  return m;
}

Model Model::with_discount(double rho) const {
  return Model(transition_, observation_, rewards_, rho, stops_, initial_belief_, continue_penalty_);
}

Model Model::with_transition(Matrix transition) const {
  return Model(std::move(transition), observation_, rewards_, discount_, stops_, initial_belief_,
               continue_penalty_);
}

Model Model::with_rewards(std::vector<Vector> rewards) const {
  const int stops = static_cast<int>(rewards.size()) == 1 ? stops_ : static_cast<int>(rewards.size());
  return Model(transition_, observation_, std::move(rewards), discount_, stops, initial_belief_,
               continue_penalty_);
}

Model Model::with_initial_belief(Vector pi0) const {
  return Model(transition_, observation_, rewards_, discount_, stops_, std::move(pi0),
               continue_penalty_);
}

}  // namespace multistop
