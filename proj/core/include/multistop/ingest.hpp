#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "multistop/common.hpp"
#include "multistop/model.hpp"
#include "multistop/rng.hpp"

namespace multistop {

enum class EventKind { Start, End, Join, Like, Comment };

struct Event {
  double timestamp = 0.0;
  EventKind kind = EventKind::Like;
};

/// Events sorted by timestamp (stable, so equal stamps keep file order).
struct EventLog {
  std::vector<Event> events;
};

/// CSV with header "timestamp_s,kind".
EventLog parse_events_csv(const std::string& text);
EventLog load_events(const std::filesystem::path& path);

/// Like counts per bin [start + k w, start + (k + 1) w) of one session.
struct CountSeries {
  double bin_width = 2.0;
  double start = 0.0;
  double end = 0.0;
  std::vector<long> counts;
};

/// Bins the first session of the log. Comments and joins are ignored.
CountSeries bin_events(const EventLog& log, double width = 2.0);
/// One series per start/end pair.
std::vector<CountSeries> bin_sessions(const EventLog& log, double width = 2.0);

struct FitResult {
  int states = 0;
  Matrix transition;
  Vector rates;
  Vector initial;
  double log_likelihood = 0.0;
  double bic = 0.0;
  int iterations = 0;
  bool converged = false;
  bool identifiable = true;
  std::size_t observations = 0;
  std::uint64_t seed = 0;
  std::vector<double> log_likelihood_trace;

  /// S^2 + S - 1 free parameters.
  int parameters() const noexcept { return states * states + states - 1; }
};

struct EmOptions {
  int max_iter = 500;
  double rel_tol = 1e-8;
  int restarts = 10;
};

/// -2 log L + n log N.
double bic(double log_likelihood, int parameters, std::size_t observations);

/// Single EM run from a given starting point (no restarts).
FitResult fit_poisson_hmm_from(const std::vector<std::vector<long>>& sequences, Matrix transition,
                               Vector rates, Vector initial, const EmOptions& options);

/// Multi-start EM for a Poisson HMM. Each sequence restarts the chain from
/// the initial distribution. States are relabeled by decreasing rate.
FitResult fit_poisson_hmm(const std::vector<std::vector<long>>& sequences, int states,
                          std::uint64_t seed, const EmOptions& options = {});
FitResult fit_poisson_hmm(const CountSeries& series, int states, std::uint64_t seed,
                          const EmOptions& options = {});

struct BicScan {
  std::vector<FitResult> fits;
  int best_states = 0;
};
BicScan bic_scan(const std::vector<std::vector<long>>& sequences, const std::vector<int>& state_range,
                 std::uint64_t seed, const EmOptions& options = {});

/// Log-likelihood of the sequences under given parameters (scaled forward pass).
double poisson_hmm_log_likelihood(const std::vector<std::vector<long>>& sequences,
                                  const Matrix& transition, const Vector& rates,
                                  const Vector& initial);

/// One-step-ahead predictive cdf P(Y_t <= y_t | y_1..y_{t-1}) per step.
std::vector<double> forecast_cdfs(const std::vector<long>& counts, const FitResult& fit);

/// Counts from a hidden chain with Poisson emissions.
std::vector<long> simulate_counts(const Matrix& transition, const Vector& rates,
                                  const Vector& initial, std::size_t length, RngStream& rng);

/// Fitted parameters as a Poisson-observation model.
Model fitted_model(const FitResult& fit, const std::vector<Vector>& rewards, double discount,
                   int stops);

std::string bic_scan_json(const BicScan& scan, const std::string& scenario_hash,
                          std::uint64_t seed);

}  // namespace multistop
