#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>
#include <multistop/ingest.hpp>

#include "fixtures.hpp"

using namespace multistop;
using namespace multistop::testing;

namespace {

double pois(long y, double g) { return std::exp(y * std::log(g) - g - std::lgamma(y + 1.0)); }

// Sum over every hidden path; exponential, only for tiny inputs.
double brute_likelihood(const std::vector<long>& y, const Matrix& p, const Vector& g, const Vector& init) {
  const int s = static_cast<int>(g.size());
  const int t = static_cast<int>(y.size());
  long paths = 1;
  for (int k = 0; k < t; ++k) paths *= s;
  double total = 0.0;
  for (long code = 0; code < paths; ++code) {
    long c = code;
    int prev = -1;
    double w = 1.0;
    for (int k = 0; k < t; ++k) {
      const int x = static_cast<int>(c % s);
      c /= s;
      w *= (prev < 0 ? init[x] : p(prev, x)) * pois(y[static_cast<std::size_t>(k)], g[x]);
      prev = x;
    }
    total += w;
  }
  return total;
}

Matrix two_state_p() {
  Matrix p(2, 2);
  p << 0.95, 0.05, 0.1, 0.9;
  return p;
}

}  // namespace

TEST(Ingest, ParsesAndSortsEvents) {
  const EventLog log = parse_events_csv("timestamp_s,kind\n5,like\n0,start\n3.5,LIKE\n 9 , end \n4,comment\n");
  ASSERT_EQ(log.events.size(), 5u);
  EXPECT_EQ(log.events.front().kind, EventKind::Start);
  EXPECT_EQ(log.events.back().kind, EventKind::End);
  for (std::size_t i = 1; i < log.events.size(); ++i) EXPECT_LE(log.events[i - 1].timestamp, log.events[i].timestamp);
}

TEST(Ingest, MalformedEventFiles) {
  EXPECT_THROW(parse_events_csv(""), ParseError);
  EXPECT_THROW(parse_events_csv("time,kind\n"), ParseError);
  EXPECT_THROW(parse_events_csv("timestamp_s,kind\nabc,like\n"), ParseError);
  EXPECT_THROW(parse_events_csv("timestamp_s,kind\n1,dance\n"), ParseError);
  EXPECT_THROW(parse_events_csv("timestamp_s,kind\n1\n"), ParseError);
  EXPECT_THROW(bin_events(parse_events_csv("timestamp_s,kind\n1,like\n")), ValidationError);
  EXPECT_THROW(bin_events(parse_events_csv("timestamp_s,kind\n0,start\n1,end\n"), 0.0), ValidationError);
}

TEST(Ingest, BinningConservesLikesAndIgnoresOthers) {
  std::string csv = "timestamp_s,kind\n0,start\n10,end\n";
  RngStream rng(91);
  int likes = 0;
  for (int i = 0; i < 300; ++i) {
    const double t = 10.0 * rng.uniform();
    csv += std::to_string(t) + (i % 3 == 0 ? ",comment\n" : i % 7 == 0 ? ",join\n" : ",like\n");
    likes += !(i % 3 == 0) && !(i % 7 == 0);
  }
  csv += "10,like\n-1,like\n11,like\n";
  const CountSeries cs = bin_events(parse_events_csv(csv), 2.0);
  EXPECT_EQ(cs.counts.size(), 5u);
  EXPECT_EQ(std::accumulate(cs.counts.begin(), cs.counts.end(), 0L), likes + 1);
}

TEST(Ingest, BinningIgnoresRecordOrder) {
  std::vector<std::string> rows = {"0,start", "1.5,like", "2,like", "2.5,like", "7.9,like", "8,end", "3,comment"};
  auto render = [](const std::vector<std::string>& r) {
    std::string s = "timestamp_s,kind\n";
    for (const auto& x : r) s += x + "\n";
    return s;
  };
  const auto base = bin_events(parse_events_csv(render(rows)), 2.0).counts;
  EXPECT_EQ(base, (std::vector<long>{1, 2, 0, 1}));
  std::sort(rows.begin(), rows.end());
  do {
    EXPECT_EQ(bin_events(parse_events_csv(render(rows)), 2.0).counts, base);
  } while (std::next_permutation(rows.begin(), rows.end()));
}

TEST(Ingest, MultipleSessions) {
  const auto s = bin_sessions(parse_events_csv("timestamp_s,kind\n0,start\n1,like\n4,end\n10,start\n11,like\n12,like\n14,end\n"));
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].counts, (std::vector<long>{1, 0}));
  EXPECT_EQ(s[1].counts, (std::vector<long>{1, 1}));
}

TEST(Ingest, BicFormula) {
  EXPECT_DOUBLE_EQ(bic(-100.0, 19, 1000), 200.0 + 19 * std::log(1000.0));
}

TEST(Ingest, LikelihoodMatchesPathEnumeration) {
  RngStream rng(92);
  for (int k = 0; k < 20; ++k) {
    const int s = 2 + k % 2;
    const Matrix p = random_stochastic(rng, s, s);
    Vector g(s);
    for (int i = 0; i < s; ++i) g[i] = 0.5 + 10 * rng.uniform();
    const Vector init = rng.dirichlet_ones(s);
    const auto a = simulate_counts(p, g, init, 6, rng), b = simulate_counts(p, g, init, 4, rng);
    const double expect = std::log(brute_likelihood(a, p, g, init)) + std::log(brute_likelihood(b, p, g, init));
    EXPECT_NEAR(poisson_hmm_log_likelihood({a, b}, p, g, init), expect, 1e-9);
  }
}

TEST(Ingest, EmIsMonotoneAndOrdersRates) {
  RngStream rng(93);
  const auto y = simulate_counts(two_state_p(), vec({3, 15}), vec({0.5, 0.5}), 3000, rng);
  const FitResult f = fit_poisson_hmm({y}, 2, 5);
  for (std::size_t i = 1; i < f.log_likelihood_trace.size(); ++i) {
    EXPECT_GE(f.log_likelihood_trace[i], f.log_likelihood_trace[i - 1] - 1e-8);
  }
  EXPECT_GT(f.rates[0], f.rates[1]);
  EXPECT_NEAR(f.rates[0], 15, 1.0);
  EXPECT_NEAR(f.rates[1], 3, 0.5);
  EXPECT_NEAR(f.transition(0, 0), 0.9, 0.05);
  EXPECT_NEAR(f.transition(1, 1), 0.95, 0.05);
  EXPECT_EQ(f.parameters(), 5);
  EXPECT_EQ(f.observations, 3000u);
  EXPECT_DOUBLE_EQ(f.bic, bic(f.log_likelihood, 5, 3000));
  EXPECT_TRUE(f.identifiable);
}

TEST(Ingest, FitIsDeterministic) {
  RngStream rng(94);
  const auto y = simulate_counts(two_state_p(), vec({3, 15}), vec({0.5, 0.5}), 500, rng);
  const FitResult a = fit_poisson_hmm({y}, 3, 8), b = fit_poisson_hmm({y}, 3, 8);
  EXPECT_EQ(a.log_likelihood, b.log_likelihood);
  EXPECT_EQ(a.transition, b.transition);
  EXPECT_EQ(a.rates, b.rates);
}

TEST(Ingest, ConstantSeriesIsFlaggedUnidentifiable) {
  const FitResult f = fit_poisson_hmm({std::vector<long>(50, 4)}, 2, 1);
  EXPECT_FALSE(f.identifiable);
  EXPECT_THROW(fit_poisson_hmm({std::vector<long>{1}}, 2, 1), ValidationError);
  EXPECT_THROW(fit_poisson_hmm({std::vector<long>{1, -2, 3}}, 2, 1), ValidationError);
}

TEST(Ingest, SimulatedFirstCountComesFromInitialState) {
  RngStream rng(95);
  const auto y = simulate_counts(Matrix::Identity(2, 2), vec({0.0, 40.0}), vec({0.0, 1.0}), 100, rng);
  for (long v : y) EXPECT_GT(v, 0);
}

TEST(Ingest, ForecastCdfs) {
  FitResult f;
  f.states = 2;
  f.transition = Matrix::Identity(2, 2);
  f.rates = vec({4.0, 4.0});
  f.initial = vec({0.5, 0.5});
  const auto u = forecast_cdfs({0, 3, 9}, f);
  ASSERT_EQ(u.size(), 3u);
  double c3 = 0.0;
  for (long k = 0; k <= 3; ++k) c3 += pois(k, 4.0);
  EXPECT_NEAR(u[0], pois(0, 4.0), 1e-14);
  EXPECT_NEAR(u[1], c3, 1e-14);
  for (double x : u) {
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, 1.0);
  }
}

TEST(Ingest, BicScanAndExport) {
  RngStream rng(96);
  const auto y = simulate_counts(two_state_p(), vec({3, 15}), vec({0.5, 0.5}), 1000, rng);
  EmOptions opt;
  opt.restarts = 3;
  const BicScan one = bic_scan({y}, {2}, 1, opt);
  ASSERT_EQ(one.fits.size(), 1u);
  EXPECT_EQ(one.best_states, 2);
  const BicScan scan = bic_scan({y}, {1 + 1, 3}, 1, opt);
  EXPECT_EQ(scan.best_states, 2);
  const auto doc = nlohmann::json::parse(bic_scan_json(scan, "h", 1));
  EXPECT_EQ(doc["fits"].size(), 2u);
  EXPECT_EQ(doc["scenario_hash"], "h");
  const Model m = fitted_model(scan.fits[0], {vec({2, 1})}, 0.9, 3);
  EXPECT_EQ(m.states(), 2);
  EXPECT_EQ(m.stops(), 3);
  EXPECT_NO_THROW(parse_model_json(model_to_json(m)));
}
