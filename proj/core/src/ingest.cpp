#include "multistop/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "multistop/parallel.hpp"

namespace multistop {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

EventKind kind_of(const std::string& text, std::size_t line) {
  std::string k = text;
  std::transform(k.begin(), k.end(), k.begin(), [](unsigned char c) { return std::tolower(c); });
  if (k == "start") return EventKind::Start;
  if (k == "end") return EventKind::End;
  if (k == "join") return EventKind::Join;
  if (k == "like") return EventKind::Like;
  if (k == "comment") return EventKind::Comment;
  throw ParseError("events line " + std::to_string(line) + ": unknown kind '" + text + "'");
}

double log_pmf(long y, double rate) {
  if (rate <= 0.0) return y == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return static_cast<double>(y) * std::log(rate) - rate - std::lgamma(static_cast<double>(y) + 1.0);
}

/// Emission likelihoods (one column per step) scaled by their maximum; the
/// log scale is returned in `shift`. Values are tabulated per distinct count.
Matrix emissions(const std::vector<long>& y, const Vector& rates, std::vector<double>& shift) {
  const auto s = rates.size();
  const long top_count = y.empty() ? 0 : *std::max_element(y.begin(), y.end());
  Matrix table(s, top_count + 1);
  std::vector<double> table_shift(static_cast<std::size_t>(top_count + 1));
  std::vector<bool> filled(static_cast<std::size_t>(top_count + 1), false);
  Matrix e(s, static_cast<Eigen::Index>(y.size()));
  shift.resize(y.size());
  for (std::size_t t = 0; t < y.size(); ++t) {
    const long v = y[t];
    if (!filled[static_cast<std::size_t>(v)]) {
      double top = -std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < s; ++i) {
        table(i, v) = log_pmf(v, rates[i]);
        top = std::max(top, table(i, v));
      }
      for (Eigen::Index i = 0; i < s; ++i) table(i, v) = std::exp(table(i, v) - top);
      table_shift[static_cast<std::size_t>(v)] = top;
      filled[static_cast<std::size_t>(v)] = true;
    }
    e.col(static_cast<Eigen::Index>(t)) = table.col(v);
    shift[t] = table_shift[static_cast<std::size_t>(v)];
  }
  return e;
}

struct Sufficient {
  Vector first;       // sum of gamma_1
  Matrix transitions; // sum of xi
  Vector occupancy;   // sum of gamma
  Vector weighted;    // sum of gamma * y
  double log_likelihood = 0.0;
};

void accumulate(const std::vector<long>& y, const Matrix& p, const Vector& rates, const Vector& initial,
                Sufficient& acc) {
  const auto t_len = static_cast<Eigen::Index>(y.size());
  if (t_len == 0) return;
  std::vector<double> shift;
  const Matrix e = emissions(y, rates, shift);
  const auto s = rates.size();
  const Matrix pt = p.transpose();
  Matrix alpha(s, t_len);
  Vector scale(t_len);
  Vector a(s), gamma(s), eb(s), beta = Vector::Ones(s);
  Matrix xi(s, s);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    if (t == 0) {
      a = initial.cwiseProduct(e.col(0));
    } else {
      a.noalias() = pt * alpha.col(t - 1);
      a.array() *= e.col(t).array();
    }
    const double c = a.sum();
    if (!(c > 0.0)) throw ZeroLikelihoodError("count series has zero likelihood under current parameters");
    alpha.col(t) = a / c;
    scale[t] = c;
    acc.log_likelihood += std::log(c) + shift[static_cast<std::size_t>(t)];
  }
  for (Eigen::Index t = t_len - 1; t >= 0; --t) {
    gamma = alpha.col(t).cwiseProduct(beta);
    gamma /= gamma.sum();
    acc.occupancy += gamma;
    acc.weighted += gamma * static_cast<double>(y[static_cast<std::size_t>(t)]);
    if (t == 0) {
      acc.first += gamma;
      break;
    }
    eb = e.col(t).cwiseProduct(beta) / scale[t];
    xi.noalias() = alpha.col(t - 1) * eb.transpose();
    acc.transitions += xi.cwiseProduct(p);
    beta.noalias() = p * eb;
  }
}

Sufficient e_step(const std::vector<std::vector<long>>& seqs, const Matrix& p, const Vector& rates,
                  const Vector& initial) {
  const auto s = rates.size();
  Sufficient acc{Vector::Zero(s), Matrix::Zero(s, s), Vector::Zero(s), Vector::Zero(s), 0.0};
  for (const auto& y : seqs) accumulate(y, p, rates, initial, acc);
  return acc;
}

Vector stationary(const Matrix& p) {
  Vector v = Vector::Constant(p.rows(), 1.0 / p.rows());
  for (int k = 0; k < 2000; ++k) v = p.transpose() * v;
  return v / v.sum();
}

void relabel(FitResult& fit) {
  const int s = fit.states;
  const Vector mass = stationary(fit.transition);
  std::vector<int> order(static_cast<std::size_t>(s));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (fit.rates[a] != fit.rates[b]) return fit.rates[a] > fit.rates[b];
    return mass[a] > mass[b];
  });
  Matrix p(s, s);
  Vector g(s), init(s);
  for (int i = 0; i < s; ++i) {
    g[i] = fit.rates[order[i]];
    init[i] = fit.initial[order[i]];
    for (int j = 0; j < s; ++j) p(i, j) = fit.transition(order[i], order[j]);
  }
  fit.transition = p;
  fit.rates = g;
  fit.initial = init;
}

/// 1-D k-means on the pooled counts; centers seeded from quantiles
/// (restart 0) or random data points.
Vector kmeans_rates(const std::vector<long>& pooled, int s, RngStream& rng, bool random_start) {
  std::vector<double> data(pooled.begin(), pooled.end());
  std::sort(data.begin(), data.end());
  Vector c(s);
  for (int i = 0; i < s; ++i) {
    const double q = random_start ? rng.uniform() : (i + 0.5) / s;
    c[i] = data[std::min(data.size() - 1, static_cast<std::size_t>(q * data.size()))];
  }
  for (int it = 0; it < 50; ++it) {
    Vector sum = Vector::Zero(s), cnt = Vector::Zero(s);
    for (double x : data) {
      int best = 0;
      for (int i = 1; i < s; ++i) {
        if (std::abs(x - c[i]) < std::abs(x - c[best])) best = i;
      }
      sum[best] += x;
      cnt[best] += 1.0;
    }
    for (int i = 0; i < s; ++i) {
      if (cnt[i] > 0) c[i] = sum[i] / cnt[i];
    }
  }
  std::sort(c.data(), c.data() + s);
  // Coincident centers never separate under EM.
  for (int i = 1; i < s; ++i) c[i] = std::max(c[i], c[i - 1] + 0.05 * (1.0 + c[i - 1]));
  return c.cwiseMax(1e-3);
}

}  // namespace

EventLog parse_events_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  EventLog log;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (!header) {
      std::string h = t;
      h.erase(std::remove(h.begin(), h.end(), ' '), h.end());
      if (h != "timestamp_s,kind") throw ParseError("events: expected header 'timestamp_s,kind'");
      header = true;
      continue;
    }
    const auto comma = t.find(',');
    if (comma == std::string::npos) throw ParseError("events line " + std::to_string(lineno) + ": expected two fields");
    Event ev;
    try {
      std::size_t used = 0;
      const std::string ts = trim(t.substr(0, comma));
      ev.timestamp = std::stod(ts, &used);
      if (used != ts.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError("events line " + std::to_string(lineno) + ": bad timestamp");
    }
    ev.kind = kind_of(trim(t.substr(comma + 1)), lineno);
    log.events.push_back(ev);
  }
  if (!header) throw ParseError("events: empty file");
  std::stable_sort(log.events.begin(), log.events.end(),
                   [](const Event& a, const Event& b) { return a.timestamp < b.timestamp; });
  return log;
}

EventLog load_events(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_events_csv(buf.str());
}

std::vector<CountSeries> bin_sessions(const EventLog& log, double width) {
  if (!(width > 0.0)) throw ValidationError("bin width must be positive");
  std::vector<CountSeries> out;
  bool open = false;
  double opened_at = 0.0;
  for (const auto& ev : log.events) {
    if (ev.kind == EventKind::Start) {
      if (open) throw ValidationError("events: session started twice without an end");
      open = true;
      opened_at = ev.timestamp;
    } else if (ev.kind == EventKind::End) {
      if (!open) throw ValidationError("events: end without a preceding start");
      CountSeries cs;
      cs.bin_width = width;
      cs.start = opened_at;
      cs.end = ev.timestamp;
      const auto bins = static_cast<std::size_t>(std::ceil((cs.end - cs.start) / width));
      cs.counts.assign(bins, 0);
      out.push_back(std::move(cs));
      open = false;
    }
  }
  if (out.empty()) throw ValidationError("events: need a start and an end event");
  for (const auto& ev : log.events) {
    if (ev.kind != EventKind::Like) continue;
    for (auto& cs : out) {
      if (ev.timestamp < cs.start || ev.timestamp > cs.end || cs.counts.empty()) continue;
      auto k = static_cast<std::size_t>(std::floor((ev.timestamp - cs.start) / width));
      ++cs.counts[std::min(k, cs.counts.size() - 1)];
      break;
    }
  }
  return out;
}

CountSeries bin_events(const EventLog& log, double width) { return bin_sessions(log, width).front(); }

double bic(double log_likelihood, int parameters, std::size_t observations) {
  return -2.0 * log_likelihood + parameters * std::log(static_cast<double>(observations));
}

double poisson_hmm_log_likelihood(const std::vector<std::vector<long>>& sequences, const Matrix& transition,
                                  const Vector& rates, const Vector& initial) {
  return e_step(sequences, transition, rates, initial).log_likelihood;
}

FitResult fit_poisson_hmm_from(const std::vector<std::vector<long>>& sequences, Matrix transition, Vector rates,
                               Vector initial, const EmOptions& options) {
  FitResult fit;
  fit.states = static_cast<int>(rates.size());
  for (const auto& y : sequences) fit.observations += y.size();
  double prev = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < options.max_iter; ++it) {
    const Sufficient acc = e_step(sequences, transition, rates, initial);
    fit.log_likelihood_trace.push_back(acc.log_likelihood);
    fit.iterations = it + 1;
    const double ll = acc.log_likelihood;
    const bool done = std::isfinite(prev) && std::abs(ll - prev) <= options.rel_tol * std::abs(prev);
    prev = ll;
    // M-step
    initial = acc.first / acc.first.sum();
    for (Eigen::Index i = 0; i < transition.rows(); ++i) {
      const double row = acc.transitions.row(i).sum();
      if (row > 0.0) transition.row(i) = acc.transitions.row(i) / row;
      if (acc.occupancy[i] > 0.0) rates[i] = std::max(acc.weighted[i] / acc.occupancy[i], 1e-10);
    }
    if (done) {
      fit.converged = true;
      break;
    }
  }
  fit.transition = transition;
  fit.rates = rates;
  fit.initial = initial;
  fit.log_likelihood = poisson_hmm_log_likelihood(sequences, transition, rates, initial);
  fit.bic = bic(fit.log_likelihood, fit.parameters(), fit.observations);
  relabel(fit);
  return fit;
}

FitResult fit_poisson_hmm(const std::vector<std::vector<long>>& sequences, int states, std::uint64_t seed,
                          const EmOptions& options) {
  if (states < 2) throw ValidationError("fit: need at least 2 states");
  if (options.restarts < 1 || options.max_iter < 1) throw ValidationError("fit: bad EM options");
  std::vector<long> pooled;
  for (const auto& y : sequences) pooled.insert(pooled.end(), y.begin(), y.end());
  if (pooled.size() < static_cast<std::size_t>(states)) throw ValidationError("fit: series shorter than the state count");
  for (long v : pooled) {
    if (v < 0) throw ValidationError("fit: negative count");
  }
  const bool constant = std::all_of(pooled.begin(), pooled.end(), [&](long v) { return v == pooled.front(); });

  std::vector<FitResult> fits(static_cast<std::size_t>(options.restarts));
  parallel_for(fits.size(), [&](std::size_t k) {
    RngStream rng(derive_seed(seed, k));
    const Vector rates = kmeans_rates(pooled, states, rng, k > 0);
    const double diag = k == 0 ? 0.8 : 0.5 + 0.45 * rng.uniform();
    Matrix p = Matrix::Constant(states, states, (1.0 - diag) / states);
    p.diagonal().array() += diag;
    const Vector init = Vector::Constant(states, 1.0 / states);
    fits[k] = fit_poisson_hmm_from(sequences, p, rates, init, options);
    fits[k].seed = derive_seed(seed, k);
  });
  std::size_t best = 0;
  for (std::size_t k = 1; k < fits.size(); ++k) {
    if (fits[k].log_likelihood > fits[best].log_likelihood) best = k;
  }
  FitResult out = std::move(fits[best]);
  out.identifiable = !constant;
  return out;
}

FitResult fit_poisson_hmm(const CountSeries& series, int states, std::uint64_t seed, const EmOptions& options) {
  return fit_poisson_hmm(std::vector<std::vector<long>>{series.counts}, states, seed, options);
}

BicScan bic_scan(const std::vector<std::vector<long>>& sequences, const std::vector<int>& state_range,
                 std::uint64_t seed, const EmOptions& options) {
  if (state_range.empty()) throw ValidationError("bic scan: empty state range");
  BicScan scan;
  for (int s : state_range) {
    scan.fits.push_back(fit_poisson_hmm(sequences, s, derive_seed(seed, static_cast<std::uint64_t>(s)), options));
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < scan.fits.size(); ++k) {
    if (scan.fits[k].bic < scan.fits[best].bic) best = k;
  }
  scan.best_states = scan.fits[best].states;
  return scan;
}

std::vector<double> forecast_cdfs(const std::vector<long>& counts, const FitResult& fit) {
  std::vector<double> out;
  Vector filtered = fit.initial;
  bool first = true;
  for (long y : counts) {
    const Vector pred = first ? filtered : Vector(fit.transition.transpose() * filtered);
    first = false;
    double cdf = 0.0;
    Vector like(fit.states);
    for (int i = 0; i < fit.states; ++i) {
      double c = 0.0;
      for (long k = 0; k <= y; ++k) c += std::exp(log_pmf(k, fit.rates[i]));
      cdf += pred[i] * std::min(c, 1.0);
      like[i] = std::exp(log_pmf(y, fit.rates[i]));
    }
    out.push_back(cdf);
    Vector post = pred.cwiseProduct(like);
    const double z = post.sum();
    filtered = z > 0.0 ? Vector(post / z) : pred;
  }
  return out;
}

std::vector<long> simulate_counts(const Matrix& transition, const Vector& rates, const Vector& initial,
                                  std::size_t length, RngStream& rng) {
  std::vector<long> out;
  out.reserve(length);
  int x = rng.categorical(initial);
  for (std::size_t t = 0; t < length; ++t) {
    if (t > 0) x = rng.categorical(transition.row(x).transpose());
    out.push_back(rng.poisson(rates[x]));
  }
  return out;
}

Model fitted_model(const FitResult& fit, const std::vector<Vector>& rewards, double discount, int stops) {
  Matrix p = fit.transition;
  for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) /= p.row(i).sum();
  Vector init = fit.initial / fit.initial.sum();
  return Model(p, PoissonObservation{fit.rates, 0}, rewards, discount, stops, init);
}

std::string bic_scan_json(const BicScan& scan, const std::string& scenario_hash, std::uint64_t seed) {
  using nlohmann::json;
  auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  json doc;
  doc["scenario_hash"] = scenario_hash;
  doc["seed"] = seed;
  doc["best_states"] = scan.best_states;
  json fits = json::array();
  for (const auto& f : scan.fits) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < f.transition.rows(); ++i) rows.push_back(vec(f.transition.row(i).transpose()));
    fits.push_back({{"states", f.states},
                    {"parameters", f.parameters()},
                    {"observations", f.observations},
                    {"log_likelihood", f.log_likelihood},
                    {"bic", f.bic},
                    {"iterations", f.iterations},
                    {"converged", f.converged},
                    {"identifiable", f.identifiable},
                    {"transition", rows},
                    {"rates", vec(f.rates)},
                    {"initial", vec(f.initial)}});
  }
  doc["fits"] = fits;
  return doc.dump(2);
}

}  // namespace multistop
