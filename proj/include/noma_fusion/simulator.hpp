#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "noma_fusion/decoder.hpp"
#include "noma_fusion/model.hpp"
#include "noma_fusion/rng.hpp"

namespace noma_fusion {

/// Source -> two BSC sensors -> superimposed BPSK -> GMAC -> ML fusion decoder,
/// for one fixed rotation.
class FusionLink {
public:
  FusionLink(const SystemParams& params, double theta)
      : decoder_(params, theta), sigma_(params.sigma()), eps1_(params.eps1()), eps2_(params.eps2()) {}

  const MlDecoder& decoder() const { return decoder_; }

  /// One channel use. Returns (sent source bit, decoded bit).
  template <typename Rng>
  std::pair<Bit, Bit> simulate_bit(Rng& rng) {
    const Bit x = static_cast<Bit>(rng() >> 63);
    const Bit x1 = x ^ (uniform01(rng) < eps1_ ? 1 : 0);
    const Bit x2 = x ^ (uniform01(rng) < eps2_ ? 1 : 0);
    const double nr = normal_(rng);
    const double ni = normal_(rng);
    const ComplexSample r = decoder_.constellation()(x1, x2) + Complex(sigma_ * nr, sigma_ * ni);
    return {x, decoder_.decide(r)};
  }

  template <typename Rng>
  double run_trial(std::uint64_t bits, Rng& rng) {
    if (bits == 0) throw std::domain_error("a trial needs at least one bit");
    std::uint64_t errors = 0;
    for (std::uint64_t n = 0; n < bits; ++n) {
      const auto [sent, decoded] = simulate_bit(rng);
      errors += sent != decoded;
    }
    return static_cast<double>(errors) / static_cast<double>(bits);
  }

private:
  MlDecoder decoder_;
  double sigma_;
  double eps1_;
  double eps2_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

template <typename Rng>
std::pair<Bit, Bit> simulate_bit(const SystemParams& params, double theta, Rng& rng) {
  FusionLink link(params, theta);
  return link.simulate_bit(rng);
}

/// Fraction of `bits` source bits decoded in error.
template <typename Rng>
double run_trial(const SystemParams& params, double theta, std::uint64_t bits, Rng& rng) {
  FusionLink link(params, theta);
  return link.run_trial(bits, rng);
}

struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;
};

inline double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (xs.size() - 1));
}

/// Normal-approximation 95% interval: mean and 1.96 s/sqrt(n), s with n - 1
/// denominator.
inline MeanCi confidence_interval(std::span<const double> values) {
  if (values.size() < 2) throw std::domain_error("confidence_interval needs at least two values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  return {mean, 1.96 * sample_std(values) / std::sqrt(n)};
}

/// Centered moving average. Near the edges the window is truncated to the
/// neighbours that exist.
inline std::vector<double> moving_average(std::span<const double> values, int window) {
  if (window < 1 || window % 2 == 0) throw std::domain_error("moving-average window must be odd and >= 1");
  const auto n = static_cast<std::ptrdiff_t>(values.size());
  const std::ptrdiff_t half = window / 2;
  std::vector<double> out(values.size());
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto lo = std::max<std::ptrdiff_t>(0, k - half);
    const auto hi = std::min<std::ptrdiff_t>(n - 1, k + half);
    double s = 0.0;
    for (auto m = lo; m <= hi; ++m) s += values[m];
    out[k] = s / static_cast<double>(hi - lo + 1);
  }
  return out;
}

/// n equally spaced angles covering [0, pi/2], endpoints included.
inline std::vector<double> uniform_theta_grid(int n) {
  if (n < 1) throw std::domain_error("theta grid needs at least one point");
  if (n == 1) return {0.0};
  std::vector<double> grid(n);
  for (int k = 0; k < n; ++k) grid[k] = (std::numbers::pi / 2.0) * k / (n - 1);
  grid.back() = std::numbers::pi / 2.0;
  return grid;
}

enum class Smoothing {
  Pooled,    ///< smooth the trial-averaged curve, take its minimum
  PerTrial,  ///< smooth each trial's curve, aggregate the per-trial minima
};

inline const char* to_string(Smoothing s) { return s == Smoothing::Pooled ? "pooled" : "per-trial"; }

inline Smoothing smoothing_from_string(const std::string& s) {
  if (s == "pooled") return Smoothing::Pooled;
  if (s == "per-trial") return Smoothing::PerTrial;
  throw std::domain_error("unknown smoothing mode '" + s + "' (expected pooled or per-trial)");
}

struct SimConfig {
  SystemParams params;
  std::vector<double> theta_grid = uniform_theta_grid(100);
  int trials = 30;
  std::uint64_t bits_per_trial = 100000;
  std::uint64_t seed = 0;
  int ma_window = 5;
  Smoothing smoothing = Smoothing::Pooled;
  /// Worker threads; 0 picks the hardware concurrency. Never affects results.
  unsigned threads = 0;

  void validate() const {
    if (trials < 1) throw std::domain_error("trials must be >= 1");
    if (bits_per_trial < 1) throw std::domain_error("bits per trial must be >= 1");
    if (theta_grid.empty()) throw std::domain_error("theta grid is empty");
    for (std::size_t k = 0; k < theta_grid.size(); ++k) {
      const double t = theta_grid[k];
      if (!(t >= 0.0 && t <= std::numbers::pi / 2.0)) {
        throw std::domain_error("theta grid values must lie in [0, pi/2]");
      }
      if (k > 0 && !(t > theta_grid[k - 1])) throw std::domain_error("theta grid must be strictly increasing");
    }
    if (ma_window < 1 || ma_window % 2 == 0) throw std::domain_error("ma_window must be odd and >= 1");
    if (static_cast<std::size_t>(ma_window) > theta_grid.size()) {
      throw std::domain_error("ma_window exceeds the theta grid length");
    }
  }
};

struct TrialStats {
  double theta = 0.0;
  std::vector<double> per_trial_error;
  double mean = 0.0;
  double std = 0.0;
  double ci95_half_width = 0.0;
};

struct SmoothedPoint {
  double theta = 0.0;
  double rate = 0.0;
};

struct SweepResult {
  SimConfig config;
  std::vector<TrialStats> stats;
  std::vector<SmoothedPoint> smoothed;
  double theta_exp_star = 0.0;
  double pe_exp_star = 0.0;
  /// 95% half width over the per-trial smoothed minima; empty for one trial.
  std::optional<double> pe_exp_ci;
  std::vector<double> per_trial_minima;
  std::vector<double> per_trial_argmin;
};

namespace detail {

inline unsigned resolve_threads(unsigned requested, std::size_t jobs) {
  unsigned n = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

inline std::size_t argmin_first(std::span<const double> v) {
  return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

}  // namespace detail

/// Runs `trials` independent trials at every grid angle. Each (theta index,
/// trial index) pair owns its RNG stream, so output is identical for any
/// thread count.
inline SweepResult sweep(const SimConfig& config) {
  config.validate();
  const std::size_t n_theta = config.theta_grid.size();
  const auto trials = static_cast<std::size_t>(config.trials);

  // rates[k * trials + t]
  std::vector<double> rates(n_theta * trials);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < n_theta; k = next++) {
      FusionLink link(config.params, config.theta_grid[k]);
      for (std::size_t t = 0; t < trials; ++t) {
        auto rng = make_stream(config.seed, k, t);
        rates[k * trials + t] = link.run_trial(config.bits_per_trial, rng);
      }
    }
  };
  const unsigned n_threads = detail::resolve_threads(config.threads, n_theta);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (unsigned w = 0; w < n_threads; ++w) pool.emplace_back(worker);
  }

  SweepResult result{config, {}, {}, 0.0, 0.0, std::nullopt, {}, {}};
  std::vector<double> means(n_theta);
  result.stats.reserve(n_theta);
  for (std::size_t k = 0; k < n_theta; ++k) {
    TrialStats s;
    s.theta = config.theta_grid[k];
    s.per_trial_error.assign(rates.begin() + k * trials, rates.begin() + (k + 1) * trials);
    s.mean = std::accumulate(s.per_trial_error.begin(), s.per_trial_error.end(), 0.0) / trials;
    s.std = sample_std(s.per_trial_error);
    s.ci95_half_width = 1.96 * s.std / std::sqrt(static_cast<double>(trials));
    means[k] = s.mean;
    result.stats.push_back(std::move(s));
  }

  const auto smoothed = moving_average(means, config.ma_window);
  result.smoothed.reserve(n_theta);
  for (std::size_t k = 0; k < n_theta; ++k) result.smoothed.push_back({config.theta_grid[k], smoothed[k]});

  std::vector<double> curve(n_theta);
  for (std::size_t t = 0; t < trials; ++t) {
    for (std::size_t k = 0; k < n_theta; ++k) curve[k] = rates[k * trials + t];
    const auto trial_smoothed = moving_average(curve, config.ma_window);
    const auto k_min = detail::argmin_first(trial_smoothed);
    result.per_trial_minima.push_back(trial_smoothed[k_min]);
    result.per_trial_argmin.push_back(config.theta_grid[k_min]);
  }
  if (trials >= 2) result.pe_exp_ci = confidence_interval(result.per_trial_minima).half_width;

  if (config.smoothing == Smoothing::Pooled) {
    const auto k_min = detail::argmin_first(smoothed);
    result.theta_exp_star = config.theta_grid[k_min];
    result.pe_exp_star = smoothed[k_min];
  } else {
    auto angles = result.per_trial_argmin;
    const auto mid = angles.begin() + (angles.size() - 1) / 2;
    std::nth_element(angles.begin(), mid, angles.end());
    result.theta_exp_star = *mid;
    result.pe_exp_star = std::accumulate(result.per_trial_minima.begin(), result.per_trial_minima.end(), 0.0) /
                         static_cast<double>(trials);
  }
  return result;
}

}  // namespace noma_fusion
