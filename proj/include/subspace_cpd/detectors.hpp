#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "subspace_cpd/linalg.hpp"
#include "subspace_cpd/models.hpp"
#include "subspace_cpd/rng.hpp"

namespace subspace_cpd {

// Exact one-sample log-likelihood ratio of the spiked alternative against
// isotropic noise, including the positive front factor rho/(2 sigma2 (1+rho)):
//   log f0/finf = rho/(2 sigma2 (1+rho)) * [ (u.x)^2 - sigma2 (1+1/rho) log(1+rho) ]
inline double cusum_loglr(std::span<const double> x, const SpikedModel& model) {
  model.validate();
  if (!(model.theta > 0.0))
    throw std::invalid_argument("cusum_loglr: theta must be positive");
  const double rho = model.rho();
  const double y = dot(x, model.u);
  const double d = model.sigma2 * (1.0 + 1.0 / rho) * std::log1p(rho);
  return rho / (2.0 * model.sigma2 * (1.0 + rho)) * (y * y - d);
}

// drift of the simplified CUSUM increment (u.x)^2 - d
inline double cusum_drift(const SpikedModel& model) {
  const double rho = model.rho();
  return model.sigma2 * (1.0 + 1.0 / rho) * std::log1p(rho);
}

// Exact CUSUM on the simplified scale: S_t = (S_{t-1})^+ + (u.x_t)^2 - d.
// The positive factor in the log-likelihood ratio is dropped, so thresholds
// live on this same scale. Requires the true post-change parameters.
class CusumDetector {
 public:
  CusumDetector(SpikedModel model, double threshold)
      : model_(std::move(model)), threshold_(threshold) {
    model_.validate();
    if (!(model_.theta > 0.0))
      throw std::invalid_argument("CusumDetector: theta = 0 gives a zero-mean increment");
    drift_ = cusum_drift(model_);
  }

  double step(std::span<const double> x) {
    require_running();
    const double y = dot(x, model_.u);
    stat_ = std::max(stat_, 0.0) + y * y - drift_;
    ++t_;
    if (stat_ >= threshold_) stopped_ = t_;
    return stat_;
  }

  double statistic() const { return stat_; }
  double threshold() const { return threshold_; }
  double drift() const { return drift_; }
  std::optional<long> stopped() const { return stopped_; }
  long time() const { return t_; }

  void require_running() const {
    if (stopped_) throw std::logic_error("detector already stopped");
  }

 private:
  SpikedModel model_;
  double threshold_;
  double drift_;
  double stat_ = 0.0;
  long t_ = 0;
  std::optional<long> stopped_;
};

struct EigDetectorConfig {
  int k = 1;
  int window = 1;
  double threshold = 0.0;
  EigOptions eig{0.0, 1000};
  // warm-started power iterations tried before the dense solve; 0 goes dense
  // immediately, which measures fastest at the dimensions of interest
  int warm_power_iters = 0;
};

// Largest-eigenvalue procedure: statistic lambda_max of the un-normalized
// sliding-window covariance (growing window for t < w), stop at >= b.
class EigDetector {
 public:
  explicit EigDetector(EigDetectorConfig cfg)
      : cfg_(cfg), wc_(cfg.k, cfg.window) {
    if (cfg.k < 1 || cfg.window < 1)
      throw std::invalid_argument("EigDetector: k, window >= 1");
  }

  double step(std::span<const double> x) {
    require_running();
    wc_.push(x);
    ++t_;
    EigOptions warm_opts{cfg_.eig.tol, cfg_.warm_power_iters};
    stat_ = wc_.leading(warm_opts).value;
    if (stat_ >= cfg_.threshold) stopped_ = t_;
    return stat_;
  }

  double statistic() const { return stat_; }
  double threshold() const { return cfg_.threshold; }
  std::optional<long> stopped() const { return stopped_; }
  long time() const { return t_; }
  const WindowCovariance& window() const { return wc_; }

  void require_running() const {
    if (stopped_) throw std::logic_error("detector already stopped");
  }

 private:
  EigDetectorConfig cfg_;
  WindowCovariance wc_;
  double stat_ = 0.0;
  long t_ = 0;
  std::optional<long> stopped_;
};

struct SubspaceCusumConfig {
  int k = 1;
  int window = 1;
  double drift = 0.0;
  double threshold = 0.0;
  EigOptions eig{0.0, 1000};
  int warm_power_iters = 0;
};

// Subspace-CUSUM: score x_t with the unit leading eigenvector of the window
// covariance built from x_{t+1}..x_{t+w} (data delayed by w samples, so the
// direction estimate is independent of the scored observation):
//   S_t = (S_{t-1})^+ + (u_hat . x_t)^2 - d.
// A raw stop at scored index t corresponds to the actual stop t + w, which is
// also the number of observations consumed.
class SubspaceCusumDetector {
 public:
  explicit SubspaceCusumDetector(SubspaceCusumConfig cfg)
      : cfg_(cfg),
        wc_(cfg.k, cfg.window),
        pending_(static_cast<std::size_t>(cfg.window + 1) * cfg.k, 0.0) {
    if (cfg.k < 1 || cfg.window < 1)
      throw std::invalid_argument("SubspaceCusumDetector: k, window >= 1");
  }

  // feeds the next arrival; scoring starts once w observations of look-ahead
  // have accumulated (the first w arrivals produce no statistic update)
  double step(std::span<const double> x) {
    require_running();
    ++arrivals_;
    const int w = cfg_.window;
    double* slot = pending_.data() + static_cast<std::size_t>(arrivals_ % (w + 1)) * cfg_.k;
    std::copy(x.begin(), x.end(), slot);
    wc_.push(x);
    if (arrivals_ > w) {
      const long scored = arrivals_ - w;  // index t of the scored observation
      const double* xt = pending_.data() + static_cast<std::size_t>(scored % (w + 1)) * cfg_.k;
      EigOptions warm_opts{cfg_.eig.tol, cfg_.warm_power_iters};
      const EigPair& eig = wc_.leading(warm_opts);
      const double y = dot(std::span<const double>(xt, cfg_.k), eig.vector);
      last_score_ = y * y;
      stat_ = std::max(stat_, 0.0) + last_score_ - cfg_.drift;
      if (stat_ >= cfg_.threshold) {
        stopped_raw_ = scored;
        stopped_corrected_ = scored + w;
      }
    }
    return stat_;
  }

  double statistic() const { return stat_; }
  double threshold() const { return cfg_.threshold; }
  double last_score() const { return last_score_; }  // (u_hat . x_t)^2 of the last update
  long arrivals() const { return arrivals_; }
  std::optional<long> stopped_raw() const { return stopped_raw_; }
  std::optional<long> stopped() const { return stopped_corrected_; }

  void require_running() const {
    if (stopped_corrected_) throw std::logic_error("detector already stopped");
  }

 private:
  SubspaceCusumConfig cfg_;
  WindowCovariance wc_;
  std::vector<double> pending_;  // ring of the last w+1 arrivals
  double stat_ = 0.0;
  double last_score_ = 0.0;
  long arrivals_ = 0;
  std::optional<long> stopped_raw_, stopped_corrected_;
};

struct DriftBounds {
  double lower = 0.0;  // sigma2_hat
  double upper = 0.0;  // sigma2_hat (1 + rho_min) (1 - (k-1)/(w rho_min))
};

// The admissible drift interval for Subspace-CUSUM. Ordering upper > lower
// requires w > (k-1)(1+rho_min)/rho_min^2; smaller windows leave no valid d.
inline DriftBounds drift_bounds(double sigma2_hat, double rho_min, int w, int k) {
  if (!(sigma2_hat > 0.0)) throw std::invalid_argument("drift_bounds: sigma2_hat > 0");
  if (!(rho_min > 0.0)) throw std::invalid_argument("drift_bounds: rho_min > 0");
  if (w < 1 || k < 1) throw std::invalid_argument("drift_bounds: w, k >= 1");
  const double w_min = (k - 1) * (1.0 + rho_min) / (rho_min * rho_min);
  if (!(static_cast<double>(w) > w_min)) {
    throw std::invalid_argument(
        "drift_bounds: window too small for a valid drift interval; need w > " +
        std::to_string(w_min) + " (minimal integer w = " +
        std::to_string(static_cast<long>(std::floor(w_min)) + 1) + ")");
  }
  DriftBounds b;
  b.lower = sigma2_hat;
  b.upper = sigma2_hat * (1.0 + rho_min) * (1.0 - (k - 1) / (static_cast<double>(w) * rho_min));
  return b;
}

enum class DriftMode { kAverage, kMonteCarlo };

struct DriftMcOptions {
  int trials = 20000;       // independent (window, scored sample) pairs
  std::uint64_t seed = 1;   // also seeds the random direction u0
  EigOptions eig{0.0, 1000};
};

// Monte-Carlo estimate of E0[(u_hat . x)^2] at the worst-case SNR: samples
// from N(0, sigma2_hat (I + rho_min u0 u0^T)) with a randomly drawn unit u0,
// eigenvector from a fresh w-window, scored against an independent draw.
inline double estimate_post_score_mean(double sigma2_hat, double rho_min, int w, int k,
                                       const DriftMcOptions& opts) {
  if (opts.trials < 1) throw std::invalid_argument("estimate_post_score_mean: trials >= 1");
  SpikedModel m;
  m.k = k;
  m.sigma2 = sigma2_hat;
  m.theta = sigma2_hat * rho_min;
  m.u = random_unit_vector(k, derive_seed(opts.seed, 0));
  double acc = 0.0;
  std::vector<double> x(k);
  for (int trial = 0; trial < opts.trials; ++trial) {
    StreamSpec spec{m, 0L, static_cast<long>(w) + 1, derive_seed(opts.seed, trial + 1)};
    StreamGen gen(spec);
    WindowCovariance wc(k, w);
    for (int i = 0; i < w; ++i) {
      gen.next(x);
      wc.push(x);
    }
    const EigPair& eig = wc.leading(opts.eig);
    gen.next(x);
    const double y = dot(x, eig.vector);
    acc += y * y;
  }
  return acc / opts.trials;
}

// d = midpoint of the admissible interval (average mode), or midpoint of
// sigma2_hat and the simulated post-change score mean (monte_carlo mode).
inline double choose_drift(double sigma2_hat, double rho_min, int w, int k, DriftMode mode,
                           const DriftMcOptions& opts = {}) {
  const DriftBounds b = drift_bounds(sigma2_hat, rho_min, w, k);
  if (mode == DriftMode::kAverage) return 0.5 * (b.lower + b.upper);
  const double e0 = estimate_post_score_mean(sigma2_hat, rho_min, w, k, opts);
  return 0.5 * (sigma2_hat + e0);
}

}  // namespace subspace_cpd
