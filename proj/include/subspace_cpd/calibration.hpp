#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "subspace_cpd/detectors.hpp"
#include "subspace_cpd/models.hpp"
#include "subspace_cpd/rng.hpp"
#include "subspace_cpd/theory.hpp"

namespace subspace_cpd {

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DetectorKind { kCusum, kEig, kSubspaceCusum };

inline const char* to_string(DetectorKind k) {
  switch (k) {
    case DetectorKind::kCusum: return "cusum";
    case DetectorKind::kEig: return "eig";
    case DetectorKind::kSubspaceCusum: return "subspace_cusum";
  }
  return "?";
}

// Everything needed to build a detector at a given threshold and to generate
// its pre-/post-change streams: `model` is the post-change truth (its k and
// sigma2 define the nominal regime).
struct DetectorSpec {
  DetectorKind kind = DetectorKind::kCusum;
  SpikedModel model;
  int window = 0;      // eig / subspace_cusum
  double drift = 0.0;  // subspace_cusum
  EigOptions eig{};
  int warm_power_iters = 0;

  void validate() const {
    model.validate();
    if (kind != DetectorKind::kCusum && window < 1)
      throw std::invalid_argument("DetectorSpec: window >= 1");
    if (kind == DetectorKind::kCusum && !(model.theta > 0.0))
      throw std::invalid_argument("DetectorSpec: exact CUSUM needs theta > 0");
    if (kind == DetectorKind::kSubspaceCusum && !(drift > 0.0))
      throw std::invalid_argument("DetectorSpec: subspace CUSUM needs drift > 0");
  }
};

struct TrialSummary {
  double mean = 0.0;
  double std_err = 0.0;
  int censored = 0;
  int trials = 0;
  bool bias_warning = false;  // more than 1% of trials censored
};

struct McOpts {
  int trials = 1000;
  std::uint64_t seed = 1;
  long cap = 0;  // censoring horizon; <= 0 means "pick a generous default"
  int threads = 0;  // 0 = hardware concurrency
};

namespace detail {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs work(i) for i in [0, trials) across threads. Each worker writes only
// to its own output slots, and the reduction is done by the caller in index
// order, so results are identical for any thread count.
template <class Work>
inline void parallel_trials(int trials, int threads, Work&& work) {
  threads = resolve_threads(threads);
  if (threads <= 1 || trials <= 1) {
    for (int i = 0; i < trials; ++i) work(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex err_mu;
  auto body = [&] {
    int i;
    while ((i = next.fetch_add(1)) < trials) {
      try {
        work(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline TrialSummary summarize(const std::vector<double>& values, int censored) {
  TrialSummary s;
  s.trials = static_cast<int>(values.size());
  s.censored = censored;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / s.trials;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  const double sd = s.trials > 1 ? std::sqrt(ss / (s.trials - 1)) : 0.0;
  s.std_err = sd / std::sqrt(static_cast<double>(s.trials));
  s.bias_warning = censored * 100 > s.trials;
  return s;
}

// one detector run over a stream; returns the reported stop time or nullopt
// when censored at `cap` arrivals (subspace CUSUM reports the corrected time)
inline std::optional<long> run_detector_trial(const DetectorSpec& spec, double b,
                                              const StreamSpec& stream, long cap) {
  StreamGen gen(stream);
  std::vector<double> x(spec.model.k);
  switch (spec.kind) {
    case DetectorKind::kCusum: {
      CusumDetector det(spec.model, b);
      while (!det.stopped() && det.time() < cap) {
        gen.next(x);
        det.step(x);
      }
      return det.stopped();
    }
    case DetectorKind::kEig: {
      EigDetector det({spec.model.k, spec.window, b, spec.eig, spec.warm_power_iters});
      while (!det.stopped() && det.time() < cap) {
        gen.next(x);
        det.step(x);
      }
      return det.stopped();
    }
    case DetectorKind::kSubspaceCusum: {
      SubspaceCusumDetector det(
          {spec.model.k, spec.window, spec.drift, b, spec.eig, spec.warm_power_iters});
      while (!det.stopped() && det.arrivals() < cap) {
        gen.next(x);
        det.step(x);
      }
      return det.stopped();
    }
  }
  return std::nullopt;
}

inline long default_cap(long cap, double scale) {
  return cap > 0 ? cap : static_cast<long>(std::max(1000.0, 20.0 * scale));
}

}  // namespace detail

// pre-change stream for the spec's nominal regime (theta plays no role)
inline StreamSpec nominal_stream(const DetectorSpec& spec, long n, std::uint64_t seed) {
  SpikedModel noise;
  noise.k = spec.model.k;
  noise.sigma2 = spec.model.sigma2;
  noise.theta = 0.0;
  noise.u = basis_vector(spec.model.k);
  return StreamSpec{noise, std::nullopt, n, seed};
}

// Direct Monte-Carlo ARL: mean stop time over independent pre-change-only
// streams. Censored trials contribute the cap value, which biases the mean
// downward; that is flagged once more than 1% of trials censor.
inline TrialSummary estimate_arl_direct(const DetectorSpec& spec, double b, const McOpts& opts) {
  spec.validate();
  if (opts.trials < 1) throw std::invalid_argument("estimate_arl_direct: trials >= 1");
  const long cap = detail::default_cap(opts.cap, std::abs(b) + 1000.0);
  std::vector<double> values(opts.trials);
  std::vector<char> censored(opts.trials, 0);
  detail::parallel_trials(opts.trials, opts.threads, [&](int i) {
    const StreamSpec stream = nominal_stream(spec, cap, derive_seed(opts.seed, i));
    const auto stop = detail::run_detector_trial(spec, b, stream, cap);
    values[i] = stop ? static_cast<double>(*stop) : static_cast<double>(cap);
    censored[i] = stop ? 0 : 1;
  });
  int ncens = 0;
  for (char c : censored) ncens += c;
  return detail::summarize(values, ncens);
}

// Worst-case EDD: every stream is post-change from the first sample (tau = 0).
// Exact CUSUM and the eigenvalue procedure report the raw stop time; the
// subspace CUSUM reports the corrected one (its look-ahead consumes
// post-change data, consistent with tau = 0).
inline TrialSummary estimate_worst_edd(const DetectorSpec& spec, double b, const McOpts& opts) {
  spec.validate();
  if (!(spec.model.theta > 0.0))
    throw std::invalid_argument("estimate_worst_edd: post-change model must have theta > 0");
  if (opts.trials < 1) throw std::invalid_argument("estimate_worst_edd: trials >= 1");
  const long cap = detail::default_cap(opts.cap, std::abs(b) + 1000.0);
  std::vector<double> values(opts.trials);
  std::vector<char> censored(opts.trials, 0);
  detail::parallel_trials(opts.trials, opts.threads, [&](int i) {
    const StreamSpec stream{spec.model, 0L, cap, derive_seed(opts.seed, i)};
    const auto stop = detail::run_detector_trial(spec, b, stream, cap);
    values[i] = stop ? static_cast<double>(*stop) : static_cast<double>(cap);
    censored[i] = stop ? 0 : 1;
  });
  int ncens = 0;
  for (char c : censored) ncens += c;
  return detail::summarize(values, ncens);
}

// ARL through the CUSUM-SPRT identity: E_inf[T_C] = E_inf[T_SPRT] / P(upper
// exit), with T_SPRT = inf{t : S_t not in [0, b)} for the unreflected walk
// started at 0. Only the reflected-statistic family qualifies. For the exact
// CUSUM the walk increment depends on the data only through (u.x)^2 ~
// sigma2 * chi^2_1, so excursions are simulated on that scalar sufficient
// statistic; the subspace variant runs the full look-ahead machinery and adds
// w to the final ARL to account for the delayed data.
inline TrialSummary estimate_arl_sprt(const DetectorSpec& spec, double b, const McOpts& opts) {
  spec.validate();
  if (spec.kind == DetectorKind::kEig)
    throw std::invalid_argument("estimate_arl_sprt: identity applies to the CUSUM family only");
  if (opts.trials < 1) throw std::invalid_argument("estimate_arl_sprt: trials >= 1");
  if (!(b > 0.0)) throw std::invalid_argument("estimate_arl_sprt: b > 0");
  const long cap = detail::default_cap(opts.cap, std::abs(b) * 1000.0);

  std::vector<double> lengths(opts.trials);
  std::vector<char> upper(opts.trials, 0);

  if (spec.kind == DetectorKind::kCusum) {
    const double d = cusum_drift(spec.model);
    const double s2 = spec.model.sigma2;
    detail::parallel_trials(opts.trials, opts.threads, [&](int i) {
      GaussianRng rng(derive_seed(opts.seed, i));
      double s = 0.0;
      long t = 0;
      for (;;) {
        const double z = rng.normal();
        s += s2 * z * z - d;
        ++t;
        if (s >= b || s < 0.0 || t >= cap) break;
      }
      if (t >= cap && s < b && s >= 0.0)
        throw CalibrationError("estimate_arl_sprt: excursion exceeded the horizon cap");
      lengths[i] = static_cast<double>(t);
      upper[i] = s >= b ? 1 : 0;
    });
  } else {
    detail::parallel_trials(opts.trials, opts.threads, [&](int i) {
      const StreamSpec stream = nominal_stream(spec, cap, derive_seed(opts.seed, i));
      StreamGen gen(stream);
      WindowCovariance wc(spec.model.k, spec.window);
      std::vector<double> x(spec.model.k);
      std::vector<double> held(static_cast<std::size_t>(spec.window + 1) * spec.model.k);
      const int w = spec.window;
      double s = 0.0;
      long scored = 0, arrivals = 0;
      EigOptions warm_opts{spec.eig.tol, spec.warm_power_iters};
      for (;;) {
        gen.next(x);
        ++arrivals;
        std::copy(x.begin(), x.end(),
                  held.begin() + static_cast<std::size_t>(arrivals % (w + 1)) * spec.model.k);
        wc.push(x);
        if (arrivals <= w) continue;
        scored = arrivals - w;
        const double* xt = held.data() + static_cast<std::size_t>(scored % (w + 1)) * spec.model.k;
        const EigPair& eig = wc.leading(warm_opts);
        const double y = dot(std::span<const double>(xt, spec.model.k), eig.vector);
        s += y * y - spec.drift;
        if (s >= b || s < 0.0 || scored >= cap) break;
      }
      if (scored >= cap && s < b && s >= 0.0)
        throw CalibrationError("estimate_arl_sprt: excursion exceeded the horizon cap");
      lengths[i] = static_cast<double>(scored);
      upper[i] = s >= b ? 1 : 0;
    });
  }

  const int n = opts.trials;
  double tbar = 0.0, p = 0.0;
  for (int i = 0; i < n; ++i) {
    tbar += lengths[i];
    p += upper[i];
  }
  tbar /= n;
  p /= n;
  if (p == 0.0) throw CalibrationError("estimate_arl_sprt: threshold too high for trial budget");

  double vt = 0.0, cov = 0.0;
  for (int i = 0; i < n; ++i) {
    vt += (lengths[i] - tbar) * (lengths[i] - tbar);
    cov += (lengths[i] - tbar) * (upper[i] - p);
  }
  vt /= std::max(1, n - 1);
  cov /= std::max(1, n - 1);
  const double vp = p * (1.0 - p);

  TrialSummary s;
  s.trials = n;
  s.censored = 0;
  s.mean = tbar / p;
  const double rel_var =
      vt / (tbar * tbar) + vp / (p * p) - 2.0 * cov / (tbar * p);
  s.std_err = s.mean * std::sqrt(std::max(0.0, rel_var) / n);
  if (spec.kind == DetectorKind::kSubspaceCusum) s.mean += spec.window;
  return s;
}

enum class ArlEstimator { kAuto, kDirect, kSprt };

struct CalibrationConfig {
  double target_arl = 0.0;
  int trials = 1000;
  std::uint64_t master_seed = 1;
  long horizon_cap = 0;     // 0 -> 20 * target_arl
  double tolerance = 0.05;  // relative ARL tolerance for the search
  int threads = 0;
  ArlEstimator estimator = ArlEstimator::kAuto;
  double bracket_lo = 0.0;  // 0 -> detector-specific defaults
  double bracket_hi = 0.0;

  void validate() const {
    if (!(target_arl > 0.0)) throw std::invalid_argument("CalibrationConfig: target_arl > 0");
    if (trials < 100) throw std::invalid_argument("CalibrationConfig: trials >= 100");
    if (horizon_cap != 0 && horizon_cap < static_cast<long>(20.0 * target_arl))
      throw std::invalid_argument("CalibrationConfig: horizon_cap >= 20 * target_arl");
  }
};

struct CalibrationResult {
  double threshold = 0.0;
  TrialSummary achieved;
  int evaluations = 0;
};

// Bisection on b against a fixed-seed Monte-Carlo ARL estimate (common random
// numbers across evaluations, so the response is a monotone step function of
// b). Terminates once |arl_hat - target| / target <= max(tolerance, 2 se /
// target). The bracket is grown geometrically when the initial guesses do not
// straddle the target; 60 failed expansions abort.
inline CalibrationResult calibrate_threshold(const DetectorSpec& spec, const CalibrationConfig& cfg) {
  spec.validate();
  cfg.validate();
  const long cap =
      cfg.horizon_cap > 0 ? cfg.horizon_cap : static_cast<long>(20.0 * cfg.target_arl);

  const bool use_sprt = cfg.estimator == ArlEstimator::kSprt ||
                        (cfg.estimator == ArlEstimator::kAuto && spec.kind != DetectorKind::kEig);
  McOpts mc{cfg.trials, cfg.master_seed, cap, cfg.threads};
  int evals = 0;
  auto arl_at = [&](double b) {
    ++evals;
    if (!use_sprt) return estimate_arl_direct(spec, b, mc);
    try {
      return estimate_arl_sprt(spec, b, mc);
    } catch (const CalibrationError&) {
      // no upper exits in the whole budget: the ARL at this threshold is far
      // beyond the target, which is all the search needs to know
      TrialSummary s;
      s.trials = cfg.trials;
      s.mean = std::numeric_limits<double>::infinity();
      return s;
    }
  };

  // initial bracket
  double lo = cfg.bracket_lo, hi = cfg.bracket_hi;
  if (hi <= lo) {
    if (spec.kind == DetectorKind::kEig) {
      const TWConstants tc = tw_center_scale(spec.window, spec.model.k);
      lo = spec.model.sigma2 * tc.mu_wk;
      hi = spec.model.sigma2 *
           threshold_prop2(std::max(cfg.target_arl, 10.0 * spec.window), spec.window, spec.model.k);
    } else {
      lo = 1e-9;
      hi = std::max(1.0, 4.0 * spec.model.sigma2 * std::log(cfg.target_arl));
    }
  }

  TrialSummary at_hi;
  int expansions = 0;
  for (;;) {
    at_hi = arl_at(hi);
    if (at_hi.mean >= cfg.target_arl) break;
    if (++expansions > 60)
      throw CalibrationError("calibrate_threshold: no upper bracket after 60 expansions");
    lo = hi;
    hi = spec.kind == DetectorKind::kEig
             ? hi + spec.model.sigma2 * tw_center_scale(spec.window, spec.model.k).sigma_wk *
                        (1 << std::min(expansions, 8))
             : hi * 2.0;
  }

  double best_b = hi;
  TrialSummary best = at_hi;
  for (int it = 0; it < 200; ++it) {
    const double err = std::abs(best.mean - cfg.target_arl) / cfg.target_arl;
    const double tol = std::max(cfg.tolerance, 2.0 * best.std_err / cfg.target_arl);
    if (err <= tol) break;
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;  // bracket exhausted at floating resolution
    const TrialSummary s = arl_at(mid);
    best_b = mid;
    best = s;
    if (s.mean < cfg.target_arl)
      lo = mid;
    else
      hi = mid;
  }

  if (!std::isfinite(best.mean))
    throw CalibrationError("calibrate_threshold: search never reached a measurable ARL");
  CalibrationResult out;
  out.threshold = best_b;
  out.achieved = best;
  out.evaluations = evals;
  return out;
}

struct SweepRow {
  int window = 0;
  double target_arl = 0.0;
  double threshold = 0.0;
  double arl_hat = 0.0, arl_se = 0.0;
  double edd_hat = 0.0, edd_se = 0.0;
  int censored = 0;
  double drift = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepRow> best_per_arl;  // minimal-EDD row for each target ARL
};

struct SweepConfig {
  SpikedModel model;            // post-change truth
  double rho_min = 0.0;         // 0 -> use model.rho()
  std::vector<int> windows;
  std::vector<double> target_arls;
  CalibrationConfig calib;      // target_arl field is overwritten per cell
  int edd_trials = 0;           // 0 -> calib.trials
};

// Window sweep for the subspace CUSUM: calibrate then measure worst-case EDD
// for each (w, ARL) pair. Windows too small for the closed-form drift
// interval fall back to the Monte-Carlo drift estimate.
inline SweepResult sweep_window(const SweepConfig& cfg) {
  if (cfg.windows.empty() || cfg.target_arls.empty())
    throw std::invalid_argument("sweep_window: nonempty grids required");
  cfg.model.validate();
  const double rho_min = cfg.rho_min > 0.0 ? cfg.rho_min : cfg.model.rho();

  SweepResult out;
  int cell = 0;
  for (int w : cfg.windows) {
    double drift;
    const double w_min = (cfg.model.k - 1) * (1.0 + rho_min) / (rho_min * rho_min);
    DriftMcOptions dopts;
    dopts.seed = derive_seed(cfg.calib.master_seed, 900000 + w);
    if (static_cast<double>(w) > w_min)
      drift = choose_drift(cfg.model.sigma2, rho_min, w, cfg.model.k, DriftMode::kAverage);
    else {
      const double e0 =
          estimate_post_score_mean(cfg.model.sigma2, rho_min, w, cfg.model.k, dopts);
      drift = 0.5 * (cfg.model.sigma2 + e0);
      if (!(drift > cfg.model.sigma2))
        drift = cfg.model.sigma2 * 1.05;  // barely-detectable corner; keep the walk negative
    }

    DetectorSpec spec;
    spec.kind = DetectorKind::kSubspaceCusum;
    spec.model = cfg.model;
    spec.window = w;
    spec.drift = drift;

    for (double arl : cfg.target_arls) {
      CalibrationConfig c = cfg.calib;
      c.target_arl = arl;
      c.master_seed = derive_seed(cfg.calib.master_seed, 2 * cell);
      const CalibrationResult cal = calibrate_threshold(spec, c);
      McOpts mc{cfg.edd_trials > 0 ? cfg.edd_trials : c.trials,
                derive_seed(cfg.calib.master_seed, 2 * cell + 1),
                c.horizon_cap > 0 ? c.horizon_cap : static_cast<long>(20.0 * arl), c.threads};
      const TrialSummary edd = estimate_worst_edd(spec, cal.threshold, mc);
      SweepRow row;
      row.window = w;
      row.target_arl = arl;
      row.threshold = cal.threshold;
      row.arl_hat = cal.achieved.mean;
      row.arl_se = cal.achieved.std_err;
      row.edd_hat = edd.mean;
      row.edd_se = edd.std_err;
      row.censored = edd.censored;
      row.drift = drift;
      out.rows.push_back(row);
      ++cell;
    }
  }

  for (std::size_t a = 0; a < cfg.target_arls.size(); ++a) {
    const SweepRow* best = nullptr;
    for (const SweepRow& r : out.rows)
      if (r.target_arl == cfg.target_arls[a] && (!best || r.edd_hat < best->edd_hat)) best = &r;
    if (best) out.best_per_arl.push_back(*best);
  }
  return out;
}

}  // namespace subspace_cpd
