#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "subspace_cpd/tw1_table.hpp"

namespace subspace_cpd {

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Tracy-Widom centering/scaling for the un-normalized k-dim sample covariance
// over w observations, plus the two-decimal moment constants used throughout
// the ARL approximations.
struct TWConstants {
  double mu_wk = 0.0;
  double sigma_wk = 0.0;
  static constexpr double c1 = -1.21;  // E[W1]
  static constexpr double c2 = 1.27;   // sqrt(Var(W1))
};

inline TWConstants tw_center_scale(int w, int k) {
  if (w < 2 || k < 1) throw std::invalid_argument("tw_center_scale: w >= 2, k >= 1");
  const double sw = std::sqrt(static_cast<double>(w) - 1.0);
  const double sk = std::sqrt(static_cast<double>(k));
  TWConstants c;
  c.mu_wk = (sw + sk) * (sw + sk);
  c.sigma_wk = (sw + sk) * std::cbrt(1.0 / sw + 1.0 / sk);
  return c;
}

namespace detail {

// Monotone cubic (Fritsch-Carlson) interpolant of the embedded TW1 CDF table.
class Tw1Interp {
 public:
  Tw1Interp() {
    constexpr int n = kTw1TableSize;
    constexpr double h = kTw1XStep;
    std::array<double, n - 1> sec{};
    for (int i = 0; i < n - 1; ++i) sec[i] = (kTw1Cdf[i + 1] - kTw1Cdf[i]) / h;
    slope_[0] = sec[0];
    slope_[n - 1] = sec[n - 2];
    for (int i = 1; i < n - 1; ++i) {
      if (sec[i - 1] * sec[i] <= 0.0)
        slope_[i] = 0.0;
      else
        slope_[i] = 2.0 * sec[i - 1] * sec[i] / (sec[i - 1] + sec[i]);
    }
    // clamp endpoint slopes for monotonicity
    for (int e : {0, kTw1TableSize - 1}) {
      const double s = e == 0 ? sec[0] : sec[n - 2];
      if (slope_[e] * s <= 0.0) slope_[e] = 0.0;
      if (std::abs(slope_[e]) > 3.0 * std::abs(s)) slope_[e] = 3.0 * s;
    }
  }

  double cdf(double x) const {
    if (x <= kTw1XMin) return kTw1Cdf[0];
    const double xmax = kTw1XMin + (kTw1TableSize - 1) * kTw1XStep;
    if (x >= xmax) return kTw1Cdf[kTw1TableSize - 1];
    const double u = (x - kTw1XMin) / kTw1XStep;
    int i = static_cast<int>(u);
    if (i > kTw1TableSize - 2) i = kTw1TableSize - 2;
    const double t = u - i;
    const double h = kTw1XStep;
    const double y0 = kTw1Cdf[i], y1 = kTw1Cdf[i + 1];
    const double m0 = slope_[i] * h, m1 = slope_[i + 1] * h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * m0 +
           (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * m1;
  }

  // x with cdf(x) = q, bisection over the table span (clamped at the edges)
  double quantile(double q) const {
    const double xmax = kTw1XMin + (kTw1TableSize - 1) * kTw1XStep;
    if (q <= kTw1Cdf[0]) return kTw1XMin;
    if (q >= kTw1Cdf[kTw1TableSize - 1]) return xmax;
    double lo = kTw1XMin, hi = xmax;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (cdf(mid) < q)
        lo = mid;
      else
        hi = mid;
    }
    return 0.5 * (lo + hi);
  }

 private:
  std::array<double, kTw1TableSize> slope_{};
};

inline const Tw1Interp& tw1_interp() {
  static const Tw1Interp table;
  return table;
}

}  // namespace detail

inline double tw1_cdf(double x) { return detail::tw1_interp().cdf(x); }
inline double tw1_sf(double x) { return 1.0 - tw1_cdf(x); }

// p-upper-percentage point b_p with P(W1 >= b_p) = p. The table spans
// [-6, 6]; targets beyond its resolved tail mass clamp to the edge.
inline double tw_quantile(double p) {
  if (!(p > 1e-6 && p < 1.0 - 1e-6))
    throw std::invalid_argument("tw_quantile: p outside table support (1e-6, 1-1e-6)");
  return detail::tw1_interp().quantile(1.0 - p);
}

struct Prop1Threshold {
  double b = 0.0;
  double b_over_w = 0.0;
  bool low_target_warning = false;  // target_arl <= w: 1/p is only a lower bound there
};

// Prop.-1 style threshold ignoring temporal correlation: b = sigma b_p + mu
// with p = 1/ARL.
inline Prop1Threshold threshold_prop1(double target_arl, int w, int k) {
  if (!(target_arl > 1.0)) throw std::invalid_argument("threshold_prop1: target_arl > 1");
  const TWConstants c = tw_center_scale(w, k);
  Prop1Threshold out;
  out.low_target_warning = target_arl <= static_cast<double>(w);
  out.b = c.sigma_wk * tw_quantile(1.0 / target_arl) + c.mu_wk;
  out.b_over_w = out.b / w;
  return out;
}

// local decorrelation rate of the windowed lambda_max sequence
inline double beta_coefficient(int k, int w) {
  if (k < 1 || w < 1) throw std::invalid_argument("beta_coefficient: k, w >= 1");
  const double c1 = TWConstants::c1, c2 = TWConstants::c2;
  const double k13 = std::cbrt(static_cast<double>(k));
  const double k16 = std::sqrt(k13);
  const double sw = std::sqrt(static_cast<double>(w));
  return 1.0 + (2.0 * k13 + 3.0 * k16 * c1 / sw + c1 * c1 / w) / (c2 * c2);
}

// Overshoot correction nu(x) ~ (2/x)[Phi(x/2) - 1/2] / [ (x/2) Phi(x/2) + phi(x/2) ],
// continuous at 0 with nu(0) = 1, decreasing, in (0, 1].
inline double nu_function(double x) {
  if (x < 0.0) throw std::invalid_argument("nu_function: x >= 0");
  if (x < 1e-12) return 1.0;
  const double half = 0.5 * x;
  // Phi(x/2) - 1/2 via erf to avoid cancellation near 0
  const double num = (2.0 / x) * 0.5 * std::erf(half / std::numbers::sqrt2);
  const double den = half * normal_cdf(half) + normal_pdf(half);
  return num / den;
}

// Prop.-2 ARL approximation with temporal correlation:
//   ARL = [ beta b' phi(b') nu(b' sqrt(2 beta)) ]^{-1},
//   b' = (b - (sigma c1 + mu)) / (sigma c2).
inline double arl_prop2(double b, int w, int k) {
  const TWConstants c = tw_center_scale(w, k);
  const double bp = (b - (c.sigma_wk * TWConstants::c1 + c.mu_wk)) / (c.sigma_wk * TWConstants::c2);
  if (!(bp > 0.0))
    throw std::invalid_argument("arl_prop2: threshold below the approximation regime (b' <= 0)");
  const double beta = beta_coefficient(k, w);
  return 1.0 / (beta * bp * normal_pdf(bp) * nu_function(bp * std::sqrt(2.0 * beta)));
}

// inverse of arl_prop2 by bisection on b in [mu, mu + 20 sigma]
inline double threshold_prop2(double target_arl, int w, int k, double rel_tol = 1e-6) {
  const TWConstants c = tw_center_scale(w, k);
  double lo = c.mu_wk, hi = c.mu_wk + 20.0 * c.sigma_wk;
  if (arl_prop2(lo, w, k) > target_arl)
    throw std::invalid_argument("threshold_prop2: target_arl below the approximation range");
  if (arl_prop2(hi, w, k) < target_arl)
    throw std::invalid_argument("threshold_prop2: target_arl above the bracket");
  while (hi - lo > rel_tol * std::max(1.0, std::abs(lo))) {
    const double mid = 0.5 * (lo + hi);
    if (arl_prop2(mid, w, k) < target_arl)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Prop.-3 lower bound on the post-change mean stop time of the eigenvalue
// procedure: 2 (b' + e^{-b'} - 1) / (rho - log(1+rho)) with
// b' = [b rho - (1+rho) sigma2 log(1+rho)] / (2 sigma2 (1+rho)); 0 once b' <= 0.
inline double edd_lower_bound(double b, double rho, double sigma2) {
  if (!(rho > 0.0)) throw std::invalid_argument("edd_lower_bound: rho > 0");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("edd_lower_bound: sigma2 > 0");
  const double bp =
      (b * rho - (1.0 + rho) * sigma2 * std::log1p(rho)) / (2.0 * sigma2 * (1.0 + rho));
  if (bp <= 0.0) return 0.0;
  return 2.0 * (bp + std::exp(-bp) - 1.0) / (rho - std::log1p(rho));
}

}  // namespace subspace_cpd
