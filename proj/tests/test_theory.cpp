#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "subspace_cpd/theory.hpp"

using namespace subspace_cpd;

TEST_CASE("tracy-widom center and scale") {
  SECTION("hand arithmetic at w=2, k=1") {
    const TWConstants c = tw_center_scale(2, 1);
    CHECK(c.mu_wk == Catch::Approx(4.0).margin(1e-12));
    CHECK(c.sigma_wk == Catch::Approx(2.0 * std::cbrt(2.0)).margin(1e-12));
  }
  SECTION("table-I parameters") {
    const TWConstants c = tw_center_scale(200, 10);
    CHECK(c.mu_wk == Catch::Approx(298.218832).margin(1e-4));
    CHECK(c.sigma_wk == Catch::Approx(12.585811).margin(1e-4));
  }
  SECTION("mu/w -> 1 for w >> k") {
    const TWConstants c = tw_center_scale(1000000, 10);
    CHECK(std::abs(c.mu_wk / 1e6 - 1.0) < 0.01);
  }
  SECTION("domain errors") {
    CHECK_THROWS_AS(tw_center_scale(1, 5), std::invalid_argument);
    CHECK_THROWS_AS(tw_center_scale(10, 0), std::invalid_argument);
  }
}

TEST_CASE("embedded TW1 table sanity") {
  SECTION("cdf is nondecreasing with negligible tail mass at the ends") {
    double prev = -1.0;
    for (int i = 0; i < detail::kTw1TableSize; ++i) {
      CHECK(detail::kTw1Cdf[i] >= prev);
      prev = detail::kTw1Cdf[i];
    }
    // measured tail mass of the GOE law at +-6 is ~2e-6/-3e-6
    CHECK(tw1_cdf(-6.0) < 5e-6);
    CHECK(tw1_cdf(6.0) > 1.0 - 5e-6);
  }
  SECTION("implied moments match the two-decimal constants within 0.01") {
    // trapezoid over the interpolated density
    const double h = 1e-3;
    double m = 0.0, m2 = 0.0;
    double prev_cdf = tw1_cdf(-6.0);
    for (double x = -6.0 + h; x <= 6.0; x += h) {
      const double c = tw1_cdf(x);
      const double mid = x - 0.5 * h;
      m += mid * (c - prev_cdf);
      m2 += mid * mid * (c - prev_cdf);
      prev_cdf = c;
    }
    CHECK(std::abs(m - TWConstants::c1) < 0.01);
    CHECK(std::abs(std::sqrt(m2 - m * m) - TWConstants::c2) < 0.01);
  }
  SECTION("median and published percentiles") {
    CHECK(tw_quantile(0.5) == Catch::Approx(-1.27).margin(0.01));
    CHECK(tw_quantile(0.10) == Catch::Approx(0.4501).margin(2e-3));
    CHECK(tw_quantile(0.05) == Catch::Approx(0.9793).margin(2e-3));
    CHECK(tw_quantile(0.01) == Catch::Approx(2.0234).margin(2e-3));
  }
  SECTION("quantile/sf round trip") {
    for (double x = -3.0; x <= 2.0 + 1e-9; x += 1.0)
      CHECK(tw_quantile(tw1_sf(x)) == Catch::Approx(x).margin(1e-3));
  }
  SECTION("b_p strictly decreases as p grows") {
    double prev = 1e300;
    for (double p : {1e-5, 1e-4, 1e-3, 1e-2, 0.1, 0.5, 0.9}) {
      const double b = tw_quantile(p);
      CHECK(b < prev);
      prev = b;
    }
  }
  SECTION("support errors") {
    CHECK_THROWS_AS(tw_quantile(1e-7), std::invalid_argument);
    CHECK_THROWS_AS(tw_quantile(1.0 - 1e-7), std::invalid_argument);
  }
}

TEST_CASE("prop-1 thresholds") {
  SECTION("monotone in the target ARL") {
    double prev = 0.0;
    for (double arl : {2000.0, 5000.0, 20000.0, 50000.0}) {
      const Prop1Threshold t = threshold_prop1(arl, 200, 10);
      CHECK(t.b > prev);
      prev = t.b;
      CHECK_FALSE(t.low_target_warning);
    }
  }
  SECTION("low targets only warn") {
    CHECK(threshold_prop1(150.0, 200, 10).low_target_warning);
  }
}

TEST_CASE("beta coefficient") {
  CHECK(beta_coefficient(10, 200) == Catch::Approx(3.4425).margin(5e-4));
  // k=1, w -> inf limit: 1 + 2/c2^2
  CHECK(beta_coefficient(1, 100000000) == Catch::Approx(1.0 + 2.0 / (1.27 * 1.27)).margin(1e-3));
  SECTION("increases in k at fixed w") {
    double prev = 0.0;
    for (int k = 1; k <= 100; ++k) {
      const double b = beta_coefficient(k, 200);
      CHECK(b > prev);
      prev = b;
    }
  }
}

TEST_CASE("nu function") {
  CHECK(nu_function(0.0) == Catch::Approx(1.0));
  CHECK(nu_function(1.0) == Catch::Approx(0.5487).margin(5e-4));
  CHECK(nu_function(10.0) < 0.05);
  SECTION("strictly decreasing, range (0, 1]") {
    double prev = 1.0 + 1e-12;
    for (double x = 0.0; x <= 12.0; x += 0.25) {
      const double v = nu_function(x);
      CHECK(v > 0.0);
      CHECK(v <= 1.0);
      CHECK(v < prev + 1e-15);
      prev = v;
    }
  }
  CHECK_THROWS_AS(nu_function(-0.5), std::invalid_argument);
}

TEST_CASE("prop-2 ARL approximation and its inverse") {
  SECTION("round trip at table-I scale") {
    for (double arl : {5000.0, 12345.0, 50000.0}) {
      const double b = threshold_prop2(arl, 200, 10);
      CHECK(arl_prop2(b, 200, 10) == Catch::Approx(arl).epsilon(1e-4));
    }
  }
  SECTION("regime guard") {
    const TWConstants c = tw_center_scale(200, 10);
    CHECK_THROWS_AS(arl_prop2(c.sigma_wk * TWConstants::c1 + c.mu_wk - 1.0, 200, 10),
                    std::invalid_argument);
  }
  SECTION("prop-2 sits below prop-1 across table-I targets") {
    for (double arl : {5000.0, 10000.0, 20000.0, 30000.0, 40000.0, 50000.0})
      CHECK(threshold_prop2(arl, 200, 10) < threshold_prop1(arl, 200, 10).b);
  }
}

TEST_CASE("EDD lower bound") {
  SECTION("zero exactly at b' = 0") {
    // b' = 0 <=> b = (1+rho) sigma2 log(1+rho) / rho
    const double rho = 1.0, s2 = 1.0;
    const double b0 = (1.0 + rho) * s2 * std::log1p(rho) / rho;
    CHECK(edd_lower_bound(b0, rho, s2) == Catch::Approx(0.0).margin(1e-12));
    CHECK(edd_lower_bound(b0 * 0.5, rho, s2) == 0.0);
  }
  SECTION("spot value at b = 40") {
    CHECK(edd_lower_bound(40.0, 1.0, 1.0) == Catch::Approx(56.4016).margin(5e-3));
  }
  SECTION("monotone in b, decreasing in rho") {
    double prev = -1.0;
    for (double b = 2.0; b <= 80.0; b += 2.0) {
      const double v = edd_lower_bound(b, 1.0, 1.0);
      CHECK(v >= prev);
      prev = v;
    }
    double prev_rho = 1e300;
    for (double rho : {0.5, 1.0, 2.0, 4.0}) {
      const double v = edd_lower_bound(40.0, rho, 1.0);
      CHECK(v < prev_rho);
      prev_rho = v;
    }
  }
  CHECK_THROWS_AS(edd_lower_bound(10.0, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(edd_lower_bound(10.0, -1.0, 1.0), std::invalid_argument);
}

#include "subspace_cpd/calibration.hpp"

TEST_CASE("standardized noise lambda_max matches the TW moment constants") {
  // w=500, k=50: empirical mean/sd of (lambda_max - mu)/sigma over 2000
  // pure-noise windows against c1, c2 within 0.1
  const int k = 50, w = 500, trials = 2000;
  const TWConstants c = tw_center_scale(w, k);
  SpikedModel noise{k, 1.0, 0.0, basis_vector(k)};
  double s = 0.0, s2 = 0.0;
  std::vector<double> x(k);
  for (int trial = 0; trial < trials; ++trial) {
    StreamGen gen(StreamSpec{noise, std::nullopt, w, derive_seed(321321, trial)});
    WindowCovariance wc(k, w);
    while (!gen.done()) {
      gen.next(x);
      wc.push(x);
    }
    const double z = (wc.leading().value - c.mu_wk) / c.sigma_wk;
    s += z;
    s2 += z * z;
  }
  const double mean = s / trials;
  const double sd = std::sqrt(s2 / trials - mean * mean);
  INFO("standardized mean " << mean << ", sd " << sd);
  CHECK(std::abs(mean - TWConstants::c1) < 0.1);
  CHECK(std::abs(sd - TWConstants::c2) < 0.1);
}

TEST_CASE("windowed lambda_max decorrelates at a rate between 1/w and beta/w") {
  // The closed-form beta is derived from an upper bound on E[Z_t Z_{t+d}], so
  // it over-estimates the actual local decay rate; the naive shared-fraction
  // rate 1/w under-estimates it. Measured correlations sit in between.
  const int k = 10, w = 200, streams = 24, span = 400;
  const double beta = beta_coefficient(k, w);
  SpikedModel noise{k, 1.0, 0.0, basis_vector(k)};
  std::vector<std::vector<double>> z(streams);
  std::vector<double> x(k);
  for (int m = 0; m < streams; ++m) {
    StreamGen gen(StreamSpec{noise, std::nullopt, w + span, derive_seed(424242, m)});
    WindowCovariance wc(k, w);
    for (int t = 0; t < w + span; ++t) {
      gen.next(x);
      wc.push(x);
      if (t >= w) z[m].push_back(wc.leading().value);
    }
  }
  double prev_corr = 1.0;
  for (int d : {1, 2, 5, 10}) {
    double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    long n = 0;
    for (int m = 0; m < streams; ++m)
      for (int t = 0; t + d < span; ++t) {
        const double a = z[m][t], b = z[m][t + d];
        sa += a;
        sb += b;
        saa += a * a;
        sbb += b * b;
        sab += a * b;
        ++n;
      }
    const double corr = (sab / n - sa / n * sb / n) /
                        std::sqrt((saa / n - sa / n * sa / n) * (sbb / n - sb / n * sb / n));
    INFO("lag " << d << ": corr " << corr);
    CHECK(corr < prev_corr);
    const double rate = (1.0 - corr) * w / d;
    CHECK(rate >= 1.0);
    CHECK(rate <= beta);
    prev_corr = corr;
  }
}
