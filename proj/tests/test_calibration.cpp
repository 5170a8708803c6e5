#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "subspace_cpd/calibration.hpp"

using namespace subspace_cpd;

namespace {

DetectorSpec cusum_spec(int k, double sigma2, double theta) {
  DetectorSpec s;
  s.kind = DetectorKind::kCusum;
  s.model.k = k;
  s.model.sigma2 = sigma2;
  s.model.theta = theta;
  s.model.u = basis_vector(k);
  return s;
}

DetectorSpec sc_spec(int k, double theta, int w) {
  DetectorSpec s;
  s.kind = DetectorKind::kSubspaceCusum;
  s.model.k = k;
  s.model.sigma2 = 1.0;
  s.model.theta = theta;
  s.model.u = basis_vector(k);
  s.window = w;
  s.drift = choose_drift(1.0, theta, w, k, DriftMode::kAverage);
  return s;
}

DetectorSpec eig_spec(int k, double theta, int w) {
  DetectorSpec s;
  s.kind = DetectorKind::kEig;
  s.model.k = k;
  s.model.sigma2 = 1.0;
  s.model.theta = theta;
  s.model.u = basis_vector(k);
  s.window = w;
  return s;
}

}  // namespace

TEST_CASE("direct ARL estimation") {
  SECTION("zero threshold stops almost immediately") {
    const TrialSummary s = estimate_arl_direct(cusum_spec(5, 1.0, 1.0), 0.0, {400, 1, 100000, 2});
    CHECK(s.mean >= 1.0);
    CHECK(s.mean <= 5.0);
    CHECK(s.censored == 0);
  }
  SECTION("ARL grows with the threshold under common random numbers") {
    double prev = 0.0;
    for (double b : {2.0, 4.0, 6.0, 8.0}) {
      const TrialSummary s = estimate_arl_direct(cusum_spec(5, 1.0, 1.0), b, {400, 7, 200000, 2});
      CHECK(s.mean > prev);
      prev = s.mean;
    }
  }
  SECTION("censoring is reported and flagged") {
    const TrialSummary s = estimate_arl_direct(cusum_spec(3, 1.0, 1.0), 1e9, {100, 3, 2000, 2});
    CHECK(s.censored == 100);
    CHECK(s.mean == Catch::Approx(2000.0));
    CHECK(s.bias_warning);
  }
}

TEST_CASE("sprt identity estimation") {
  SECTION("vanishing threshold reduces to single-excursion lengths") {
    const TrialSummary s = estimate_arl_sprt(cusum_spec(5, 1.0, 1.0), 1e-6, {20000, 5, 0, 2});
    CHECK(s.mean < 10.0);
  }
  SECTION("eig detector is rejected") {
    CHECK_THROWS_AS(estimate_arl_sprt(eig_spec(4, 1.0, 8), 50.0, {1000, 1, 0, 2}),
                    std::invalid_argument);
  }
  SECTION("unreachable threshold errors out") {
    CHECK_THROWS_AS(estimate_arl_sprt(cusum_spec(3, 1.0, 1.0), 500.0, {200, 11, 0, 2}),
                    CalibrationError);
  }
  SECTION("agrees with direct estimation for the exact cusum") {
    const DetectorSpec spec = cusum_spec(5, 1.0, 1.0);
    const double b = 15.0;
    const TrialSummary direct = estimate_arl_direct(spec, b, {1500, 42, 200000, 2});
    const TrialSummary sprt = estimate_arl_sprt(spec, b, {400000, 43, 0, 2});
    const double gap = std::abs(direct.mean - sprt.mean);
    const double se = std::hypot(direct.std_err, sprt.std_err);
    INFO("direct " << direct.mean << " +- " << direct.std_err << ", sprt " << sprt.mean << " +- "
                   << sprt.std_err);
    CHECK(gap <= 3.0 * se);
  }
  SECTION("agrees with direct estimation for the subspace cusum") {
    const DetectorSpec spec = sc_spec(3, 2.0, 10);
    const double b = 8.0;
    const TrialSummary direct = estimate_arl_direct(spec, b, {1200, 52, 100000, 2});
    const TrialSummary sprt = estimate_arl_sprt(spec, b, {30000, 53, 0, 2});
    const double gap = std::abs(direct.mean - sprt.mean);
    const double se = std::hypot(direct.std_err, sprt.std_err);
    INFO("direct " << direct.mean << " +- " << direct.std_err << ", sprt " << sprt.mean << " +- "
                   << sprt.std_err);
    CHECK(gap <= 3.0 * se);
  }
}

TEST_CASE("worst-case EDD") {
  SECTION("overwhelming signal detects in a step or two") {
    const TrialSummary s = estimate_worst_edd(cusum_spec(5, 1.0, 100.0), 25.0, {500, 6, 5000, 2});
    CHECK(s.mean >= 1.0);
    CHECK(s.mean <= 2.5);
  }
  SECTION("pre-change-only spec is rejected") {
    DetectorSpec s = cusum_spec(5, 1.0, 1.0);
    s.model.theta = 0.0;
    s.kind = DetectorKind::kEig;
    s.window = 4;
    CHECK_THROWS_AS(estimate_worst_edd(s, 10.0, {200, 1, 0, 2}), std::invalid_argument);
  }
  SECTION("exact cusum beats the subspace variant at matched ARL") {
    const double target = 400.0;
    CalibrationConfig cfg;
    cfg.target_arl = target;
    cfg.trials = 20000;
    cfg.master_seed = 77;
    cfg.tolerance = 0.04;
    cfg.threads = 2;
    const DetectorSpec cus = cusum_spec(3, 1.0, 2.0);
    const DetectorSpec sub = sc_spec(3, 2.0, 10);
    const CalibrationResult rc = calibrate_threshold(cus, cfg);
    const CalibrationResult rs = calibrate_threshold(sub, cfg);
    const TrialSummary ec = estimate_worst_edd(cus, rc.threshold, {3000, 88, 8000, 2});
    const TrialSummary es = estimate_worst_edd(sub, rs.threshold, {3000, 89, 8000, 2});
    INFO("cusum EDD " << ec.mean << ", subspace EDD " << es.mean);
    CHECK(ec.mean <= es.mean + 3.0 * std::hypot(ec.std_err, es.std_err));
  }
}

TEST_CASE("threshold calibration") {
  SECTION("hits the target within the stated tolerance") {
    CalibrationConfig cfg;
    cfg.target_arl = 300.0;
    cfg.trials = 40000;
    cfg.master_seed = 11;
    cfg.tolerance = 0.03;
    cfg.threads = 2;
    const CalibrationResult r = calibrate_threshold(cusum_spec(5, 1.0, 1.0), cfg);
    CHECK(r.threshold > 0.0);
    const double tol = std::max(cfg.tolerance, 2.0 * r.achieved.std_err / cfg.target_arl);
    CHECK(std::abs(r.achieved.mean - cfg.target_arl) / cfg.target_arl <= tol + 1e-12);
  }
  SECTION("calibrated threshold is monotone in the target") {
    CalibrationConfig cfg;
    cfg.trials = 30000;
    cfg.master_seed = 13;
    cfg.tolerance = 0.04;
    cfg.threads = 2;
    double prev = 0.0;
    for (double target : {100.0, 400.0, 1600.0}) {
      cfg.target_arl = target;
      const CalibrationResult r = calibrate_threshold(cusum_spec(5, 1.0, 1.0), cfg);
      CHECK(r.threshold > prev);
      prev = r.threshold;
    }
  }
  SECTION("eig detector calibrates through the direct estimator") {
    CalibrationConfig cfg;
    cfg.target_arl = 250.0;
    cfg.trials = 600;
    cfg.master_seed = 17;
    cfg.tolerance = 0.08;
    cfg.threads = 2;
    const CalibrationResult r = calibrate_threshold(eig_spec(4, 1.0, 8), cfg);
    CHECK(r.threshold > 0.0);
    const TrialSummary confirm =
        estimate_arl_direct(eig_spec(4, 1.0, 8), r.threshold, {1500, 999, 5000, 2});
    CHECK(std::abs(confirm.mean - 250.0) / 250.0 < 0.2);
  }
  SECTION("config validation") {
    CalibrationConfig cfg;
    cfg.target_arl = 100.0;
    cfg.trials = 50;  // under the floor
    CHECK_THROWS_AS(calibrate_threshold(cusum_spec(3, 1.0, 1.0), cfg), std::invalid_argument);
    cfg.trials = 200;
    cfg.horizon_cap = 500;  // below 20x target
    CHECK_THROWS_AS(calibrate_threshold(cusum_spec(3, 1.0, 1.0), cfg), std::invalid_argument);
  }
}

TEST_CASE("results reproduce across thread counts") {
  const DetectorSpec spec = sc_spec(3, 2.0, 6);
  const McOpts one{800, 21, 30000, 1};
  const McOpts two{800, 21, 30000, 2};
  const TrialSummary a = estimate_arl_direct(spec, 6.0, one);
  const TrialSummary b = estimate_arl_direct(spec, 6.0, two);
  CHECK(a.mean == b.mean);
  CHECK(a.std_err == b.std_err);
  const TrialSummary c = estimate_worst_edd(spec, 6.0, one);
  const TrialSummary d = estimate_worst_edd(spec, 6.0, two);
  CHECK(c.mean == d.mean);
  const TrialSummary e = estimate_arl_sprt(spec, 6.0, one);
  const TrialSummary f = estimate_arl_sprt(spec, 6.0, two);
  CHECK(e.mean == f.mean);
}

TEST_CASE("window sweep") {
  SpikedModel truth;
  truth.k = 5;
  truth.sigma2 = 1.0;
  truth.theta = 1.0;
  truth.u = basis_vector(5);

  SECTION("degenerate grids reduce to calibrate plus edd") {
    SweepConfig cfg;
    cfg.model = truth;
    cfg.windows = {12};
    cfg.target_arls = {150.0};
    cfg.calib.trials = 20000;
    cfg.calib.master_seed = 400;
    cfg.calib.tolerance = 0.05;
    cfg.calib.threads = 2;
    cfg.edd_trials = 1500;
    const SweepResult r = sweep_window(cfg);
    REQUIRE(r.rows.size() == 1);
    REQUIRE(r.best_per_arl.size() == 1);
    CHECK(r.best_per_arl[0].window == 12);
    CHECK(r.rows[0].edd_hat > cfg.windows[0]);  // corrected delay includes the look-ahead

    // same seeds, same cell -> identical to running the pieces by hand
    DetectorSpec spec;
    spec.kind = DetectorKind::kSubspaceCusum;
    spec.model = truth;
    spec.window = 12;
    spec.drift = r.rows[0].drift;
    CalibrationConfig c = cfg.calib;
    c.target_arl = 150.0;
    c.master_seed = derive_seed(400, 0);
    const CalibrationResult cal = calibrate_threshold(spec, c);
    CHECK(cal.threshold == r.rows[0].threshold);
  }
  SECTION("envelope never exceeds any row and the optimal window grows with ARL") {
    SweepConfig cfg;
    cfg.model = truth;
    cfg.windows = {12, 40};
    cfg.target_arls = {100.0, 5000.0};
    cfg.calib.trials = 30000;
    cfg.calib.master_seed = 500;
    cfg.calib.tolerance = 0.05;
    cfg.calib.threads = 2;
    cfg.edd_trials = 2000;
    const SweepResult r = sweep_window(cfg);
    REQUIRE(r.rows.size() == 4);
    REQUIRE(r.best_per_arl.size() == 2);
    for (const SweepRow& row : r.rows) {
      const SweepRow* best = nullptr;
      for (const SweepRow& b : r.best_per_arl)
        if (b.target_arl == row.target_arl) best = &b;
      REQUIRE(best != nullptr);
      CHECK(best->edd_hat <= row.edd_hat + 1e-12);
    }
    INFO("best w at ARL 100: " << r.best_per_arl[0].window
                               << ", at ARL 5000: " << r.best_per_arl[1].window);
    CHECK(r.best_per_arl[1].window >= r.best_per_arl[0].window);
  }
}
