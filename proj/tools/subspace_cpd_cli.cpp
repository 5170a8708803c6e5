// Command-line front end: experiment configuration, execution, and CSV/JSON
// emission. Every output embeds the resolved config so a printed run can be
// replayed bit-for-bit.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "subspace_cpd/calibration.hpp"
#include "subspace_cpd/detectors.hpp"
#include "subspace_cpd/models.hpp"
#include "subspace_cpd/theory.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

using json = nlohmann::json;
using namespace subspace_cpd;

std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::pair<std::string, std::string>> config;  // echoed verbatim

  void add_config(const std::string& key, const std::string& val) { config.emplace_back(key, val); }
  void add_config(const std::string& key, double val) { config.emplace_back(key, fmt9(val)); }
  void add_config(const std::string& key, long val) { config.emplace_back(key, std::to_string(val)); }
  void add_config(const std::string& key, int val) { config.emplace_back(key, std::to_string(val)); }
  void add_config(const std::string& key, std::uint64_t val) {
    config.emplace_back(key, std::to_string(val));
  }
};

void write_table(const Table& t, const std::string& path, const std::string& format,
                 const std::string& command) {
  std::ostringstream os;
  if (format == "json") {
    json j;
    j["tool"] = "subspace-cpd";
    j["version"] = kVersion;
    j["command"] = command;
    json cfg = json::object();
    for (const auto& [k, v] : t.config) cfg[k] = v;
    j["config"] = cfg;
    j["columns"] = t.columns;
    json rows = json::array();
    for (const auto& r : t.rows) {
      json row = json::object();
      for (std::size_t i = 0; i < t.columns.size(); ++i) row[t.columns[i]] = r[i];
      rows.push_back(row);
    }
    j["rows"] = rows;
    os << j.dump(2) << "\n";
  } else {
    os << "# subspace-cpd v" << kVersion << " " << command << "\n";
    os << "# config:";
    for (const auto& [k, v] : t.config) os << " " << k << "=" << v;
    os << "\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i)
      os << (i ? "," : "") << t.columns[i];
    os << "\n";
    for (const auto& r : t.rows) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << "\n";
    }
  }
  if (path.empty()) {
    std::cout << os.str();
  } else {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file: " + path);
    f << os.str();
  }
}

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("SUBSPACE_CPD_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 0;  // library default: hardware concurrency
}

std::vector<double> parse_direction(const std::string& spec, int k, std::uint64_t seed,
                                    bool strict, std::string* warn) {
  if (spec == "e1") return basis_vector(k);
  if (spec == "random") return random_unit_vector(k, derive_seed(seed, 0xD17EC7u));
  std::vector<double> v;
  std::stringstream ss(spec);
  std::string cell;
  while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
  if (static_cast<int>(v.size()) != k)
    throw std::invalid_argument("direction has " + std::to_string(v.size()) +
                                " components, expected k=" + std::to_string(k));
  const double n = norm2(v);
  if (n < 1e-12) throw std::invalid_argument("direction must be nonzero");
  if (std::abs(n - 1.0) > 1e-10) {
    if (strict) throw std::invalid_argument("direction is not unit norm (strict mode)");
    if (warn) *warn = "normalized non-unit direction (|u| = " + fmt9(n) + ")";
    for (double& x : v) x /= n;
  }
  return v;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

// "1,2,5" or "1:50" (inclusive range), mixable: "1:4,10,20"
std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto colon = cell.find(':');
    if (colon == std::string::npos) {
      out.push_back(std::stoi(cell));
    } else {
      const int lo = std::stoi(cell.substr(0, colon));
      const int hi = std::stoi(cell.substr(colon + 1));
      if (hi < lo) throw std::invalid_argument("descending range " + cell);
      for (int v = lo; v <= hi; ++v) out.push_back(v);
    }
  }
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

// shared detector/model flags
struct DetectorFlags {
  std::string detector = "cusum";
  int k = 5;
  double sigma2 = 1.0;
  double theta = -1.0;
  double rho = -1.0;
  std::string u = "e1";
  int w = 20;
  double drift = -1.0;
  std::string drift_mode = "average";
  double rho_min = -1.0;
  int mc_drift_trials = 20000;

  void add_to(CLI::App* cmd, bool with_kind = true) {
    if (with_kind)
      cmd->add_option("--detector", detector, "cusum | eig | subspace")
          ->check(CLI::IsMember({"cusum", "eig", "subspace", "subspace_cusum"}));
    cmd->add_option("--k", k, "observation dimension");
    cmd->add_option("--sigma2", sigma2, "noise variance");
    cmd->add_option("--theta", theta, "post-change signal strength");
    cmd->add_option("--rho", rho, "post-change SNR theta/sigma2 (alternative to --theta)");
    cmd->add_option("--u", u, "spike direction: e1 | random | comma list");
    cmd->add_option("--w", w, "sliding window length");
    cmd->add_option("--drift", drift, "subspace-cusum drift d (overrides --drift-mode)");
    cmd->add_option("--drift-mode", drift_mode, "average | mc")
        ->check(CLI::IsMember({"average", "mc"}));
    cmd->add_option("--rho-min", rho_min, "worst-case SNR for the drift choice (default: rho)");
    cmd->add_option("--mc-drift-trials", mc_drift_trials, "trials for --drift-mode mc");
  }

  DetectorSpec build(std::uint64_t seed) {
    DetectorSpec spec;
    if (detector == "cusum")
      spec.kind = DetectorKind::kCusum;
    else if (detector == "eig")
      spec.kind = DetectorKind::kEig;
    else
      spec.kind = DetectorKind::kSubspaceCusum;
    spec.model.k = k;
    spec.model.sigma2 = sigma2;
    if (theta >= 0.0 && rho >= 0.0)
      throw std::invalid_argument("give either --theta or --rho, not both");
    spec.model.theta = theta >= 0.0 ? theta : (rho >= 0.0 ? rho * sigma2 : 0.0);
    spec.model.u = parse_direction(u, k, seed, false, nullptr);
    spec.window = w;
    if (spec.kind == DetectorKind::kSubspaceCusum) {
      if (drift > 0.0) {
        spec.drift = drift;
      } else {
        const double rmin = rho_min > 0.0 ? rho_min : spec.model.rho();
        DriftMcOptions opts;
        opts.trials = mc_drift_trials;
        opts.seed = derive_seed(seed, 0xD21F7u);
        spec.drift = choose_drift(sigma2, rmin, w, k,
                                  drift_mode == "mc" ? DriftMode::kMonteCarlo : DriftMode::kAverage,
                                  opts);
      }
    }
    return spec;
  }

  void echo(Table& t) const {
    t.add_config("detector", detector);
    t.add_config("k", k);
    t.add_config("sigma2", sigma2);
    t.add_config("theta", theta);
    t.add_config("rho", rho);
    t.add_config("u", u);
    t.add_config("w", w);
    t.add_config("drift", drift);
    t.add_config("drift_mode", drift_mode);
    t.add_config("rho_min", rho_min);
  }
};

void echo_mc(Table& t, int trials, std::uint64_t seed, long cap, int threads) {
  t.add_config("trials", trials);
  t.add_config("seed", seed);
  t.add_config("cap", cap);
  t.add_config("threads", threads);
}

// ---------------------------------------------------------------------------

int run(int argc, char** argv) {
  CLI::App app{"sequential rank-one covariance changepoint detection toolkit"};
  app.require_subcommand(1);

  std::string out_path, format = "csv", config_path;
  int threads_flag = 0;
  app.add_option("--out", out_path, "output file (default stdout)")->capture_default_str();
  app.add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--threads", threads_flag, "worker threads (env SUBSPACE_CPD_THREADS, then cores)");
  app.add_option("--config", config_path, "JSON file with option defaults (flags override)");

  // --- theory ---------------------------------------------------------------
  auto* c_theory = app.add_subcommand("theory", "threshold approximations (and optional simulation)");
  int t_w = 200, t_k = 10, t_trials = 2000;
  std::string t_arls = "5000,10000,20000,30000,40000,50000";
  bool t_sim = false;
  std::uint64_t t_seed = 1;
  long t_cap = 0;
  double t_tol = 0.05;
  c_theory->add_option("--w", t_w, "window length");
  c_theory->add_option("--k", t_k, "dimension");
  c_theory->add_option("--arl", t_arls, "target ARL list");
  c_theory->add_flag("--simulate", t_sim, "add a Monte-Carlo calibrated row");
  c_theory->add_option("--trials", t_trials, "simulation trials");
  c_theory->add_option("--seed", t_seed, "master seed");
  c_theory->add_option("--cap", t_cap, "censoring horizon (0: 20x target)");
  c_theory->add_option("--tolerance", t_tol, "relative ARL tolerance for calibration");

  // --- calibrate / arl / edd -------------------------------------------------
  auto* c_cal = app.add_subcommand("calibrate", "search the threshold for a target ARL");
  DetectorFlags cal_det;
  cal_det.add_to(c_cal);
  double cal_target = 5000.0, cal_tol = 0.05;
  int cal_trials = 2000;
  std::uint64_t cal_seed = 1;
  long cal_cap = 0;
  std::string cal_estimator = "auto";
  c_cal->add_option("--arl", cal_target, "target ARL");
  c_cal->add_option("--trials", cal_trials, "trials per evaluation");
  c_cal->add_option("--seed", cal_seed, "master seed");
  c_cal->add_option("--cap", cal_cap, "censoring horizon (0: 20x target)");
  c_cal->add_option("--tolerance", cal_tol, "relative ARL tolerance");
  c_cal->add_option("--estimator", cal_estimator, "auto | direct | sprt")
      ->check(CLI::IsMember({"auto", "direct", "sprt"}));

  auto* c_arl = app.add_subcommand("arl", "estimate the ARL at a fixed threshold");
  DetectorFlags arl_det;
  arl_det.add_to(c_arl);
  double arl_b = 0.0;
  int arl_trials = 2000;
  std::uint64_t arl_seed = 1;
  long arl_cap = 100000;
  bool arl_sprt = false;
  c_arl->add_option("--b", arl_b, "threshold")->required();
  c_arl->add_option("--trials", arl_trials, "trials");
  c_arl->add_option("--seed", arl_seed, "master seed");
  c_arl->add_option("--cap", arl_cap, "censoring horizon");
  c_arl->add_flag("--sprt", arl_sprt, "use the CUSUM-SPRT identity estimator");

  auto* c_edd = app.add_subcommand("edd", "estimate the worst-case detection delay");
  DetectorFlags edd_det;
  edd_det.add_to(c_edd);
  double edd_b = 0.0;
  int edd_trials = 2000;
  std::uint64_t edd_seed = 1;
  long edd_cap = 100000;
  c_edd->add_option("--b", edd_b, "threshold")->required();
  c_edd->add_option("--trials", edd_trials, "trials");
  c_edd->add_option("--seed", edd_seed, "master seed");
  c_edd->add_option("--cap", edd_cap, "censoring horizon");

  // --- compare ----------------------------------------------------------------
  auto* c_cmp = app.add_subcommand("compare", "EDD-vs-ARL curves for all three detectors");
  DetectorFlags cmp_det;
  cmp_det.add_to(c_cmp, false);
  std::string cmp_arls = "100,1000,10000";
  int cmp_trials = 2000, cmp_edd_trials = 2000;
  std::uint64_t cmp_seed = 1;
  double cmp_tol = 0.05;
  c_cmp->add_option("--arl", cmp_arls, "target ARL list");
  c_cmp->add_option("--trials", cmp_trials, "calibration trials per evaluation");
  c_cmp->add_option("--edd-trials", cmp_edd_trials, "EDD trials");
  c_cmp->add_option("--seed", cmp_seed, "master seed");
  c_cmp->add_option("--tolerance", cmp_tol, "relative ARL tolerance");

  // --- sweep ------------------------------------------------------------------
  auto* c_sweep = app.add_subcommand("sweep", "window-size sweep for the subspace cusum");
  DetectorFlags sw_det;
  sw_det.add_to(c_sweep, false);
  std::string sw_windows = "10:30", sw_arls = "1000";
  int sw_trials = 20000, sw_edd_trials = 2000;
  std::uint64_t sw_seed = 1;
  double sw_tol = 0.05;
  c_sweep->add_option("--windows", sw_windows, "window list, e.g. 1:50 or 5,10,20");
  c_sweep->add_option("--arl", sw_arls, "target ARL list");
  c_sweep->add_option("--trials", sw_trials, "calibration trials per evaluation");
  c_sweep->add_option("--edd-trials", sw_edd_trials, "EDD trials");
  c_sweep->add_option("--seed", sw_seed, "master seed");
  c_sweep->add_option("--tolerance", sw_tol, "relative ARL tolerance");

  // --- project ----------------------------------------------------------------
  auto* c_proj = app.add_subcommand("project", "switching-to-emerging reduction report");
  std::string p_u1, p_u2, p_stream_out;
  double p_theta = 1.0, p_sigma2 = 1.0;
  bool p_strict = false;
  long p_n = 0, p_tau = 0;
  std::uint64_t p_seed = 1;
  c_proj->add_option("--u1", p_u1, "pre-change direction (comma list)")->required();
  c_proj->add_option("--u2", p_u2, "post-change direction (comma list)")->required();
  c_proj->add_option("--theta", p_theta, "signal strength");
  c_proj->add_option("--sigma2", p_sigma2, "noise variance");
  c_proj->add_flag("--strict", p_strict, "reject non-unit directions instead of normalizing");
  c_proj->add_option("--stream-out", p_stream_out, "also emit the projected stream CSV here");
  c_proj->add_option("--n", p_n, "stream length for --stream-out");
  c_proj->add_option("--tau", p_tau, "changepoint for --stream-out");
  c_proj->add_option("--seed", p_seed, "stream seed");

  // --- trace ------------------------------------------------------------------
  auto* c_trace = app.add_subcommand("trace", "per-step statistic trace of one run");
  DetectorFlags tr_det;
  tr_det.add_to(c_trace);
  double tr_b = 0.0;
  long tr_n = 1000;
  std::string tr_tau = "inf";
  std::uint64_t tr_seed = 1;
  c_trace->add_option("--b", tr_b, "threshold")->required();
  c_trace->add_option("--n", tr_n, "stream length (0 gives an empty trace)");
  c_trace->add_option("--tau", tr_tau, "changepoint time, or 'inf'");
  c_trace->add_option("--seed", tr_seed, "stream seed");

  // JSON config file: inject "--key value" pairs after the subcommand token so
  // explicitly passed flags win (TakeLast policy).
  std::vector<std::string> args(argv + 1, argv + argc);
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config" && i + 1 < args.size())
      path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0)
      path = args[i].substr(9);
    if (path.empty()) continue;
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot read config file: " + path);
    json j = json::parse(f);
    std::vector<std::string> injected;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.value().is_boolean()) {
        if (it.value().get<bool>()) injected.push_back("--" + it.key());
      } else {
        std::string v = it.value().is_string() ? it.value().get<std::string>()
                                               : it.value().dump();
        injected.push_back("--" + it.key() + "=" + v);
      }
    }
    // insert after the subcommand name (first non-dash token)
    std::size_t sub = 0;
    while (sub < args.size() && args[sub].rfind("-", 0) == 0) ++sub;
    args.insert(args.begin() + std::min(sub + 1, args.size()), injected.begin(), injected.end());
    break;
  }
  for (CLI::App* sub : {&app, c_theory, c_cal, c_arl, c_edd, c_cmp, c_sweep, c_proj, c_trace}) {
    if (sub != &app) sub->fallthrough(true);
    for (CLI::Option* opt : sub->get_options())
      opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  }

  std::vector<const char*> cargs;
  cargs.push_back(argv[0]);
  for (const auto& a : args) cargs.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const int threads = resolve_threads(threads_flag);

  if (*c_theory) {
    const std::vector<double> arls = parse_double_list(t_arls);
    for (double a : arls)
      if (!(a > 1.0)) throw std::invalid_argument("--arl entries must exceed 1");
    Table t;
    t.add_config("w", t_w);
    t.add_config("k", t_k);
    t.add_config("arl", t_arls);
    t.add_config("simulate", t_sim ? "1" : "0");
    if (t_sim) echo_mc(t, t_trials, t_seed, t_cap, threads);
    t.columns = {"target_arl", "b_over_w_prop1", "b_over_w_prop2", "b_prop1", "b_prop2"};
    if (t_sim) {
      t.columns.push_back("b_over_w_sim");
      t.columns.push_back("arl_hat");
      t.columns.push_back("arl_se");
    }
    for (double a : arls) {
      const Prop1Threshold p1 = threshold_prop1(a, t_w, t_k);
      const double b2 = threshold_prop2(a, t_w, t_k);
      std::vector<std::string> row{fmt9(a), fmt9(p1.b / t_w), fmt9(b2 / t_w), fmt9(p1.b), fmt9(b2)};
      if (t_sim) {
        DetectorSpec spec;
        spec.kind = DetectorKind::kEig;
        spec.model.k = t_k;
        spec.model.sigma2 = 1.0;
        spec.model.theta = 0.0;
        spec.model.u = basis_vector(t_k);
        spec.window = t_w;
        CalibrationConfig cc;
        cc.target_arl = a;
        cc.trials = t_trials;
        cc.master_seed = t_seed;
        cc.horizon_cap = t_cap;
        cc.tolerance = t_tol;
        cc.threads = threads;
        const CalibrationResult r = calibrate_threshold(spec, cc);
        row.push_back(fmt9(r.threshold / t_w));
        row.push_back(fmt9(r.achieved.mean));
        row.push_back(fmt9(r.achieved.std_err));
      }
      t.rows.push_back(std::move(row));
    }
    write_table(t, out_path, format, "theory");
    return 0;
  }

  if (*c_cal) {
    DetectorSpec spec = cal_det.build(cal_seed);
    CalibrationConfig cc;
    cc.target_arl = cal_target;
    cc.trials = cal_trials;
    cc.master_seed = cal_seed;
    cc.horizon_cap = cal_cap;
    cc.tolerance = cal_tol;
    cc.threads = threads;
    cc.estimator = cal_estimator == "direct" ? ArlEstimator::kDirect
                   : cal_estimator == "sprt" ? ArlEstimator::kSprt
                                             : ArlEstimator::kAuto;
    const CalibrationResult r = calibrate_threshold(spec, cc);
    Table t;
    cal_det.echo(t);
    t.add_config("target_arl", cal_target);
    t.add_config("estimator", cal_estimator);
    t.add_config("tolerance", cal_tol);
    echo_mc(t, cal_trials, cal_seed, cal_cap, threads);
    t.columns = {"detector", "w",       "drift",  "target_arl", "b",
                 "arl_hat",  "arl_se",  "censored", "evaluations"};
    t.rows.push_back({to_string(spec.kind), fmt9(spec.window), fmt9(spec.drift), fmt9(cal_target),
                      fmt9(r.threshold), fmt9(r.achieved.mean), fmt9(r.achieved.std_err),
                      std::to_string(r.achieved.censored), std::to_string(r.evaluations)});
    write_table(t, out_path, format, "calibrate");
    return 0;
  }

  if (*c_arl) {
    DetectorSpec spec = arl_det.build(arl_seed);
    const McOpts mc{arl_trials, arl_seed, arl_cap, threads};
    const TrialSummary s =
        arl_sprt ? estimate_arl_sprt(spec, arl_b, mc) : estimate_arl_direct(spec, arl_b, mc);
    Table t;
    arl_det.echo(t);
    t.add_config("b", arl_b);
    t.add_config("method", arl_sprt ? "sprt" : "direct");
    echo_mc(t, arl_trials, arl_seed, arl_cap, threads);
    t.columns = {"detector", "b", "arl_hat", "arl_se", "censored", "trials", "bias_warning"};
    t.rows.push_back({to_string(spec.kind), fmt9(arl_b), fmt9(s.mean), fmt9(s.std_err),
                      std::to_string(s.censored), std::to_string(s.trials),
                      s.bias_warning ? "1" : "0"});
    write_table(t, out_path, format, "arl");
    return 0;
  }

  if (*c_edd) {
    DetectorSpec spec = edd_det.build(edd_seed);
    const TrialSummary s = estimate_worst_edd(spec, edd_b, {edd_trials, edd_seed, edd_cap, threads});
    Table t;
    edd_det.echo(t);
    t.add_config("b", edd_b);
    echo_mc(t, edd_trials, edd_seed, edd_cap, threads);
    t.columns = {"detector", "b", "edd_hat", "edd_se", "censored", "trials"};
    t.rows.push_back({to_string(spec.kind), fmt9(edd_b), fmt9(s.mean), fmt9(s.std_err),
                      std::to_string(s.censored), std::to_string(s.trials)});
    write_table(t, out_path, format, "edd");
    return 0;
  }

  if (*c_cmp) {
    const std::vector<double> arls = parse_double_list(cmp_arls);
    Table t;
    cmp_det.echo(t);
    t.add_config("arl", cmp_arls);
    t.add_config("edd_trials", cmp_edd_trials);
    t.add_config("tolerance", cmp_tol);
    echo_mc(t, cmp_trials, cmp_seed, 0L, threads);
    t.columns = {"detector", "w",      "target_arl", "b",        "arl_hat",
                 "arl_se",   "edd_hat", "edd_se",     "censored", "drift"};
    int cell = 0;
    for (const char* kind : {"cusum", "subspace", "eig"}) {
      DetectorFlags df = cmp_det;
      df.detector = kind;
      DetectorSpec spec = df.build(cmp_seed);
      for (double target : arls) {
        CalibrationConfig cc;
        cc.target_arl = target;
        cc.trials = cmp_trials;
        cc.master_seed = derive_seed(cmp_seed, 2 * cell);
        cc.tolerance = cmp_tol;
        cc.threads = threads;
        const CalibrationResult r = calibrate_threshold(spec, cc);
        const TrialSummary e = estimate_worst_edd(
            spec, r.threshold,
            {cmp_edd_trials, derive_seed(cmp_seed, 2 * cell + 1),
             static_cast<long>(20.0 * target), threads});
        t.rows.push_back({to_string(spec.kind), fmt9(spec.window), fmt9(target), fmt9(r.threshold),
                          fmt9(r.achieved.mean), fmt9(r.achieved.std_err), fmt9(e.mean),
                          fmt9(e.std_err), std::to_string(e.censored), fmt9(spec.drift)});
        ++cell;
      }
    }
    write_table(t, out_path, format, "compare");
    return 0;
  }

  if (*c_sweep) {
    SweepConfig sc;
    DetectorFlags df = sw_det;
    df.detector = "subspace";
    sc.model.k = df.k;
    sc.model.sigma2 = df.sigma2;
    sc.model.theta = df.theta >= 0.0 ? df.theta : (df.rho >= 0.0 ? df.rho * df.sigma2 : 1.0);
    sc.model.u = parse_direction(df.u, df.k, sw_seed, false, nullptr);
    sc.rho_min = df.rho_min;
    sc.windows = parse_int_list(sw_windows);
    sc.target_arls = parse_double_list(sw_arls);
    sc.calib.trials = sw_trials;
    sc.calib.master_seed = sw_seed;
    sc.calib.tolerance = sw_tol;
    sc.calib.threads = threads;
    sc.edd_trials = sw_edd_trials;
    const SweepResult r = sweep_window(sc);
    Table t;
    df.echo(t);
    t.add_config("windows", sw_windows);
    t.add_config("arl", sw_arls);
    echo_mc(t, sw_trials, sw_seed, 0L, threads);
    t.columns = {"row",    "w",       "target_arl", "b",      "arl_hat", "arl_se",
                 "edd_hat", "edd_se", "censored",   "drift"};
    auto push = [&](const char* tag, const SweepRow& row) {
      t.rows.push_back({tag, std::to_string(row.window), fmt9(row.target_arl), fmt9(row.threshold),
                        fmt9(row.arl_hat), fmt9(row.arl_se), fmt9(row.edd_hat), fmt9(row.edd_se),
                        std::to_string(row.censored), fmt9(row.drift)});
    };
    for (const SweepRow& row : r.rows) push("cell", row);
    for (const SweepRow& row : r.best_per_arl) push("best", row);
    write_table(t, out_path, format, "sweep");
    return 0;
  }

  if (*c_proj) {
    std::string warn1, warn2;
    // dimension comes from the list length
    const auto count = [](const std::string& s) {
      return static_cast<int>(std::count(s.begin(), s.end(), ',') + 1);
    };
    const int k = count(p_u1);
    if (count(p_u2) != k) throw std::invalid_argument("--u1 and --u2 have different lengths");
    const std::vector<double> u1 = parse_direction(p_u1, k, p_seed, p_strict, &warn1);
    const std::vector<double> u2 = parse_direction(p_u2, k, p_seed, p_strict, &warn2);
    if (!warn1.empty()) std::cerr << "warning: u1 " << warn1 << "\n";
    if (!warn2.empty()) std::cerr << "warning: u2 " << warn2 << "\n";
    SwitchSpec sw{k, p_sigma2, p_theta, u1, u2, p_tau, std::max(p_n, 1L), p_seed};
    const ReducedProblem r = reduce_switching(sw);
    Table t;
    t.add_config("u1", p_u1);
    t.add_config("u2", p_u2);
    t.add_config("theta", p_theta);
    t.add_config("sigma2", p_sigma2);
    t.add_config("seed", p_seed);
    t.columns = {"field", "value"};
    t.rows.push_back({"theta_tilde", fmt9(r.reduction.theta_tilde)});
    t.rows.push_back({"degenerate", r.reduction.degenerate ? "1" : "0"});
    std::ostringstream ur;
    for (std::size_t i = 0; i < r.reduction.u_reduced.size(); ++i)
      ur << (i ? ";" : "") << fmt9(r.reduction.u_reduced[i]);
    t.rows.push_back({"u_reduced", ur.str()});
    for (int row = 0; row < k - 1; ++row) {
      std::ostringstream q;
      for (int j = 0; j < k; ++j) q << (j ? ";" : "") << fmt9(r.reduction.row(row)[j]);
      t.rows.push_back({"Q_row" + std::to_string(row), q.str()});
    }
    write_table(t, out_path, format, "project");

    if (!p_stream_out.empty()) {
      if (p_n < 1) throw std::invalid_argument("--stream-out needs --n >= 1");
      SwitchGen gen(sw);
      std::ofstream f(p_stream_out, std::ios::binary);
      if (!f) throw std::runtime_error("cannot open " + p_stream_out);
      f << "# subspace-cpd v" << kVersion << " projected stream\n";
      f << "# k_reduced=" << (k - 1) << " theta_tilde=" << fmt9(r.reduction.theta_tilde)
        << " tau=" << p_tau << " n=" << p_n << " seed=" << p_seed << "\n";
      std::vector<double> x(k), y(k - 1);
      char buf[32];
      for (long i = 0; i < p_n; ++i) {
        gen.next(x);
        r.reduction.project(x, y);
        for (int j = 0; j < k - 1; ++j) {
          std::snprintf(buf, sizeof buf, "%.17g", y[j]);
          f << (j ? "," : "") << buf;
        }
        f << "\n";
      }
    }
    return 0;
  }

  if (*c_trace) {
    DetectorSpec spec = tr_det.build(tr_seed);
    std::optional<long> tau;
    if (tr_tau != "inf" && tr_tau != "infinity") tau = std::stol(tr_tau);
    Table t;
    tr_det.echo(t);
    t.add_config("b", tr_b);
    t.add_config("n", tr_n);
    t.add_config("tau", tr_tau);
    t.add_config("seed", tr_seed);
    t.columns = {"t", "statistic", "threshold", "stopped"};
    if (tr_n > 0) {
      StreamSpec stream{spec.model, tau, tr_n, tr_seed};
      if (!(spec.model.theta > 0.0)) {  // pure-noise trace
        stream.model.theta = 0.0;
        stream.model.u = basis_vector(spec.model.k);
      }
      StreamGen gen(stream);
      std::vector<double> x(spec.model.k);
      auto emit = [&](long step, double stat, bool stopped) {
        t.rows.push_back({std::to_string(step), fmt9(stat), fmt9(tr_b), stopped ? "1" : "0"});
      };
      if (spec.kind == DetectorKind::kCusum) {
        CusumDetector det(spec.model, tr_b);
        while (!det.stopped() && !gen.done()) {
          gen.next(x);
          const double stat = det.step(x);
          emit(det.time(), stat, det.stopped().has_value());
        }
      } else if (spec.kind == DetectorKind::kEig) {
        EigDetector det({spec.model.k, spec.window, tr_b, spec.eig, spec.warm_power_iters});
        while (!det.stopped() && !gen.done()) {
          gen.next(x);
          const double stat = det.step(x);
          emit(det.time(), stat, det.stopped().has_value());
        }
      } else {
        SubspaceCusumDetector det(
            {spec.model.k, spec.window, spec.drift, tr_b, spec.eig, spec.warm_power_iters});
        while (!det.stopped() && !gen.done()) {
          gen.next(x);
          const double stat = det.step(x);
          emit(det.arrivals(), stat, det.stopped().has_value());
        }
      }
    }
    write_table(t, out_path, format, "trace");
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
