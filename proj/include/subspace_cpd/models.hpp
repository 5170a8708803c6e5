#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "subspace_cpd/rng.hpp"

namespace subspace_cpd {

inline double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Rank-one spiked covariance: Sigma = sigma2 * I_k + theta * u u^T.
struct SpikedModel {
  int k = 1;
  double sigma2 = 1.0;
  double theta = 0.0;
  std::vector<double> u;

  double rho() const { return theta / sigma2; }

  void validate() const {
    if (k < 1) throw std::invalid_argument("SpikedModel: k >= 1");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("SpikedModel: sigma2 > 0");
    if (theta < 0.0) throw std::invalid_argument("SpikedModel: theta >= 0");
    if (static_cast<int>(u.size()) != k) throw std::invalid_argument("SpikedModel: u has length k");
    if (std::abs(norm2(u) - 1.0) > 1e-10)
      throw std::invalid_argument("SpikedModel: u must have unit norm");
  }
};

inline std::vector<double> basis_vector(int k, int axis = 0) {
  std::vector<double> e(k, 0.0);
  e.at(axis) = 1.0;
  return e;
}

inline std::vector<double> random_unit_vector(int k, std::uint64_t seed) {
  GaussianRng rng(seed);
  std::vector<double> v(k);
  double n = 0.0;
  do {
    for (double& x : v) x = rng.normal();
    n = norm2(v);
  } while (n < 1e-12);
  for (double& x : v) x /= n;
  return v;
}

// Observation stream: N(0, sigma2 I) for t <= tau, spiked afterwards.
// tau = nullopt encodes "change never happens"; tau = 0 is all post-change.
struct StreamSpec {
  SpikedModel model;
  std::optional<long> tau;  // nullopt = infinity
  long n = 0;
  std::uint64_t seed = 0;

  void validate() const {
    model.validate();
    if (n < 1) throw std::invalid_argument("StreamSpec: n >= 1");
    if (tau && *tau < 0) throw std::invalid_argument("StreamSpec: tau >= 0");
  }
};

// Draw order per observation: k noise components z, then (post-change only)
// one extra scalar g; x = sigma z + sqrt(theta) g u. This makes E[x x^T]
// exactly the regime covariance and keeps streams bit-replayable.
class StreamGen {
 public:
  explicit StreamGen(const StreamSpec& spec) : spec_(spec), rng_(spec.seed) {
    spec_.validate();
    sigma_ = std::sqrt(spec_.model.sigma2);
    sqrt_theta_ = std::sqrt(spec_.model.theta);
  }

  int dim() const { return spec_.model.k; }
  long length() const { return spec_.n; }
  long produced() const { return t_; }
  bool done() const { return t_ >= spec_.n; }

  // next observation x_{t+1}; unbounded streams may ignore spec.n via force
  void next(std::span<double> out) {
    const int k = spec_.model.k;
    for (int i = 0; i < k; ++i) out[i] = sigma_ * rng_.normal();
    ++t_;
    const bool post = spec_.tau.has_value() && t_ > *spec_.tau;
    if (post && spec_.model.theta > 0.0) {
      const double g = rng_.normal();
      for (int i = 0; i < k; ++i) out[i] += sqrt_theta_ * g * spec_.model.u[i];
    }
  }

 private:
  StreamSpec spec_;
  GaussianRng rng_;
  double sigma_, sqrt_theta_;
  long t_ = 0;
};

// Switching-subspace stream: spike along u1 before tau, along u2 after.
struct SwitchSpec {
  int k = 1;
  double sigma2 = 1.0;
  double theta = 0.0;
  std::vector<double> u1, u2;
  std::optional<long> tau;
  long n = 0;
  std::uint64_t seed = 0;

  void validate() const {
    if (k < 1) throw std::invalid_argument("SwitchSpec: k >= 1");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("SwitchSpec: sigma2 > 0");
    if (theta < 0.0) throw std::invalid_argument("SwitchSpec: theta >= 0");
    if (static_cast<int>(u1.size()) != k || static_cast<int>(u2.size()) != k)
      throw std::invalid_argument("SwitchSpec: u1, u2 have length k");
    if (std::abs(norm2(u1) - 1.0) > 1e-10 || std::abs(norm2(u2) - 1.0) > 1e-10)
      throw std::invalid_argument("SwitchSpec: u1, u2 must have unit norm");
    if (n < 1) throw std::invalid_argument("SwitchSpec: n >= 1");
  }
};

class SwitchGen {
 public:
  explicit SwitchGen(const SwitchSpec& spec) : spec_(spec), rng_(spec.seed) {
    spec_.validate();
    sigma_ = std::sqrt(spec_.sigma2);
    sqrt_theta_ = std::sqrt(spec_.theta);
  }

  int dim() const { return spec_.k; }
  bool done() const { return t_ >= spec_.n; }

  void next(std::span<double> out) {
    const int k = spec_.k;
    for (int i = 0; i < k; ++i) out[i] = sigma_ * rng_.normal();
    ++t_;
    if (spec_.theta > 0.0) {
      const bool post = spec_.tau.has_value() && t_ > *spec_.tau;
      const std::vector<double>& dir = post ? spec_.u2 : spec_.u1;
      const double g = rng_.normal();
      for (int i = 0; i < k; ++i) out[i] += sqrt_theta_ * g * dir[i];
    }
  }

 private:
  SwitchSpec spec_;
  GaussianRng rng_;
  double sigma_, sqrt_theta_;
  long t_ = 0;
};

// Orthonormal complement of u1 and the effective reduced problem.
struct ProjectionReduction {
  int k = 0;                   // ambient dimension
  std::vector<double> Q;       // (k-1) x k, row-major
  double theta_tilde = 0.0;    // theta * (1 - (u1.u2)^2)
  std::vector<double> u_reduced;
  bool degenerate = false;     // theta_tilde below detectability floor

  std::span<const double> row(int r) const {
    return {Q.data() + static_cast<std::size_t>(r) * k, static_cast<std::size_t>(k)};
  }

  void project(std::span<const double> x, std::span<double> out) const {
    for (int r = 0; r < k - 1; ++r) out[r] = dot(row(r), x);
  }
};

// Rows 2..k of the Householder reflector H = I - 2 v v^T / ||v||^2 with
// v = u1 - alpha e1, alpha = -sign(u1[0]). H maps u1 to alpha e1, so every
// kept row is orthogonal to u1 and the rows are orthonormal. For u1 = e1
// this degenerates to Q = [0 | I_{k-1}] exactly.
inline ProjectionReduction build_projection(std::span<const double> u1) {
  const int k = static_cast<int>(u1.size());
  if (k < 2) throw std::invalid_argument("build_projection: k >= 2");
  const double n = norm2(u1);
  if (n < 1e-12) throw std::invalid_argument("build_projection: zero direction");

  std::vector<double> v(u1.begin(), u1.end());
  for (double& x : v) x /= n;
  const double alpha = v[0] >= 0.0 ? -1.0 : 1.0;
  v[0] -= alpha;
  double vv = 0.0;
  for (double x : v) vv += x * x;

  ProjectionReduction pr;
  pr.k = k;
  pr.Q.assign(static_cast<std::size_t>(k - 1) * k, 0.0);
  for (int r = 1; r < k; ++r) {
    double* row = pr.Q.data() + static_cast<std::size_t>(r - 1) * k;
    const double f = vv > 0.0 ? 2.0 * v[r] / vv : 0.0;
    for (int j = 0; j < k; ++j) row[j] = (r == j ? 1.0 : 0.0) - f * v[j];
  }
  return pr;
}

struct ReducedProblem {
  StreamSpec stream;        // emerging-subspace spec over R^{k-1}
  ProjectionReduction reduction;
};

// Reduce the switching problem to an emerging one: y = Q x, effective signal
// theta_tilde = theta (1 - (u1.u2)^2), direction Q u2 / ||Q u2||. A parallel
// switch (u2 = +-u1) leaves nothing detectable and is flagged, not thrown.
inline ReducedProblem reduce_switching(const SwitchSpec& spec) {
  spec.validate();
  ProjectionReduction pr = build_projection(spec.u1);
  const double c = dot(spec.u1, spec.u2);
  pr.theta_tilde = spec.theta * (1.0 - c * c);

  std::vector<double> qu2(spec.k - 1);
  pr.project(spec.u2, qu2);
  const double qn = norm2(qu2);
  if (pr.theta_tilde < 1e-12 || qn < 1e-12) {
    pr.degenerate = true;
    pr.theta_tilde = std::max(pr.theta_tilde, 0.0);
    pr.u_reduced.clear();
  } else {
    for (double& x : qu2) x /= qn;
    pr.u_reduced = qu2;
  }

  ReducedProblem out;
  out.reduction = pr;
  out.stream.model.k = spec.k - 1;
  out.stream.model.sigma2 = spec.sigma2;
  out.stream.model.theta = pr.degenerate ? 0.0 : pr.theta_tilde;
  out.stream.model.u = pr.degenerate ? basis_vector(spec.k - 1) : pr.u_reduced;
  out.stream.tau = spec.tau;
  out.stream.n = spec.n;
  out.stream.seed = spec.seed;
  return out;
}

// ---- stream CSV: one observation per row, model metadata in '#' comments ---

inline void dump_stream_csv(std::ostream& os, const StreamSpec& spec) {
  StreamGen gen(spec);
  os << "# subspace_cpd stream v1\n";
  os << "# k=" << spec.model.k << " sigma2=" << spec.model.sigma2
     << " theta=" << spec.model.theta << " tau=" << (spec.tau ? std::to_string(*spec.tau) : "inf")
     << " n=" << spec.n << " seed=" << spec.seed << "\n";
  os << "# u=";
  for (int i = 0; i < spec.model.k; ++i) os << (i ? "," : "") << spec.model.u[i];
  os << "\n";
  std::vector<double> x(spec.model.k);
  char buf[32];
  while (!gen.done()) {
    gen.next(x);
    for (int i = 0; i < spec.model.k; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", x[i]);
      os << (i ? "," : "") << buf;
    }
    os << "\n";
  }
}

inline std::vector<std::vector<double>> load_stream_csv(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && rows.back().size() != row.size())
      throw std::runtime_error("load_stream_csv: ragged rows");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace subspace_cpd
