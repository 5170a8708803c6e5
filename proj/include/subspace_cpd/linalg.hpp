#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace subspace_cpd {

// Dense symmetric matrix, full k x k storage with mirrored writes (the upper
// triangle is authoritative; set() keeps both halves equal bit-for-bit).
class SymMatrix {
 public:
  explicit SymMatrix(int dim) : dim_(dim), a_(static_cast<std::size_t>(dim) * dim, 0.0) {
    if (dim < 1) throw std::invalid_argument("SymMatrix: dim must be >= 1");
  }

  int dim() const { return dim_; }

  double operator()(int i, int j) const { return a_[idx(i, j)]; }

  void set(int i, int j, double v) {
    a_[idx(i, j)] = v;
    a_[idx(j, i)] = v;
  }

  void fill(double v) { std::fill(a_.begin(), a_.end(), v); }

  // A += s * x x^T
  void add_outer(std::span<const double> x, double s) {
    if (static_cast<int>(x.size()) != dim_)
      throw std::invalid_argument("SymMatrix::add_outer: dimension mismatch");
    double* a = a_.data();
    for (int i = 0; i < dim_; ++i) {
      const double sxi = s * x[i];
      double* row = a + static_cast<std::size_t>(i) * dim_;
      for (int j = 0; j < dim_; ++j) row[j] += sxi * x[j];
    }
  }

  void matvec(std::span<const double> x, std::span<double> out) const {
    const double* a = a_.data();
    for (int i = 0; i < dim_; ++i) {
      const double* row = a + static_cast<std::size_t>(i) * dim_;
      double acc = 0.0;
      for (int j = 0; j < dim_; ++j) acc += row[j] * x[j];
      out[i] = acc;
    }
  }

  // Gershgorin lower bound on the spectrum: min_i (a_ii - sum_{j!=i} |a_ij|)
  double gershgorin_min() const {
    double best = 0.0;
    for (int i = 0; i < dim_; ++i) {
      double s = 0.0;
      for (int j = 0; j < dim_; ++j)
        if (j != i) s += std::abs((*this)(i, j));
      const double lo = (*this)(i, i) - s;
      if (i == 0 || lo < best) best = lo;
    }
    return best;
  }

  const std::vector<double>& data() const { return a_; }

 private:
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * dim_ + j; }

  int dim_;
  std::vector<double> a_;
};

struct EigPair {
  double value = 0.0;
  std::vector<double> vector;
};

struct EigOptions {
  double tol = 0.0;     // 0 -> default 1e-10 * dim
  int max_iter = 1000;  // power-iteration budget before the dense fallback
};

// Thrown when power iteration exhausts its budget; carries the best iterate
// so the caller can decide whether to fall back to the dense solver.
class PowerIterationError : public std::runtime_error {
 public:
  PowerIterationError(std::string msg, EigPair best)
      : std::runtime_error(std::move(msg)), best_iterate(std::move(best)) {}
  EigPair best_iterate;
};

namespace detail {

inline void normalize(std::vector<double>& v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  if (n == 0.0) throw std::invalid_argument("normalize: zero vector");
  for (double& x : v) x /= n;
}

// deterministic sign convention: largest-magnitude component is nonnegative
inline void fix_sign(std::vector<double>& v) {
  int arg = 0;
  double best = std::abs(v[0]);
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (std::abs(v[i]) > best) {
      best = std::abs(v[i]);
      arg = i;
    }
  }
  if (v[arg] < 0.0)
    for (double& x : v) x = -x;
}

}  // namespace detail

// Cyclic Jacobi eigensolver; returns the full spectrum's leading pair.
// Adequate for the small dimensions this library targets (k up to ~100).
inline EigPair jacobi_leading_eigpair(const SymMatrix& m) {
  const int n = m.dim();
  std::vector<double> a(m.data());
  std::vector<double> v(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i) * n + i] = 1.0;
  auto at = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i) * n + j]; };
  auto vt = [&](int i, int j) -> double& { return v[static_cast<std::size_t>(i) * n + j]; };

  double scale = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(at(i, j)));
  if (scale == 0.0) {
    EigPair p;
    p.value = 0.0;
    p.vector.assign(n, 0.0);
    p.vector[0] = 1.0;
    return p;
  }

  const double stop = 1e-14 * scale;
  for (int sweep = 0; sweep < 60; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n - 1; ++p)
      for (int q = p + 1; q < n; ++q) off = std::max(off, std::abs(at(p, q)));
    if (off <= stop) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (std::abs(apq) <= stop) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int i = 0; i < n; ++i) {
          const double aip = at(i, p), aiq = at(i, q);
          at(i, p) = c * aip - s * aiq;
          at(i, q) = s * aip + c * aiq;
        }
        for (int i = 0; i < n; ++i) {
          const double api = at(p, i), aqi = at(q, i);
          at(p, i) = c * api - s * aqi;
          at(q, i) = s * api + c * aqi;
        }
        for (int i = 0; i < n; ++i) {
          const double vip = vt(i, p), viq = vt(i, q);
          vt(i, p) = c * vip - s * viq;
          vt(i, q) = s * vip + c * viq;
        }
      }
    }
  }

  int arg = 0;
  for (int i = 1; i < n; ++i)
    if (at(i, i) > at(arg, arg)) arg = i;
  EigPair out;
  out.value = at(arg, arg);
  out.vector.resize(n);
  for (int i = 0; i < n; ++i) out.vector[i] = vt(i, arg);
  detail::normalize(out.vector);
  detail::fix_sign(out.vector);
  return out;
}

// Leading eigenpair via Householder tridiagonalization, Sturm-count bisection
// for the top eigenvalue, and inverse iteration for its vector. Roughly 4x
// cheaper than a full Jacobi decomposition at the dimensions this library
// targets, which matters because the Monte-Carlo loops call this per step.
namespace detail {
// per-thread scratch so the hot Monte-Carlo loops do not allocate per step
struct TridiagWorkspace {
  std::vector<double> a, reflectors, d, e, p, q, v, bb, dd, ee, ff, sub;
};
inline TridiagWorkspace& tridiag_workspace() {
  thread_local TridiagWorkspace ws;
  return ws;
}
}  // namespace detail

inline EigPair tridiagonal_leading_eigpair(const SymMatrix& m) {
  const int n = m.dim();
  if (n == 1) {
    EigPair p;
    p.value = m(0, 0);
    p.vector = {1.0};
    return p;
  }

  detail::TridiagWorkspace& ws = detail::tridiag_workspace();
  // Householder tridiagonalization; reflectors kept for the back-transform
  std::vector<double>& a = ws.a;
  a.assign(m.data().begin(), m.data().end());
  auto at = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i) * n + j]; };
  std::vector<double>& d = ws.d;
  std::vector<double>& e = ws.e;
  d.assign(n, 0.0);
  e.assign(n, 0.0);
  std::vector<double>& reflectors = ws.reflectors;  // row j: v_j padded
  reflectors.assign(static_cast<std::size_t>(n) * n, 0.0);
  std::vector<double>& p = ws.p;
  std::vector<double>& q = ws.q;
  p.assign(n, 0.0);
  q.assign(n, 0.0);
  for (int j = 0; j < n - 2; ++j) {
    double norm2_x = 0.0;
    for (int i = j + 1; i < n; ++i) norm2_x += at(i, j) * at(i, j);
    const double norm_x = std::sqrt(norm2_x);
    e[j] = at(j + 1, j) >= 0.0 ? -norm_x : norm_x;
    const double x0 = at(j + 1, j);
    double vnorm2 = norm2_x - 2.0 * x0 * e[j] + e[j] * e[j];
    if (norm_x < 1e-300 || vnorm2 < 1e-300) {  // already tridiagonal in this column
      reflectors[static_cast<std::size_t>(j) * n] = 0.0;
      continue;
    }
    double* v = reflectors.data() + static_cast<std::size_t>(j) * n;
    v[j + 1] = x0 - e[j];
    for (int i = j + 2; i < n; ++i) v[i] = at(i, j);
    const double inv = 1.0 / std::sqrt(vnorm2);
    for (int i = j + 1; i < n; ++i) v[i] *= inv;
    // symmetric update of the trailing block: A <- (I-2vv')A(I-2vv')
    for (int i = j + 1; i < n; ++i) {
      double s = 0.0;
      for (int l = j + 1; l < n; ++l) s += at(i, l) * v[l];
      p[i] = 2.0 * s;
    }
    double vp = 0.0;
    for (int i = j + 1; i < n; ++i) vp += v[i] * p[i];
    for (int i = j + 1; i < n; ++i) q[i] = p[i] - vp * v[i];
    for (int i = j + 1; i < n; ++i)
      for (int l = j + 1; l < n; ++l) at(i, l) -= v[i] * q[l] + q[i] * v[l];
    at(j + 1, j) = e[j];
  }
  for (int i = 0; i < n; ++i) d[i] = at(i, i);
  if (n >= 2) e[n - 2] = at(n - 1, n - 2);

  // Gershgorin bracket, then bisect with the Sturm count: #eigs(T) < x
  double lo = d[0], hi = d[0];
  for (int i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::abs(e[i - 1]) : 0.0) + (i < n - 1 ? std::abs(e[i]) : 0.0);
    lo = std::min(lo, d[i] - r);
    hi = std::max(hi, d[i] + r);
  }
  const double scale = std::max({1.0, std::abs(lo), std::abs(hi)});
  auto count_below = [&](double x) {
    int cnt = 0;
    double qv = 1.0;
    for (int i = 0; i < n; ++i) {
      const double e2 = i > 0 ? e[i - 1] * e[i - 1] : 0.0;
      qv = d[i] - x - (qv != 0.0 ? e2 / qv : e2 / (1e-300));
      if (qv < 0.0) ++cnt;
    }
    return cnt;
  };
  double blo = lo - scale * 1e-12, bhi = hi + scale * 1e-12;
  while (bhi - blo > 1e-13 * scale) {
    const double mid = 0.5 * (blo + bhi);
    if (count_below(mid) < n)
      blo = mid;
    else
      bhi = mid;
  }
  const double lambda = 0.5 * (blo + bhi);

  // inverse iteration on (T - lambda I) with partial pivoting
  std::vector<double>& v = ws.v;
  v.assign(n, 1.0 / std::sqrt(static_cast<double>(n)));
  for (int pass = 0; pass < 2; ++pass) {
    // factor the shifted tridiagonal each pass (cheap, O(n))
    std::vector<double>& bb = ws.bb;
    bb.assign(v.begin(), v.end());
    std::vector<double>& dd = ws.dd;
    std::vector<double>& ee = ws.ee;
    std::vector<double>& ff = ws.ff;
    dd.assign(n, 0.0);
    ee.assign(n, 0.0);
    ff.assign(n, 0.0);
    for (int i = 0; i < n; ++i) dd[i] = d[i] - lambda;
    for (int i = 0; i + 1 < n; ++i) ee[i] = e[i];
    // forward elimination with row swaps
    std::vector<double>& sub = ws.sub;
    sub.assign(n, 0.0);
    for (int i = 0; i + 1 < n; ++i) sub[i + 1] = e[i];
    for (int i = 0; i + 1 < n; ++i) {
      if (std::abs(sub[i + 1]) > std::abs(dd[i])) {
        std::swap(dd[i], sub[i + 1]);
        std::swap(ee[i], dd[i + 1]);
        if (i + 2 < n) {
          ff[i] = ee[i + 1];
          ee[i + 1] = 0.0;
        }
        std::swap(bb[i], bb[i + 1]);
      }
      const double denom = std::abs(dd[i]) < 1e-300 ? (dd[i] < 0 ? -1e-300 : 1e-300) : dd[i];
      const double f = sub[i + 1] / denom;
      dd[i + 1] -= f * ee[i];
      if (i + 2 < n) ee[i + 1] -= f * ff[i];
      bb[i + 1] -= f * bb[i];
    }
    for (int i = n - 1; i >= 0; --i) {
      double s = bb[i];
      if (i + 1 < n) s -= ee[i] * v[i + 1];
      if (i + 2 < n) s -= ff[i] * v[i + 2];
      const double denom = std::abs(dd[i]) < 1e-300 ? (dd[i] < 0 ? -1e-300 : 1e-300) : dd[i];
      v[i] = s / denom;
    }
    double nv = 0.0;
    for (double x : v) nv += x * x;
    nv = std::sqrt(nv);
    if (nv < 1e-300) {
      v.assign(n, 0.0);
      v[pass % n] = 1.0;
      continue;
    }
    for (double& x : v) x /= nv;
  }

  // back-transform through the stored reflectors
  for (int j = n - 3; j >= 0; --j) {
    const double* hv = reflectors.data() + static_cast<std::size_t>(j) * n;
    double s = 0.0;
    for (int i = j + 1; i < n; ++i) s += hv[i] * v[i];
    s *= 2.0;
    for (int i = j + 1; i < n; ++i) v[i] -= s * hv[i];
  }

  EigPair out;
  out.value = lambda;
  out.vector = std::move(v);
  detail::normalize(out.vector);
  detail::fix_sign(out.vector);
  return out;
}

// Leading eigenpair by power iteration with optional warm start.
// Convergence is declared on the eigenvalue residual ||m v - lambda v||
// <= tol * max(1, |lambda|); with a (near-)degenerate top of the spectrum the
// returned vector is whichever member of the top eigenspace the iteration
// settles on, under the sign convention. For indefinite input the iteration
// runs on m + c I with c = -min(0, Gershgorin lower bound), which makes the
// algebraically largest eigenvalue the dominant one; covariance matrices get
// c = 0 and the plain iteration.
inline EigPair leading_eigpair(const SymMatrix& m, const double* warm = nullptr,
                               EigOptions opts = {}) {
  const int n = m.dim();
  const double tol = opts.tol > 0.0 ? opts.tol : 1e-10 * n;
  if (opts.max_iter < 1) throw std::invalid_argument("leading_eigpair: max_iter >= 1");

  const double shift = std::max(0.0, -m.gershgorin_min());
  std::vector<double> v(n, 0.0);
  if (warm != nullptr) {
    std::copy(warm, warm + n, v.begin());
    detail::normalize(v);
  } else {
    int arg = 0;
    for (int i = 1; i < n; ++i)
      if (m(i, i) > m(arg, arg)) arg = i;
    v[arg] = 1.0;
  }

  std::vector<double> mv(n);
  double lambda = 0.0;
  for (int it = 0; it < opts.max_iter; ++it) {
    m.matvec(v, mv);
    lambda = 0.0;
    for (int i = 0; i < n; ++i) lambda += v[i] * mv[i];  // Rayleigh quotient
    double res = 0.0;
    for (int i = 0; i < n; ++i) {
      const double r = mv[i] - lambda * v[i];
      res += r * r;
    }
    if (std::sqrt(res) <= tol * std::max(1.0, std::abs(lambda))) {
      EigPair out;
      out.value = lambda;
      out.vector = v;
      detail::fix_sign(out.vector);
      return out;
    }
    // shifted step: v <- (m + shift I) v, normalized
    double norm = 0.0;
    for (int i = 0; i < n; ++i) {
      v[i] = mv[i] + shift * v[i];
      norm += v[i] * v[i];
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) {  // m v = -shift v exactly; restart from a basis vector
      v.assign(n, 0.0);
      v[0] = 1.0;
      norm = 1.0;
    }
    for (double& x : v) x /= norm;
  }

  EigPair best;
  best.value = lambda;
  best.vector = v;
  detail::fix_sign(best.vector);
  throw PowerIterationError("leading_eigpair: no convergence within max_iter", std::move(best));
}

// Power iteration first, dense solvers on non-convergence: the tridiagonal
// path, then Jacobi if its residual check fails. A non-positive power budget
// skips straight to the dense stage.
inline EigPair leading_eigpair_robust(const SymMatrix& m, const double* warm = nullptr,
                                      EigOptions opts = {}) {
  if (opts.max_iter >= 1) {
    try {
      return leading_eigpair(m, warm, opts);
    } catch (const PowerIterationError&) {
    }
  }
  EigPair p = tridiagonal_leading_eigpair(m);
  const double tol = opts.tol > 0.0 ? opts.tol : 1e-10 * m.dim();
  std::vector<double> mv(m.dim());
  m.matvec(p.vector, mv);
  double res = 0.0;
  for (int i = 0; i < m.dim(); ++i) {
    const double r = mv[i] - p.value * p.vector[i];
    res += r * r;
  }
  if (std::sqrt(res) <= std::max(tol, 1e-9) * std::max(1.0, std::abs(p.value))) return p;
  return jacobi_leading_eigpair(m);
}

// Un-normalized sliding-window sample covariance: the sum of outer products
// of the most recent min(pushes, window) observations, maintained by rank-one
// update/downdate with a periodic exact rebuild to bound cancellation drift.
class WindowCovariance {
 public:
  WindowCovariance(int dim, int window, long recompute_every = 0)
      : dim_(dim),
        window_(window),
        recompute_every_(recompute_every > 0 ? recompute_every : 10L * window),
        ring_(static_cast<std::size_t>(window) * dim, 0.0),
        sum_(dim) {
    if (dim < 1) throw std::invalid_argument("WindowCovariance: dim >= 1");
    if (window < 1) throw std::invalid_argument("WindowCovariance: window >= 1");
  }

  int dim() const { return dim_; }
  int window() const { return window_; }
  int count() const { return static_cast<int>(std::min<long>(pushes_, window_)); }
  long pushes() const { return pushes_; }
  const SymMatrix& matrix() const { return sum_; }

  void push(std::span<const double> x) {
    if (static_cast<int>(x.size()) != dim_)
      throw std::invalid_argument("WindowCovariance::push: dimension mismatch");
    const std::size_t slot = static_cast<std::size_t>(pushes_ % window_) * dim_;
    if (pushes_ >= window_)
      sum_.add_outer(std::span<const double>(ring_.data() + slot, dim_), -1.0);
    std::copy(x.begin(), x.end(), ring_.begin() + slot);
    sum_.add_outer(x, +1.0);
    ++pushes_;
    if (pushes_ % recompute_every_ == 0) rebuild();
    if (cache_) {
      warm_ = std::move(cache_->vector);  // stale vector kept as warm start
      cache_.reset();
    }
  }

  // oldest retained observation (valid once count() == window)
  std::span<const double> oldest() const {
    const std::size_t slot = static_cast<std::size_t>(pushes_ % window_) * dim_;
    return {ring_.data() + slot, static_cast<std::size_t>(dim_)};
  }

  const EigPair& leading(EigOptions opts = {}) {
    if (!cache_) {
      const double* warm = warm_.size() == static_cast<std::size_t>(dim_) ? warm_.data() : nullptr;
      cache_ = leading_eigpair_robust(sum_, warm, opts);
    }
    return *cache_;
  }

  // exact sum of outer products of the retained observations
  SymMatrix recomputed() const {
    SymMatrix s(dim_);
    const int c = count();
    for (int i = 0; i < c; ++i) {
      const long p = pushes_ - c + i;
      const std::size_t slot = static_cast<std::size_t>(p % window_) * dim_;
      s.add_outer(std::span<const double>(ring_.data() + slot, dim_), 1.0);
    }
    return s;
  }

 private:
  void rebuild() {
    SymMatrix s = recomputed();
    sum_ = std::move(s);
  }

  int dim_;
  int window_;
  long recompute_every_;
  long pushes_ = 0;
  std::vector<double> ring_;
  SymMatrix sum_;
  std::optional<EigPair> cache_;
  std::vector<double> warm_;
};

}  // namespace subspace_cpd
