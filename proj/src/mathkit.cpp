#include "secnoma/mathkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace secnoma::mathkit {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr double kInvE = 0.36787944117144233;  // 1/e
constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

Rng::Rng(std::uint64_t seed) : state_(mix64(seed + kGolden)) {}

std::uint64_t Rng::derive(std::uint64_t master,
                          std::initializer_list<std::uint64_t> ids) {
  std::uint64_t h = mix64(master + kGolden);
  for (std::uint64_t id : ids) {
    h = mix64(h ^ (kGolden * (id + 1)));
  }
  return h;
}

std::uint64_t Rng::next_u64() {
  // splitmix64
  std::uint64_t z = (state_ += kGolden);
  return mix64(z);
}

double Rng::uniform01() {
  // (0, 1]: safe under log()
  return 1.0 - static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  const double r = std::sqrt(-2.0 * std::log(uniform01()));
  return r * std::cos(kTwoPi * uniform01());
}

cd Rng::complex_normal() {
  const double r = std::sqrt(-std::log(uniform01()));
  const double phi = kTwoPi * uniform01();
  return {r * std::cos(phi), r * std::sin(phi)};
}

double Rng::exponential(double mean) {
  if (mean <= 0.0) throw std::invalid_argument("exponential: mean must be > 0");
  return -mean * std::log(uniform01());
}

double Rng::gamma(double shape, double scale) {
  if (shape <= 0.0 || scale <= 0.0) {
    throw std::invalid_argument("gamma: shape and scale must be > 0");
  }
  if (shape < 1.0) {
    // boost: G(a) = G(a+1) * U^{1/a}
    const double g = gamma(shape + 1.0, 1.0);
    return scale * g * std::pow(uniform01(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform01();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return scale * d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return scale * d * v;
  }
}

cvec sample_complex_gaussian_vector(std::size_t n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_complex_gaussian_vector: n >= 1");
  cvec v(n);
  for (auto& z : v) z = rng.complex_normal();
  return v;
}

double sample_gamma(double shape, double scale, Rng& rng) {
  return rng.gamma(shape, scale);
}

// ---------------------------------------------------------------------------
// Lambert W
// ---------------------------------------------------------------------------

double lambert_w0(double x) {
  if (!(x >= -kInvE - 1e-14)) {
    throw std::domain_error("lambert_w0: argument below -1/e");
  }
  if (x < -kInvE) x = -kInvE;
  if (x == 0.0) return 0.0;

  double w;
  if (x < 0.0) {
    // series around the branch point w(-1/e) = -1
    const double p = std::sqrt(2.0 * (1.0 + std::exp(1.0) * x));
    w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
    if (w >= 0.0) w = -1e-12;
  } else {
    w = std::log1p(x);
  }

  for (int it = 0; it < 60; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double wp1 = w + 1.0;
    double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    if (std::abs(wp1) < 1e-12 || denom == 0.0 || !std::isfinite(denom)) {
      denom = ew * wp1;  // Newton fallback
      if (denom == 0.0) break;
    }
    const double dw = f / denom;
    w -= dw;
    if (w < -1.0) w = -1.0;
    if (std::abs(dw) <= 1e-15 * (1.0 + std::abs(w))) break;
  }
  return w;
}

double lambert_w0_exp(double t) {
  if (t <= 700.0) return lambert_w0(std::exp(t));
  // solve w + ln w = t for large t
  double w = t - std::log(t);
  for (int it = 0; it < 40; ++it) {
    const double f = w + std::log(w) - t;
    const double dw = f / (1.0 + 1.0 / w);
    w -= dw;
    if (std::abs(dw) <= 1e-15 * (1.0 + std::abs(w))) break;
  }
  return w;
}

// ---------------------------------------------------------------------------
// Root finding / differentiation
// ---------------------------------------------------------------------------

double bisect(const std::function<double(double)>& f, const RootBracket& bracket) {
  if (!(bracket.lo < bracket.hi) || !(bracket.tol > 0.0) || bracket.max_iter < 1) {
    throw std::invalid_argument("bisect: invalid bracket");
  }
  double lo = bracket.lo, hi = bracket.hi;
  double flo = f(lo);
  double fhi = f(hi);
  if (std::abs(flo) <= bracket.tol) return lo;
  if (std::abs(fhi) <= bracket.tol) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) {
    throw std::runtime_error("bisect: no sign change across bracket");
  }
  for (int it = 0; it < bracket.max_iter; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (std::abs(fm) <= bracket.tol || (hi - lo) <= bracket.tol) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  throw std::runtime_error("bisect: max iterations exceeded");
}

std::vector<double> finite_difference_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_difference_gradient: h > 0");
  std::vector<double> g(x.size());
  std::vector<double> xp = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    const double fp = f(xp);
    xp[i] = x[i] - h;
    const double fm = f(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Hermitian matrices and eigensolver
// ---------------------------------------------------------------------------

HermitianMatrix::HermitianMatrix(int dim)
    : n(dim), a(static_cast<std::size_t>(dim) * dim, cd{0.0, 0.0}) {
  if (dim < 1) throw std::invalid_argument("HermitianMatrix: dim >= 1");
}

void HermitianMatrix::add_outer(double alpha, const cvec& v) {
  if (static_cast<int>(v.size()) != n) {
    throw std::invalid_argument("HermitianMatrix::add_outer: size mismatch");
  }
  for (int j = 0; j < n; ++j) {
    const cd vj = std::conj(v[j]);
    for (int i = 0; i < n; ++i) {
      at(i, j) += alpha * v[i] * vj;
    }
  }
}

double HermitianMatrix::trace() const {
  double t = 0.0;
  for (int i = 0; i < n; ++i) t += at(i, i).real();
  return t;
}

double HermitianMatrix::frobenius_norm() const {
  double s = 0.0;
  for (const cd& z : a) s += std::norm(z);
  return std::sqrt(s);
}

double HermitianMatrix::hermitian_defect() const {
  double d = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i <= j; ++i) {
      d = std::max(d, std::abs(at(i, j) - std::conj(at(j, i))));
    }
  }
  return d;
}

namespace {

EigenResult jacobi_eigen(const HermitianMatrix& m, bool want_vectors) {
  if (!m.is_hermitian(1e-10 * std::max(1.0, m.frobenius_norm()))) {
    throw std::invalid_argument("hermitian_eigen: matrix is not Hermitian");
  }
  const int n = m.n;
  HermitianMatrix A = m;
  std::vector<cvec> V;
  if (want_vectors) {
    V.assign(n, cvec(n, cd{0.0, 0.0}));
    for (int i = 0; i < n; ++i) V[i][i] = 1.0;  // V[j] is column j
  }

  const double fro = std::max(A.frobenius_norm(), 1e-300);
  const double stop = 1e-14 * fro;
  bool converged = false;

  for (int sweep = 0; sweep < 60 && !converged; ++sweep) {
    double off = 0.0;
    for (int q = 0; q < n; ++q) {
      for (int p = 0; p < q; ++p) off += std::norm(A.at(p, q));
    }
    off = std::sqrt(2.0 * off);
    if (off <= stop) {
      converged = true;
      break;
    }
    for (int q = 1; q < n; ++q) {
      for (int p = 0; p < q; ++p) {
        const cd apq = A.at(p, q);
        const double r = std::abs(apq);
        if (r <= 1e-300) continue;
        const double app = A.at(p, p).real();
        const double aqq = A.at(q, q).real();
        const double tau = (aqq - app) / (2.0 * r);
        double t;
        if (tau >= 0.0) {
          t = 1.0 / (tau + std::sqrt(1.0 + tau * tau));
        } else {
          t = -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
        }
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const cd sigma = (t * c) * (apq / r);
        const cd sigmac = std::conj(sigma);

        // columns: colp' = c colp - conj(sigma) colq ; colq' = sigma colp + c colq
        for (int i = 0; i < n; ++i) {
          const cd aip = A.at(i, p), aiq = A.at(i, q);
          A.at(i, p) = c * aip - sigmac * aiq;
          A.at(i, q) = sigma * aip + c * aiq;
        }
        // rows: rowp' = c rowp - sigma rowq ; rowq' = conj(sigma) rowp + c rowq
        for (int j = 0; j < n; ++j) {
          const cd apj = A.at(p, j), aqj = A.at(q, j);
          A.at(p, j) = c * apj - sigma * aqj;
          A.at(q, j) = sigmac * apj + c * aqj;
        }
        A.at(p, q) = cd{0.0, 0.0};
        A.at(q, p) = cd{0.0, 0.0};
        A.at(p, p) = cd{A.at(p, p).real(), 0.0};
        A.at(q, q) = cd{A.at(q, q).real(), 0.0};

        if (want_vectors) {
          for (int i = 0; i < n; ++i) {
            const cd vip = V[p][i], viq = V[q][i];
            V[p][i] = c * vip - sigmac * viq;
            V[q][i] = sigma * vip + c * viq;
          }
        }
      }
    }
  }
  if (!converged) {
    // final check after the capped sweeps
    double off = 0.0;
    for (int q = 0; q < n; ++q) {
      for (int p = 0; p < q; ++p) off += std::norm(A.at(p, q));
    }
    if (std::sqrt(2.0 * off) > stop) {
      throw std::runtime_error("hermitian_eigen: Jacobi sweeps did not converge");
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> diag(n);
  for (int i = 0; i < n; ++i) diag[i] = A.at(i, i).real();
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return diag[i] > diag[j]; });

  EigenResult res;
  res.values.resize(n);
  for (int i = 0; i < n; ++i) res.values[i] = diag[order[i]];
  if (want_vectors) {
    res.vectors.resize(n);
    for (int i = 0; i < n; ++i) res.vectors[i] = V[order[i]];
  }
  return res;
}

}  // namespace

std::vector<double> hermitian_eigenvalues(const HermitianMatrix& m) {
  return jacobi_eigen(m, false).values;
}

EigenResult hermitian_eigen(const HermitianMatrix& m) {
  return jacobi_eigen(m, true);
}

// ---------------------------------------------------------------------------
// Vector helpers
// ---------------------------------------------------------------------------

cd vdot(const cvec& x, const cvec& y) {
  if (x.size() != y.size()) throw std::invalid_argument("vdot: size mismatch");
  cd s{0.0, 0.0};
  for (std::size_t i = 0; i < x.size(); ++i) s += std::conj(x[i]) * y[i];
  return s;
}

double norm_sq(const cvec& x) {
  double s = 0.0;
  for (const cd& z : x) s += std::norm(z);
  return s;
}

double norm(const cvec& x) { return std::sqrt(norm_sq(x)); }

void normalize(cvec& x) {
  const double nrm = norm(x);
  if (nrm <= 0.0) throw std::invalid_argument("normalize: zero vector");
  for (cd& z : x) z /= nrm;
}

double exp_clamped(double x) {
  if (x > 700.0) x = 700.0;
  if (x < -700.0) x = -700.0;
  return std::exp(x);
}

}  // namespace secnoma::mathkit
