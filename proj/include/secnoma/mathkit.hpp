#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <vector>

namespace secnoma::mathkit {

using cd = std::complex<double>;
using cvec = std::vector<cd>;

// ---------------------------------------------------------------------------
// Deterministic random streams
// ---------------------------------------------------------------------------

/// Counter-free seeded stream. All draws are pure functions of the seed and
/// the call sequence, so replaying a seed reproduces every sample bit for bit.
/// Streams are never shared between threads; derive() fans a master seed out
/// into independent per-task streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Splitmix-based seed fan-out: hash(master, id0, id1, ...).
  static std::uint64_t derive(std::uint64_t master,
                              std::initializer_list<std::uint64_t> ids);

  std::uint64_t next_u64();
  double uniform01();   // (0, 1]
  double normal();      // N(0, 1)
  cd complex_normal();  // CN(0, 1): real/imag parts each N(0, 1/2)
  double exponential(double mean);
  double gamma(double shape, double scale);  // Marsaglia-Tsang

 private:
  std::uint64_t state_;
};

/// i.i.d. CN(0,1) entries (unit variance per complex entry).
cvec sample_complex_gaussian_vector(std::size_t n, Rng& rng);

double sample_gamma(double shape, double scale, Rng& rng);

// ---------------------------------------------------------------------------
// Special functions and root finding
// ---------------------------------------------------------------------------

/// Principal branch W0: w e^w = x for x >= -1/e, w >= -1.
/// Halley iteration from a branch-aware initial guess; relative error <= 1e-12.
double lambert_w0(double x);

/// W0(e^t) for arbitrary t, stable even when e^t would overflow.
double lambert_w0_exp(double t);

struct RootBracket {
  double lo = 0.0;
  double hi = 1.0;
  double tol = 1e-12;  // absolute, applied to both |f| and interval width
  int max_iter = 200;
};

/// Bisection for a monotone f with a sign change across the bracket.
/// Converges when |f(mid)| or the interval width drops below tol; flat
/// regions at tolerance scale therefore count as converged.
double bisect(const std::function<double(double)>& f, const RootBracket& bracket);

/// Central differences (f(x+h e_i) - f(x-h e_i)) / (2h).
std::vector<double> finite_difference_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x, double h);

// ---------------------------------------------------------------------------
// Dense Hermitian matrices
// ---------------------------------------------------------------------------

struct HermitianMatrix {
  int n = 0;
  std::vector<cd> a;  // column-major n*n

  HermitianMatrix() = default;
  explicit HermitianMatrix(int dim);

  cd& at(int i, int j) { return a[static_cast<std::size_t>(j) * n + i]; }
  const cd& at(int i, int j) const { return a[static_cast<std::size_t>(j) * n + i]; }

  /// Adds alpha * v v^H.
  void add_outer(double alpha, const cvec& v);

  double trace() const;
  double frobenius_norm() const;
  double hermitian_defect() const;  // max |a_ij - conj(a_ji)|
  bool is_hermitian(double tol = 1e-12) const { return hermitian_defect() <= tol; }
};

struct EigenResult {
  std::vector<double> values;  // descending
  std::vector<cvec> vectors;   // vectors[i] pairs with values[i]
};

/// All eigenvalues, descending. Cyclic complex Jacobi; throws on
/// non-convergence after the sweep cap.
std::vector<double> hermitian_eigenvalues(const HermitianMatrix& m);

/// Eigenvalues plus an orthonormal eigenbasis.
EigenResult hermitian_eigen(const HermitianMatrix& m);

// ---------------------------------------------------------------------------
// Complex vector helpers
// ---------------------------------------------------------------------------

/// Conjugates the first argument: sum conj(x_i) y_i.
cd vdot(const cvec& x, const cvec& y);
double norm_sq(const cvec& x);
double norm(const cvec& x);
void normalize(cvec& x);

inline double clamp_probability(double p) {
  if (p < 0.0) return 0.0;
  if (p > 1.0) return 1.0;
  return p;
}

/// exp with the argument clamped to +-700 to avoid overflow.
double exp_clamped(double x);

}  // namespace secnoma::mathkit
