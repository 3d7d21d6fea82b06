#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

// Shared helpers for the test suites: distribution oracles and small
// independent linear-algebra routines kept deliberately separate from the
// library implementations they check.
namespace testutil {

/// Two-sided Kolmogorov-Smirnov statistic against a CDF.
inline double ks_statistic(std::vector<double> samples,
                           const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

/// KS critical value at significance 0.01 (asymptotic).
inline double ks_critical_001(std::size_t n) {
  return 1.628 / std::sqrt(static_cast<double>(n));
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double exponential_cdf(double x, double mean) {
  return x <= 0.0 ? 0.0 : 1.0 - std::exp(-x / mean);
}

/// Integer-shape gamma CDF (Erlang): 1 - e^{-x/s} sum_{i<k} (x/s)^i / i!.
inline double erlang_cdf(double x, int shape, double scale) {
  if (x <= 0.0) return 0.0;
  const double t = x / scale;
  double term = 1.0, sum = 1.0;
  for (int i = 1; i < shape; ++i) {
    term *= t / i;
    sum += term;
  }
  return 1.0 - std::exp(-t) * sum;
}

/// Determinant of a dense complex matrix (column-major) by partial-pivot LU.
/// Independent check path for the eigensolver.
inline std::complex<double> lu_determinant(std::vector<std::complex<double>> a, int n) {
  std::complex<double> det{1.0, 0.0};
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    double best = std::abs(a[static_cast<std::size_t>(col) * n + col]);
    for (int r = col + 1; r < n; ++r) {
      const double v = std::abs(a[static_cast<std::size_t>(col) * n + r]);
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (best == 0.0) return {0.0, 0.0};
    if (pivot != col) {
      for (int c = 0; c < n; ++c) {
        std::swap(a[static_cast<std::size_t>(c) * n + col],
                  a[static_cast<std::size_t>(c) * n + pivot]);
      }
      det = -det;
    }
    const std::complex<double> diag = a[static_cast<std::size_t>(col) * n + col];
    det *= diag;
    for (int r = col + 1; r < n; ++r) {
      const std::complex<double> f = a[static_cast<std::size_t>(col) * n + r] / diag;
      for (int c = col; c < n; ++c) {
        a[static_cast<std::size_t>(c) * n + r] -= f * a[static_cast<std::size_t>(c) * n + col];
      }
    }
  }
  return det;
}

/// Exact Euclidean projection onto {x >= 0, sum = total} by sort and
/// threshold; oracle for the iterative implementation.
inline std::vector<double> simplex_projection_sorted(std::vector<double> v,
                                                     double total) {
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cum = 0.0;
  double tau = 0.0;
  int rho = 0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cum += u[j];
    const double cand = (cum - total) / static_cast<double>(j + 1);
    if (u[j] - cand > 0.0) {
      rho = static_cast<int>(j + 1);
      tau = cand;
    }
  }
  (void)rho;
  for (double& x : v) x = std::max(x - tau, 0.0);
  return v;
}

}  // namespace testutil
