#pragma once

// Closed-form kernels for 2x2 Hermitian matrices: Cholesky factor, triangular
// solves, inverse, and principal eigenpair.

#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <string>

#include "binbeam/error.hpp"
#include "binbeam/fft.hpp"

namespace binbeam::beam {

using Vec2 = std::array<cplx, 2>;

struct Mat2 {
  cplx a00{}, a01{}, a10{}, a11{};

  static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static Mat2 diag(double d0, double d1) { return {d0, 0.0, 0.0, d1}; }
  static Mat2 outer(const Vec2& x) {  // x x^H
    return {std::norm(x[0]), x[0] * std::conj(x[1]), x[1] * std::conj(x[0]),
            std::norm(x[1])};
  }

  Mat2 adjoint() const { return {std::conj(a00), std::conj(a10), std::conj(a01), std::conj(a11)}; }
  cplx trace() const { return a00 + a11; }
  cplx det() const { return a00 * a11 - a01 * a10; }

  Vec2 operator*(const Vec2& v) const {
    return {a00 * v[0] + a01 * v[1], a10 * v[0] + a11 * v[1]};
  }
  Mat2 operator*(const Mat2& b) const {
    return {a00 * b.a00 + a01 * b.a10, a00 * b.a01 + a01 * b.a11,
            a10 * b.a00 + a11 * b.a10, a10 * b.a01 + a11 * b.a11};
  }
  Mat2 operator+(const Mat2& b) const { return {a00 + b.a00, a01 + b.a01, a10 + b.a10, a11 + b.a11}; }
  Mat2 operator-(const Mat2& b) const { return {a00 - b.a00, a01 - b.a01, a10 - b.a10, a11 - b.a11}; }
  Mat2 operator*(double s) const { return {a00 * s, a01 * s, a10 * s, a11 * s}; }
  friend Mat2 operator*(double s, const Mat2& m) { return m * s; }
};

inline cplx dot(const Vec2& a, const Vec2& b) {  // a^H b
  return std::conj(a[0]) * b[0] + std::conj(a[1]) * b[1];
}
inline double norm2(const Vec2& v) { return std::sqrt(std::norm(v[0]) + std::norm(v[1])); }

inline double max_abs_diff(const Mat2& a, const Mat2& b) {
  return std::max({std::abs(a.a00 - b.a00), std::abs(a.a01 - b.a01),
                   std::abs(a.a10 - b.a10), std::abs(a.a11 - b.a11)});
}

inline double hermitian_defect(const Mat2& m) { return max_abs_diff(m, m.adjoint()); }

// Average of m and m^H, with exactly real diagonal.
inline Mat2 hermitian_part(const Mat2& m) {
  const cplx off = 0.5 * (m.a01 + std::conj(m.a10));
  return {m.a00.real(), off, std::conj(off), m.a11.real()};
}

// Lower-triangular L with positive real diagonal and L L^H = R.
struct Lower2 {
  double l00 = 1.0;
  cplx l10{};
  double l11 = 1.0;

  Mat2 matrix() const { return {l00, 0.0, l10, l11}; }
  Vec2 operator*(const Vec2& v) const { return {l00 * v[0], l10 * v[0] + l11 * v[1]}; }
};

class NotPositiveDefinite : public DataError {
 public:
  using DataError::DataError;
};

// Cholesky of a Hermitian 2x2. Pivots at or below `floor` raise, naming
// `context` (typically the frequency bin) in the message.
inline Lower2 factor_hermitian_2x2(const Mat2& r, double floor = 0.0,
                                   const std::string& context = {}) {
  const auto fail = [&](double pivot) {
    std::string msg = "factor_hermitian_2x2: matrix not positive definite (pivot " +
                      std::to_string(pivot) + ")";
    if (!context.empty()) msg += " at " + context;
    return NotPositiveDefinite(msg);
  };
  const double d0 = r.a00.real();
  if (!(d0 > floor)) throw fail(d0);
  Lower2 f;
  f.l00 = std::sqrt(d0);
  f.l10 = r.a10 / f.l00;
  const double d1 = r.a11.real() - std::norm(f.l10);
  if (!(d1 > floor)) throw fail(d1);
  f.l11 = std::sqrt(d1);
  return f;
}

// Solve L y = x by forward substitution.
inline Vec2 forward_substitute(const Lower2& f, const Vec2& x) {
  const cplx y0 = x[0] / f.l00;
  return {y0, (x[1] - f.l10 * y0) / f.l11};
}

// Solve L^H z = y by back substitution.
inline Vec2 back_substitute(const Lower2& f, const Vec2& y) {
  const cplx z1 = y[1] / f.l11;
  return {(y[0] - std::conj(f.l10) * z1) / f.l00, z1};
}

// R^{-1} x through the factor.
inline Vec2 solve_hermitian(const Lower2& f, const Vec2& x) {
  return back_substitute(f, forward_substitute(f, x));
}

// Explicit inverse from the factor; Hermitian by construction.
inline Mat2 inverse_from_factor(const Lower2& f) {
  const Vec2 c0 = solve_hermitian(f, {1.0, 0.0});
  const Vec2 c1 = solve_hermitian(f, {0.0, 1.0});
  return hermitian_part({c0[0], c1[0], c0[1], c1[1]});
}

struct Eigenpair {
  Vec2 vector;         // unit norm, first nonzero component real positive
  double value = 0.0;  // largest eigenvalue
  double minor = 0.0;  // smallest eigenvalue
  bool degenerate = false;
};

namespace detail {
inline Vec2 fix_phase(Vec2 v) {
  const std::size_t lead = std::abs(v[0]) > 0.0 ? 0 : 1;
  const double mag = std::abs(v[lead]);
  if (mag > 0.0) {
    const cplx rot = std::conj(v[lead]) / mag;
    v[0] *= rot;
    v[1] *= rot;
    v[lead] = mag;
  }
  return v;
}
}  // namespace detail

// Principal eigenpair of a Hermitian 2x2, from the characteristic
// polynomial. Equal eigenvalues (relative gap below `degenerate_tol`) make
// every vector an eigenvector; the tie-break then reuses `previous` when
// given, else returns e1.
inline Eigenpair principal_eigvec_2x2(const Mat2& r, const Vec2* previous = nullptr,
                                      double degenerate_tol = 1e-14) {
  const double a = r.a00.real();
  const double d = r.a11.real();
  const cplx b = 0.5 * (r.a01 + std::conj(r.a10));
  const double mean = 0.5 * (a + d);
  const double half_diff = 0.5 * (a - d);
  const double rad = std::hypot(half_diff, std::abs(b));

  Eigenpair out;
  out.value = mean + rad;
  out.minor = mean - rad;
  const double scale = std::abs(a) + std::abs(d) + std::abs(b);
  if (rad <= degenerate_tol * scale) {
    out.degenerate = true;
    Vec2 v = previous ? *previous : Vec2{1.0, 0.0};
    const double n = norm2(v);
    if (!(n > 0.0)) v = {1.0, 0.0};
    else v = {v[0] / n, v[1] / n};
    out.vector = detail::fix_phase(v);
    return out;
  }
  // Of the two null-space candidates pick the one free of cancellation.
  Vec2 v;
  if (half_diff >= 0.0)
    v = {half_diff + rad, std::conj(b)};  // (lambda - d, b*)
  else
    v = {b, rad - half_diff};  // (b, lambda - a)
  const double n = norm2(v);
  out.vector = detail::fix_phase({v[0] / n, v[1] / n});
  return out;
}

// Both eigenvalues (ascending) of a Hermitian 2x2.
inline std::array<double, 2> eigenvalues_2x2(const Mat2& r) {
  const double a = r.a00.real(), d = r.a11.real();
  const double b = std::abs(0.5 * (r.a01 + std::conj(r.a10)));
  const double rad = std::hypot(0.5 * (a - d), b);
  return {0.5 * (a + d) - rad, 0.5 * (a + d) + rad};
}

}  // namespace binbeam::beam
