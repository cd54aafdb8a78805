#pragma once

#include "ym/math.hpp"
#include "ym/tape.hpp"

namespace ym {

// Second-order forward jet: a value, first partials along two tracked input
// directions, and the single mixed second partial along the pair. Arithmetic
// follows the product rule on (da, db) and the second-order Leibniz rule on
// dab. Instantiated with S=double for plain evaluation and S=TV to record
// the same computation, in the same op order, onto a tape.
template <class S>
struct Jet2 {
  S v{};
  S da{};
  S db{};
  S dab{};
};

using Jet2d = Jet2<double>;

inline double normcdf_s(double x) { return norm_cdf(x); }
inline double normpdf_s(double x) { return norm_pdf(x); }
inline TV normcdf_s(const TV& x) { return normcdf(x); }
inline TV normpdf_s(const TV& x) { return normpdf(x); }

namespace detail {

inline bool structural_zero(double) { return false; }
inline bool structural_zero(const TV& x) { return x.is_zero(); }

inline bool mixed_enabled(double) { return true; }
inline bool mixed_enabled(const TV& x) { return x.tape ? x.tape->track_mixed() : true; }

template <class S>
bool mixed_enabled_jet(const Jet2<S>& a, const Jet2<S>& b) {
  return mixed_enabled(a.v) && mixed_enabled(b.v);
}

}  // namespace detail

template <class S>
Jet2<S> operator+(const Jet2<S>& a, const Jet2<S>& b) {
  return {a.v + b.v, a.da + b.da, a.db + b.db, a.dab + b.dab};
}

template <class S>
Jet2<S> operator-(const Jet2<S>& a, const Jet2<S>& b) {
  return {a.v - b.v, a.da - b.da, a.db - b.db, a.dab - b.dab};
}

template <class S>
Jet2<S> operator*(const Jet2<S>& a, const Jet2<S>& b) {
  Jet2<S> r;
  r.v = a.v * b.v;
  r.da = a.da * b.v + a.v * b.da;
  r.db = a.db * b.v + a.v * b.db;
  if (detail::mixed_enabled_jet(a, b))
    r.dab = a.dab * b.v + a.da * b.db + a.db * b.da + a.v * b.dab;
  return r;
}

// Scalars (network parameters, constants) carry no input derivatives, so
// scalar * jet scales every channel.
template <class S>
Jet2<S> scale(const S& s, const Jet2<S>& a) {
  Jet2<S> r;
  r.v = s * a.v;
  r.da = s * a.da;
  r.db = s * a.db;
  if (detail::mixed_enabled(a.v)) r.dab = s * a.dab;
  return r;
}

// Bias add: shifts the value channel only.
template <class S>
Jet2<S> shift(const Jet2<S>& a, const S& s) {
  Jet2<S> r = a;
  r.v = a.v + s;
  return r;
}

// Chain rule through a C^2 scalar map f applied to a jet:
//   da' = f'(v) da,   dab' = f'(v) dab + f''(v) da db,
// with f = GELU, f' = Phi + x phi, f'' = phi (2 - x^2).
template <class S>
Jet2<S> gelu(const Jet2<S>& x) {
  const S Phi = normcdf_s(x.v);
  Jet2<S> r;
  r.v = x.v * Phi;
  if (detail::structural_zero(x.da) && detail::structural_zero(x.db) &&
      detail::structural_zero(x.dab))
    return r;
  const S phi = normpdf_s(x.v);
  const S g1 = Phi + x.v * phi;
  r.da = g1 * x.da;
  r.db = g1 * x.db;
  if (detail::mixed_enabled(x.v)) {
    const S g2 = phi * (2.0 - x.v * x.v);
    r.dab = g1 * x.dab + g2 * (x.da * x.db);
  }
  return r;
}

inline Jet2d operator*(double s, const Jet2d& a) { return {s * a.v, s * a.da, s * a.db, s * a.dab}; }
inline Jet2d operator*(const Jet2d& a, double s) { return s * a; }
inline Jet2d operator+(const Jet2d& a, double s) { return {a.v + s, a.da, a.db, a.dab}; }
inline Jet2d operator-(const Jet2d& a, double s) { return {a.v - s, a.da, a.db, a.dab}; }

// Standalone op for tests and direct use: GELU applied to a plain jet.
inline Jet2d gelu_jet(const Jet2d& x) { return gelu(x); }

}  // namespace ym
