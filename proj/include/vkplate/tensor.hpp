#pragma once

// Small tensor algebra on the plane: the A operator, third-order contractions
// and the interfacial tensors r and s built from the frame (t, nu).

#include <array>

#include "vkplate/numerics.hpp"

namespace vkp {

// Third-order tensor stored as its two derivative slices: D[k] = d_k a.
using Tensor3 = std::array<Mat2, 2>;

inline Vec2 perp(const Vec2& v) { return {-v.y(), v.x()}; }  // e3 x v

inline Mat2 outer(const Vec2& a, const Vec2& b) { return a * b.transpose(); }

inline Mat2 sym(const Mat2& a) { return 0.5 * (a + a.transpose()); }

inline double inner(const Mat2& a, const Mat2& b) { return (a.array() * b.array()).sum(); }

/// A(v x w) = (e3 x v) x (e3 x w), extended linearly: A T = R T R^T.
inline Mat2 apply_A(const Mat2& t) {
  Mat2 r;
  r << t(1, 1), -t(1, 0), -t(0, 1), t(0, 0);
  return r;
}

/// <T, u x v x w> = sum T_ijk u_i v_j w_k with T_ijk = d_k a_ij.
inline double contract3(const Tensor3& d, const Vec2& u, const Vec2& v, const Vec2& w) {
  return w.x() * u.dot(d[0] * v) + w.y() * u.dot(d[1] * v);
}

/// <T, r> with r = t(x)nu(x)t - t(x)t(x)nu + nu(x)t(x)t.
inline double contract_r(const Tensor3& d, const Vec2& t, const Vec2& nu) {
  return contract3(d, t, nu, t) - contract3(d, t, t, nu) + contract3(d, nu, t, t);
}

/// <a, s> with s = nu(x)nu - t(x)t.
inline double contract_s(const Mat2& a, const Vec2& t, const Vec2& nu) {
  return nu.dot(a * nu) - t.dot(a * t);
}

/// Row-wise divergence from derivative slices: (div a)_i = d_j a_ij.
inline Vec2 div3(const Tensor3& d) { return {d[0](0, 0) + d[1](0, 1), d[0](1, 0) + d[1](1, 1)}; }

}  // namespace vkp
