#pragma once

#include <array>
#include <cmath>

#include "tailgarch/common.hpp"

namespace tailgarch {

/// Dense symmetric 3x3 matrix in row-major order.
struct Mat3 {
  std::array<double, 9> m{};

  double& operator()(int i, int j) { return m[3 * i + j]; }
  double operator()(int i, int j) const { return m[3 * i + j]; }

  static Mat3 zero() { return {}; }
  static Mat3 identity() {
    Mat3 out;
    out(0, 0) = out(1, 1) = out(2, 2) = 1.0;
    return out;
  }

  double trace() const { return m[0] + m[4] + m[8]; }

  std::array<double, 3> apply(const std::array<double, 3>& v) const {
    return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
            m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
            m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
  }

  /// Rank-one update: self += scale * v v'.
  void add_outer(const std::array<double, 3>& v, double scale) {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) (*this)(i, j) += scale * v[i] * v[j];
  }

  void scale(double c) {
    for (double& x : m) x *= c;
  }
};

struct EigenDecomposition {
  std::array<double, 3> values;   ///< ascending
  Mat3 vectors;                   ///< columns are eigenvectors
};

/// Cyclic Jacobi rotations; ample for symmetric 3x3 input.
inline EigenDecomposition eigen_sym3(Mat3 a) {
  Mat3 v = Mat3::identity();
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = std::fabs(a(0, 1)) + std::fabs(a(0, 2)) + std::fabs(a(1, 2));
    if (off == 0.0) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < 3; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < 3; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < 3; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  EigenDecomposition out;
  out.values = {a(0, 0), a(1, 1), a(2, 2)};
  out.vectors = v;
  // Sort eigenpairs ascending.
  for (int i = 0; i < 2; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      if (out.values[j] < out.values[i]) {
        std::swap(out.values[i], out.values[j]);
        for (int k = 0; k < 3; ++k)
          std::swap(out.vectors(k, i), out.vectors(k, j));
      }
    }
  }
  return out;
}

struct InversionResult {
  Mat3 inverse;
  bool floored = false;  ///< an eigenvalue was raised to the floor
};

/// Inverse by symmetric eigendecomposition. Eigenvalues below
/// floor_rel * trace are raised to the floor so near-singular inputs
/// invert, with the event reported in the flag.
inline InversionResult invert_spd(const Mat3& matrix,
                                  double floor_rel = 1e-12) {
  const EigenDecomposition eig = eigen_sym3(matrix);
  const double floor_abs = floor_rel * std::fabs(matrix.trace());
  if (!(floor_abs > 0.0))
    throw numerical_rank_error("invert_spd: matrix has zero trace");

  InversionResult out;
  std::array<double, 3> inv_values;
  for (int i = 0; i < 3; ++i) {
    double value = eig.values[i];
    if (value < floor_abs) {
      value = floor_abs;
      out.floored = true;
    }
    inv_values[i] = 1.0 / value;
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double sum = 0.0;
      for (int k = 0; k < 3; ++k)
        sum += eig.vectors(i, k) * inv_values[k] * eig.vectors(j, k);
      out.inverse(i, j) = sum;
    }
  }
  return out;
}

} // namespace tailgarch
