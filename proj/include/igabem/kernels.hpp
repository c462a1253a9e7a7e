#pragma once

// Kelvin fundamental solutions of 2D elastostatics. Arguments follow the
// boundary integral convention: y is the source (collocation or internal)
// point, x the field point, r = x - y, and n the unit normal at x.
//
//   U(y,x)  displacement at x per unit force at y (symmetric 2x2)
//   T(y,x)  traction on a surface with normal n at x
//   S(y,x)  Voigt strain at y generated by the U-term, rows (xx, yy, xy)
//   R(y,x)  Voigt strain at y generated by the T-term
//
// S and R are the symmetric y-gradients of U and T, so that
//   u_i(y) = int U_ij t_j - int T_ij u_j + int U_ij b_j
//   eps(y) = int S t - int R u + int S b.
// Plane stress uses the plane strain formulas with nu / (1 + nu).

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "igabem/errors.hpp"
#include "igabem/material.hpp"
#include "igabem/nurbs.hpp"

namespace igabem {

using Mat32 = Eigen::Matrix<double, 3, 2>;

class Kernels {
 public:
  Kernels() : Kernels(IsotropicMaterial{}) {}

  explicit Kernels(const IsotropicMaterial& m) : material_(m) {
    m.validate();
    nu_ = m.kernel_nu();
    const double g = m.shear_modulus();
    cu_ = 1.0 / (8.0 * std::numbers::pi * g * (1.0 - nu_));
    ct_ = -1.0 / (4.0 * std::numbers::pi * (1.0 - nu_));
    a_ = 3.0 - 4.0 * nu_;
    b_ = 1.0 - 2.0 * nu_;
  }

  const IsotropicMaterial& material() const { return material_; }

  Mat2 U(const Vec2& y, const Vec2& x) const {
    double r = 0.0;
    const Vec2 d = direction(y, x, r);
    Mat2 u;
    const double lg = a_ * std::log(1.0 / r);
    u(0, 0) = cu_ * (lg + d(0) * d(0));
    u(1, 1) = cu_ * (lg + d(1) * d(1));
    u(0, 1) = u(1, 0) = cu_ * d(0) * d(1);
    return u;
  }

  Mat2 T(const Vec2& y, const Vec2& x, const Vec2& n) const {
    double r = 0.0;
    const Vec2 d = direction(y, x, r);
    const double q = d.dot(n);
    const double f = ct_ / r;
    Mat2 t;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        t(i, j) = f * (q * ((i == j ? b_ : 0.0) + 2.0 * d(i) * d(j)) -
                       b_ * (d(i) * n(j) - d(j) * n(i)));
    return t;
  }

  Mat32 S(const Vec2& y, const Vec2& x) const {
    double r = 0.0;
    const Vec2 d = direction(y, x, r);
    const double f = cu_ / r;
    // g[i][j][l] = dU_ij / dy_l
    double g[2][2][2];
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int l = 0; l < 2; ++l)
          g[i][j][l] = f * ((i == j ? a_ * d(l) : 0.0) - (i == l ? d(j) : 0.0) -
                            (j == l ? d(i) : 0.0) + 2.0 * d(i) * d(j) * d(l));
    return to_voigt(g);
  }

  Mat32 R(const Vec2& y, const Vec2& x, const Vec2& n) const {
    double r = 0.0;
    const Vec2 d = direction(y, x, r);
    const double q = d.dot(n);
    const double f = ct_ / (r * r);
    double g[2][2][2];
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        const double aij = (i == j ? b_ : 0.0) + 2.0 * d(i) * d(j);
        const double m = q * aij - b_ * (d(i) * n(j) - d(j) * n(i));
        for (int l = 0; l < 2; ++l) {
          const double pil = (i == l ? 1.0 : 0.0) - d(i) * d(l);
          const double pjl = (j == l ? 1.0 : 0.0) - d(j) * d(l);
          g[i][j][l] = f * (d(l) * m - (n(l) - q * d(l)) * aij -
                            2.0 * q * (pil * d(j) + d(i) * pjl) + b_ * (pil * n(j) - pjl * n(i)));
        }
      }
    }
    return to_voigt(g);
  }

 private:
  static Vec2 direction(const Vec2& y, const Vec2& x, double& r) {
    const Vec2 diff = x - y;
    r = diff.norm();
    const double scale = std::max({1.0, std::abs(y(0)), std::abs(y(1))});
    if (!(r > 1e-14 * scale)) throw SingularityError("kernel evaluated at coincident points");
    return diff / r;
  }

  static Mat32 to_voigt(const double (&g)[2][2][2]) {
    Mat32 s;
    for (int j = 0; j < 2; ++j) {
      s(0, j) = g[0][j][0];
      s(1, j) = g[1][j][1];
      s(2, j) = g[0][j][1] + g[1][j][0];
    }
    return s;
  }

  IsotropicMaterial material_;
  double nu_ = 0.0;
  double cu_ = 0.0;
  double ct_ = 0.0;
  double a_ = 0.0;
  double b_ = 0.0;
};

inline Mat2 kernel_U(const Vec2& y, const Vec2& x, const IsotropicMaterial& m) {
  return Kernels(m).U(y, x);
}
inline Mat2 kernel_T(const Vec2& y, const Vec2& x, const Vec2& n, const IsotropicMaterial& m) {
  return Kernels(m).T(y, x, n);
}
inline Mat32 kernel_S(const Vec2& y, const Vec2& x, const IsotropicMaterial& m) {
  return Kernels(m).S(y, x);
}
inline Mat32 kernel_R(const Vec2& y, const Vec2& x, const Vec2& n, const IsotropicMaterial& m) {
  return Kernels(m).R(y, x, n);
}

}  // namespace igabem
