#pragma once

// Isotropic elasticity, yield functions and the visco-plastic relaxation step.
// Voigt ordering is (xx, yy, xy) with engineering shear strain.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "igabem/errors.hpp"

namespace igabem {

using Voigt = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

enum class PlaneMode { plane_strain, plane_stress };

struct IsotropicMaterial {
  double E = 1.0;
  double nu = 0.0;
  PlaneMode mode = PlaneMode::plane_strain;

  void validate() const {
    if (!(E > 0.0)) throw ModelError("Young's modulus must be positive");
    if (!(nu > -1.0 && nu < 0.5)) {
      if (nu == 0.5 && mode == PlaneMode::plane_strain)
        throw ModelError("Poisson ratio 0.5 gives a singular plane strain material");
      throw ModelError("Poisson ratio must lie in (-1, 0.5)");
    }
  }

  double shear_modulus() const { return E / (2.0 * (1.0 + nu)); }

  /// Poisson ratio seen by the plane strain kernels.
  double kernel_nu() const { return mode == PlaneMode::plane_stress ? nu / (1.0 + nu) : nu; }

  /// sigma_zz = out_of_plane_factor * (sigma_xx + sigma_yy) for elastic states.
  double out_of_plane_factor() const { return mode == PlaneMode::plane_strain ? nu : 0.0; }
};

/// Isotropic constitutive matrix mapping Voigt strain to Voigt stress.
inline Mat3 constitutive(const IsotropicMaterial& m) {
  m.validate();
  Mat3 c = Mat3::Zero();
  const double g = m.shear_modulus();
  if (m.mode == PlaneMode::plane_stress) {
    const double f = m.E / (1.0 - m.nu * m.nu);
    c(0, 0) = c(1, 1) = f;
    c(0, 1) = c(1, 0) = f * m.nu;
  } else {
    const double f = m.E / ((1.0 + m.nu) * (1.0 - 2.0 * m.nu));
    c(0, 0) = c(1, 1) = f * (1.0 - m.nu);
    c(0, 1) = c(1, 0) = f * m.nu;
  }
  c(2, 2) = g;
  return c;
}

/// Initial stress that reproduces the stiffness mismatch of an inclusion:
/// (C_i - C) * strain.
inline Voigt elastic_mismatch_initial_stress(const Mat3& c_inclusion, const Mat3& c_domain,
                                             const Voigt& strain) {
  return (c_inclusion - c_domain) * strain;
}

enum class YieldKind { none, normal_cap, mohr_coulomb };

/// tension: F = sigma_c - limit; both: F = |sigma_c| - limit.
enum class CapMode { tension, both };

struct YieldModel {
  YieldKind kind = YieldKind::none;

  // normal stress cap
  int cap_component = 1;  // 0 = xx, 1 = yy
  CapMode cap_mode = CapMode::both;
  double limit = 0.0;
  /// When positive, the limit is set to this fraction of the largest
  /// |sigma_c| of the first (elastic) solution.
  double auto_fraction = 0.0;

  // Mohr-Coulomb, tension positive
  double friction_deg = 0.0;
  double cohesion = 0.0;
  /// Dilation angle of the plastic potential; negative means associated flow.
  double dilation_deg = -1.0;

  // overstress relaxation
  double viscosity = 1.0;
  double time_step = 1.0;

  bool active() const { return kind != YieldKind::none; }

  void validate() const {
    if (kind == YieldKind::none) return;
    if (!(viscosity > 0.0)) throw ModelError("viscosity must be positive");
    if (!(time_step > 0.0)) throw ModelError("time step must be positive");
    if (kind == YieldKind::normal_cap) {
      if (cap_component < 0 || cap_component > 1)
        throw ModelError("cap component must be x or y");
      if (auto_fraction <= 0.0 && !(limit > 0.0)) throw ModelError("cap limit must be positive");
    } else {
      if (!(friction_deg >= 0.0 && friction_deg < 90.0))
        throw ModelError("friction angle must be in [0, 90) degrees");
      if (!(cohesion >= 0.0)) throw ModelError("cohesion must be non-negative");
      if (dilation_deg >= 90.0) throw ModelError("dilation angle must be below 90 degrees");
    }
  }

  /// Scale of the yield function used for relative tolerances: the cap
  /// limit, or 2 c cos(phi) for Mohr-Coulomb.
  double scale() const {
    if (kind == YieldKind::normal_cap) return limit;
    if (kind == YieldKind::mohr_coulomb)
      return 2.0 * cohesion * std::cos(friction_deg * std::numbers::pi / 180.0);
    return 1.0;
  }
};

namespace detail {

/// Mohr-Coulomb function of angle `angle_deg` and its Voigt gradient. The
/// out-of-plane stress is factor * (sxx + syy).
inline double mohr_coulomb(const Voigt& s, double angle_deg, double cohesion, double factor,
                           Voigt* grad) {
  const double sphi = std::sin(angle_deg * std::numbers::pi / 180.0);
  const double cphi = std::cos(angle_deg * std::numbers::pi / 180.0);
  const double mean = 0.5 * (s(0) + s(1));
  const double half = 0.5 * (s(0) - s(1));
  const double radius = std::hypot(half, s(2));
  // principal stresses with their gradients
  double val[3] = {mean + radius, mean - radius, factor * (s(0) + s(1))};
  Voigt g[3];
  const double c2 = radius > 0.0 ? half / radius : 1.0;
  const double s2 = radius > 0.0 ? s(2) / radius : 0.0;
  g[0] = Voigt(0.5 + 0.5 * c2, 0.5 - 0.5 * c2, s2);
  g[1] = Voigt(0.5 - 0.5 * c2, 0.5 + 0.5 * c2, -s2);
  g[2] = Voigt(factor, factor, 0.0);
  int imax = 0, imin = 0;
  for (int k = 1; k < 3; ++k) {
    if (val[k] > val[imax]) imax = k;
    if (val[k] < val[imin]) imin = k;
  }
  if (imax == imin) imin = (imax + 1) % 3;
  if (grad) *grad = (1.0 + sphi) * g[imax] - (1.0 - sphi) * g[imin];
  return val[imax] * (1.0 + sphi) - val[imin] * (1.0 - sphi) - 2.0 * cohesion * cphi;
}

}  // namespace detail

/// Yield function F (stress units, positive means overstress). For plane
/// strain Mohr-Coulomb the out-of-plane stress enters through
/// `out_of_plane_factor`.
inline double yield_value(const Voigt& s, const YieldModel& y, double out_of_plane_factor = 0.0) {
  switch (y.kind) {
    case YieldKind::none:
      return -1.0;
    case YieldKind::normal_cap: {
      const double v = s(y.cap_component);
      return (y.cap_mode == CapMode::tension ? v : std::abs(v)) - y.limit;
    }
    case YieldKind::mohr_coulomb:
      return detail::mohr_coulomb(s, y.friction_deg, y.cohesion, out_of_plane_factor, nullptr);
  }
  return -1.0;
}

/// Gradient of the plastic potential Q with respect to Voigt stress.
inline Voigt plastic_potential_gradient(const Voigt& s, const YieldModel& y,
                                        double out_of_plane_factor = 0.0) {
  Voigt g = Voigt::Zero();
  switch (y.kind) {
    case YieldKind::none:
      break;
    case YieldKind::normal_cap: {
      const double v = s(y.cap_component);
      g(y.cap_component) = (y.cap_mode == CapMode::both && v < 0.0) ? -1.0 : 1.0;
      break;
    }
    case YieldKind::mohr_coulomb: {
      const double psi = y.dilation_deg < 0.0 ? y.friction_deg : y.dilation_deg;
      detail::mohr_coulomb(s, psi, y.cohesion, out_of_plane_factor, &g);
      break;
    }
  }
  return g;
}

/// Explicit overstress step: zero when F <= 0, otherwise
/// C * (dt / eta) * F * dQ/dsigma.
inline Voigt viscoplastic_step(const Voigt& s, const YieldModel& y, const Mat3& c,
                               double out_of_plane_factor = 0.0) {
  const double f = yield_value(s, y, out_of_plane_factor);
  if (!(f > 0.0)) return Voigt::Zero();
  const Voigt rate =
      (y.time_step / y.viscosity) * f * plastic_potential_gradient(s, y, out_of_plane_factor);
  return c * rate;
}

/// Heuristic stable time step for von Mises type surfaces,
/// 4 (1 + nu) eta / (3 E).
inline double suggested_time_step(const IsotropicMaterial& m, double viscosity) {
  return 4.0 * (1.0 + m.nu) * viscosity / (3.0 * m.E);
}

}  // namespace igabem
