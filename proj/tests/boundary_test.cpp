#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "igabem/boundary.hpp"

using namespace igabem;

namespace {

NurbsCurve line(Vec2 a, Vec2 b) { return NurbsCurve(1, {0, 0, 1, 1}, {a, b}); }

NurbsBasis linear_basis() { return NurbsBasis(1, {0, 0, 1, 1}); }
NurbsBasis band_basis(double a, double b) { return NurbsBasis(2, {0, 0, 0, a, a, b, b, 1, 1, 1}); }

DirectionCondition fixed(std::vector<double> v = {}) { return {BcType::displacement, std::move(v)}; }
DirectionCondition load(std::vector<double> v = {}) { return {BcType::traction, std::move(v)}; }

// Unit cube, counterclockwise from the top edge: top, left, bottom, right.
std::vector<Patch> cube_patches() {
  std::vector<Patch> p(4);
  p[0] = {"top", line({1, 1}, {0, 1}), linear_basis(), {}, {}};
  p[1] = {"left", line({0, 1}, {0, 0}), band_basis(0.34, 0.67), {}, {}};
  p[2] = {"bottom", line({0, 0}, {1, 0}), linear_basis(), {}, {}};
  p[3] = {"right", line({1, 0}, {1, 1}), band_basis(0.33, 0.66), {}, {}};
  return p;
}

// Displacement coefficients of a linear field on a straight patch are the
// field values at the Greville points.
template <class F>
std::vector<double> coefs(const Patch& p, int c, F f) {
  std::vector<double> v;
  for (double g : p.field.greville()) v.push_back(f(p.geometry.evaluate(g))(c));
  return v;
}

const IsotropicMaterial kUnitPlaneStress{1.0, 0.0, PlaneMode::plane_stress};
const IsotropicMaterial kSteelish{200.0, 0.3, PlaneMode::plane_strain};

std::vector<Patch> circle_patches(double w) {
  const std::vector<double> knots = {0, 0, 0, 0.5, 0.5, 1, 1, 1};
  const std::vector<double> weights = {1, w, 1, w, 1};
  std::vector<Patch> p(2);
  p[0].name = "right";
  p[0].geometry = NurbsCurve(2, knots, {{0.5, 1}, {1, 1}, {1, 0.5}, {1, 0}, {0.5, 0}}, weights);
  p[1].name = "left";
  p[1].geometry = NurbsCurve(2, knots, {{0.5, 0}, {0, 0}, {0, 0.5}, {0, 1}, {0.5, 1}}, weights);
  for (Patch& q : p) q.field = q.geometry.basis();
  return p;
}

}  // namespace

TEST(Collocation, GrevillePoints) {
  EXPECT_EQ(linear_basis().greville(), (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(NurbsBasis(2, {0, 0, 0, 1, 1, 1}).greville(), (std::vector<double>{0.0, 0.5, 1.0}));
}

TEST(Collocation, CubeLoopSharesCorners) {
  std::vector<Patch> p = cube_patches();
  p[2].bc = {fixed(), fixed()};
  const BoundaryModel m(p, DomainKind::finite, kUnitPlaneStress);
  EXPECT_EQ(m.point_count(), 2u + 7u + 2u + 7u - 4u);
  EXPECT_EQ(m.point_of(0, 1), m.point_of(1, 0));
  EXPECT_EQ(m.point_of(3, 6), m.point_of(0, 0));
  int restrained = 0;
  for (const CollocationPoint& cp : m.points()) {
    if (cp.restrained[0]) {
      ++restrained;
      EXPECT_EQ(cp.y.y(), 0.0);
      EXPECT_TRUE(cp.restrained[1]);
    }
  }
  EXPECT_EQ(restrained, 2);
  // interior point of the left patch at the Greville abscissa 0.17
  const CollocationPoint& cp = m.points()[m.point_of(1, 1)];
  EXPECT_NEAR(cp.y.y(), 1.0 - 0.17, 1e-15);
  double sum = 0.0;
  for (const auto& c : cp.combination) sum += c.second;
  EXPECT_NEAR(sum, 1.0, 1e-15);
}

TEST(Collocation, OpenBoundaryAndOrientationErrors) {
  std::vector<Patch> p = cube_patches();
  p.pop_back();
  EXPECT_THROW(BoundaryModel(p, DomainKind::finite, kUnitPlaneStress), ModelError);
  EXPECT_THROW(BoundaryModel(cube_patches(), DomainKind::infinite, kUnitPlaneStress), ModelError);
  EXPECT_THROW(BoundaryModel(circle_patches(std::sqrt(0.5)), DomainKind::finite, kUnitPlaneStress), ModelError);
  std::vector<Patch> q = cube_patches();
  q[1].bc[0] = fixed({0, 0, 0});
  EXPECT_THROW(BoundaryModel(q, DomainKind::finite, kUnitPlaneStress), ModelError);
}

TEST(Assembly, RigidBodyRowSums) {
  std::vector<Patch> p = cube_patches();
  p[2].bc = {fixed(), fixed()};
  const BoundaryModel m(p, DomainKind::finite, kSteelish);
  const BoundarySystem sys(m);
  const auto n = static_cast<Eigen::Index>(m.point_count());
  Eigen::VectorXd tx = Eigen::VectorXd::Zero(2 * n), ty = tx, rot = tx;
  for (Eigen::Index k = 0; k < n; ++k) {
    tx(2 * k) = 1.0;
    ty(2 * k + 1) = 1.0;
  }
  EXPECT_LT((sys.H() * tx).lpNorm<Eigen::Infinity>(), 1e-8);
  EXPECT_LT((sys.H() * ty).lpNorm<Eigen::Infinity>(), 1e-8);
  // a rigid rotation is exactly representable on straight patches and is
  // traction free, so its rows vanish up to quadrature error
  for (std::size_t pp = 0; pp < m.patches().size(); ++pp) {
    const Patch& q = m.patches()[pp];
    const auto g = q.field.greville();
    for (std::size_t k = 0; k < g.size(); ++k) {
      const Vec2 x = q.geometry.evaluate(g[k]);
      rot.segment<2>(2 * m.point_of(static_cast<int>(pp), static_cast<int>(k))) = Vec2(-x.y(), x.x());
    }
  }
  EXPECT_LT((sys.H() * rot).lpNorm<Eigen::Infinity>(), 1e-8);
}

TEST(Assembly, UniformStressPatchTest) {
  // sigma_y = 1 with the left side held in x and the bottom in y
  std::vector<Patch> p = cube_patches();
  p[0].bc[1] = load({1.0, 1.0});
  p[1].bc[0] = fixed();
  p[2].bc[1] = fixed();
  const BoundaryModel m(p, DomainKind::finite, kSteelish);
  const BoundarySystem sys(m);
  const BoundarySolution s = sys.solve();
  const double nu = kSteelish.nu, E = kSteelish.E;
  const Vec2 strain(-nu * (1 + nu) / E, (1 - nu * nu) / E);
  for (std::size_t k = 0; k < m.point_count(); ++k) {
    const Vec2 y = m.points()[k].y;
    const Vec2 exact(strain(0) * y.x(), strain(1) * y.y());
    EXPECT_LT((m.point_displacement(s, k) - exact).norm(), 1e-10) << y.transpose();
  }
  // reactions: t_y = -1 along the bottom, t_x = 0 along the left side
  for (double u : {0.0, 0.3, 1.0}) {
    EXPECT_NEAR(m.sample(s, 2, u).traction.y(), -1.0, 1e-9);
    EXPECT_NEAR(m.sample(s, 1, u).traction.x(), 0.0, 1e-9);
  }
  // displacement slope along each side is grad(u) * tangent
  for (int pp = 0; pp < 4; ++pp)
    for (double u : {0.1, 0.5, 0.9}) {
      const auto smp = m.sample(s, pp, u);
      EXPECT_LT((smp.slope - strain.cwiseProduct(smp.tangent)).norm(), 1e-10);
      EXPECT_NEAR(smp.tangent.norm(), 1.0, 1e-14);
    }
  // internal strain equals C^-1 sigma
  for (const Vec2& y : {Vec2(0.5, 0.5), Vec2(0.2, 0.9)}) {
    const Voigt eps = m.strain_operator(y).apply(s);
    EXPECT_LT((eps - Voigt(strain(0), strain(1), 0.0)).norm(), 1e-6 * strain.norm());
    const Vec2 u = m.displacement_operator(y).apply(s);
    EXPECT_LT((u - Vec2(strain(0) * y.x(), strain(1) * y.y())).norm(), 1e-8);
  }
}

TEST(Assembly, SuperpositionAndScaling) {
  auto solve = [](double a, double b) {
    std::vector<Patch> p = cube_patches();
    p[0].bc[1] = load({a, -a});
    p[0].bc[0] = load({b, b});
    p[2].bc = {fixed(), fixed()};
    const BoundaryModel m(p, DomainKind::finite, kSteelish);
    return BoundarySystem(m).solve().u;
  };
  const Eigen::VectorXd ua = solve(1.0, 0.0), ub = solve(0.0, 1.0), uab = solve(2.0, -3.0);
  EXPECT_LT((uab - 2.0 * ua + 3.0 * ub).norm(), 1e-10 * uab.norm());
}

TEST(Assembly, LinearMomentLoadIsExact) {
  // linearly varying end traction with the bottom fixed: with nu = 0 the
  // displacement is u = (-y^2 / 2, (x - 1/2) y), inside the discrete space
  std::vector<Patch> p = cube_patches();
  p[0].bc[1] = load({0.5, -0.5});
  p[2].bc = {fixed(), fixed()};
  const BoundaryModel m(p, DomainKind::finite, kUnitPlaneStress);
  const BoundarySolution s = BoundarySystem(m).solve();
  double worst = 0.0;
  for (std::size_t k = 0; k < m.point_count(); ++k) {
    const Vec2 y = m.points()[k].y;
    worst = std::max(worst, (m.point_displacement(s, k) - Vec2(-0.5 * y.y() * y.y(), (y.x() - 0.5) * y.y())).norm());
  }
  EXPECT_LT(worst, 1e-9);
  const Voigt eps = m.strain_operator(Vec2(0.3, 0.4)).apply(s);
  EXPECT_LT((eps - Voigt(0.0, 0.3 - 0.5, 0.0)).norm(), 1e-7);
}

TEST(Assembly, PureTractionProblemIsSingular) {
  std::vector<Patch> p = cube_patches();
  p[0].bc[1] = load({1.0, 1.0});
  p[2].bc[1] = load({-1.0, -1.0});
  const BoundaryModel m(p, DomainKind::finite, kSteelish);
  try {
    BoundarySystem sys(m);
    FAIL() << "expected a solver error";
  } catch (const SolverError& e) {
    EXPECT_NE(std::string(e.what()).find("rigid-body"), std::string::npos) << e.what();
  }
}

TEST(Assembly, PrescribedTranslationGivesInternalTranslation) {
  std::vector<Patch> p = cube_patches();
  for (Patch& q : p) {
    const std::size_t n = q.field.size();
    q.bc = {fixed(std::vector<double>(n, 0.3)), fixed(std::vector<double>(n, -0.7))};
  }
  const BoundaryModel m(p, DomainKind::finite, kSteelish);
  const BoundarySolution s = BoundarySystem(m).solve();
  EXPECT_LT(s.t.lpNorm<Eigen::Infinity>(), 1e-8);
  for (const Vec2& y : {Vec2(0.5, 0.5), Vec2(0.1, 0.8)}) {
    EXPECT_LT((m.displacement_operator(y).apply(s) - Vec2(0.3, -0.7)).norm(), 1e-8);
    EXPECT_LT(m.strain_operator(y).apply(s).norm(), 1e-8);
  }
}

TEST(Assembly, PrescribedRotationGivesZeroStrain) {
  std::vector<Patch> p = cube_patches();
  const double w = 1e-3;
  for (Patch& q : p) {
    auto rot = [&](const Vec2& x) { return Vec2(-w * x.y(), w * x.x()); };
    q.bc = {fixed(coefs(q, 0, rot)), fixed(coefs(q, 1, rot))};
  }
  const BoundaryModel m(p, DomainKind::finite, kSteelish);
  const BoundarySolution s = BoundarySystem(m).solve();
  const Voigt eps = m.strain_operator(Vec2(0.4, 0.6)).apply(s);
  EXPECT_LT(eps.norm(), 1e-8 * w / 1e-3);
}

TEST(Assembly, InternalPointTooCloseThrows) {
  std::vector<Patch> p = cube_patches();
  p[2].bc = {fixed(), fixed()};
  const BoundaryModel m(p, DomainKind::finite, kSteelish);
  EXPECT_THROW(m.strain_operator(Vec2(0.5, 1e-6)), DomainError);
}

TEST(InfiniteDomain, HydrostaticHoleLoad) {
  // t = sigma . n with sigma = I on a hole of radius a: the exact response is
  // the Lame solution u = -a / (2G) (x - c) / a, linear and hence exact
  std::vector<Patch> p = circle_patches(std::sqrt(0.5));
  for (Patch& q : p) q.stress_load = Voigt(1, 1, 0);
  const IsotropicMaterial mat{100.0, 0.0, PlaneMode::plane_strain};
  const BoundaryModel m(p, DomainKind::infinite, mat);
  const BoundarySolution s = BoundarySystem(m).solve();
  const double G = mat.shear_modulus();
  const Vec2 c(0.5, 0.5);
  for (std::size_t k = 0; k < m.point_count(); ++k) {
    const Vec2 y = m.points()[k].y;
    EXPECT_LT((m.point_displacement(s, k) + (y - c) / (2 * G)).norm(), 1e-7) << y.transpose();
  }
  // outside the hole the Lame field decays like a^2 / r
  const Vec2 y(0.5, 1.5);
  EXPECT_LT((m.displacement_operator(y).apply(s) - Vec2(0.0, -0.25 / (2 * G))).norm(), 1e-7);
}

TEST(InfiniteDomain, VerticalHoleLoadIsSymmetric) {
  std::vector<Patch> p = circle_patches(std::sqrt(0.5));
  for (Patch& q : p) q.stress_load = Voigt(0, 1, 0);
  const IsotropicMaterial mat{100.0, 0.0, PlaneMode::plane_strain};
  const BoundaryModel m(p, DomainKind::infinite, mat);
  const BoundarySolution s = BoundarySystem(m).solve();
  Vec2 top = Vec2::Zero(), bottom = Vec2::Zero();
  for (std::size_t k = 0; k < m.point_count(); ++k) {
    if ((m.points()[k].y - Vec2(0.5, 1.0)).norm() < 1e-12) top = m.point_displacement(s, k);
    if ((m.points()[k].y - Vec2(0.5, 0.0)).norm() < 1e-12) bottom = m.point_displacement(s, k);
  }
  EXPECT_LT((top + bottom).norm(), 1e-8);
  EXPECT_NEAR(top.x(), 0.0, 1e-8);
  // Kirsch perturbation with the sign reversed: u_y(top) = -S a (1 + kappa) / (4G)
  const double expected = -0.5 * (1.0 + 3.0) / (4.0 * mat.shear_modulus());
  EXPECT_NEAR(top.y(), expected, 0.05 * std::abs(expected));
}
