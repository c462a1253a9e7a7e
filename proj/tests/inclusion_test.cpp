#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "igabem/inclusion.hpp"

using namespace igabem;

namespace {

NurbsCurve line(Vec2 a, Vec2 b) { return NurbsCurve(1, {0, 0, 1, 1}, {a, b}); }

Inclusion unit_square() { return Inclusion("square", line({0, 0}, {1, 0}), line({0, 1}, {1, 1}), {}); }

Inclusion band() { return Inclusion("band", line({0, 0.33}, {1, 0.33}), line({0, 0.66}, {1, 0.66}), {}); }

// Quarter annulus between radii 1 and 2, both arcs exact rational quadratics.
Inclusion quarter_annulus() {
  const double w = std::sqrt(0.5);
  auto arc = [&](double r) {
    return NurbsCurve(2, {0, 0, 0, 1, 1, 1}, {{r, 0}, {r, r}, {0, r}}, {1, w, 1});
  };
  return Inclusion("annulus", arc(1.0), arc(2.0), {});
}

// Sums over the four boundary segments with an n-point rule per segment.
template <class F>
void loop_integral(const Inclusion& inc, int n, F f) {
  const QuadratureRule& rule = gauss_legendre(n);
  for (InclusionSegment seg : kInclusionSegments) {
    if (inc.segment_degenerate(seg)) continue;
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const BoundaryTrace tr = inc.boundary_trace(seg, rule.points[i]);
      f(tr, rule.weights[i] * tr.jacobian);
    }
  }
}

}  // namespace

TEST(InclusionMap, UnitSquareIsIdentity) {
  const Inclusion sq = unit_square();
  for (double s : {0.0, 0.3, 1.0})
    for (double t : {0.0, 0.7, 1.0}) EXPECT_LT((sq.map(s, t) - Vec2(s, t)).norm(), 1e-15);
}

TEST(InclusionMap, BandMidpoint) {
  const Vec2 p = band().map(0.5, 0.5);
  EXPECT_NEAR(p.x(), 0.5, 1e-15);
  EXPECT_NEAR(p.y(), 0.495, 1e-15);
}

TEST(InclusionMap, BottomEdgeIsCurveI) {
  const Inclusion inc = quarter_annulus();
  for (double s : {0.0, 0.25, 0.9}) EXPECT_EQ(inc.map(s, 0.0), inc.curve_I().evaluate(s));
}

TEST(InclusionMap, OutOfRangeThrows) { EXPECT_THROW(unit_square().map(1.2, 0.5), DomainError); }

TEST(InclusionJacobian, UnitSquareAndBand) {
  const auto [j, det] = unit_square().jacobian(0.4, 0.6);
  EXPECT_LT((j - Mat2::Identity()).norm(), 1e-15);
  EXPECT_DOUBLE_EQ(det, 1.0);
  EXPECT_NEAR(band().jacobian(0.2, 0.9).second, 0.33, 1e-15);
}

TEST(InclusionJacobian, MatchesFiniteDifferences) {
  const Inclusion inc = quarter_annulus();
  const double h = 1e-6;
  for (double s : {0.2, 0.6})
    for (double t : {0.3, 0.8}) {
      const Mat2 j = inc.jacobian(s, t).first;
      const Vec2 ds = (inc.map(s + h, t) - inc.map(s - h, t)) / (2 * h);
      const Vec2 dt = (inc.map(s, t + h) - inc.map(s, t - h)) / (2 * h);
      EXPECT_LT((j.row(0).transpose() - ds).norm(), 1e-8);
      EXPECT_LT((j.row(1).transpose() - dt).norm(), 1e-8);
    }
}

TEST(InclusionJacobian, ReversedCurvesAreSwapped) {
  // listing order with the upper curve first gives a negative blend
  const Inclusion inc("band", line({0, 0.66}, {1, 0.66}), line({0, 0.33}, {1, 0.33}), {});
  EXPECT_TRUE(inc.swapped());
  EXPECT_NEAR(inc.jacobian(0.5, 0.5).second, 0.33, 1e-15);
  EXPECT_FALSE(band().swapped());
}

TEST(InclusionJacobian, FoldedMapThrows) {
  EXPECT_THROW(Inclusion("fold", line({0, 0}, {1, 0}), line({1, 1}, {0, 1}), {}), ModelError);
  EXPECT_THROW(Inclusion("flat", line({0, 0}, {1, 0}), line({0, 0}, {1, 0}), {}), ModelError);
}

TEST(InclusionBoundary, SquareTraces) {
  const Inclusion sq = unit_square();
  const BoundaryTrace e1 = sq.boundary_trace(InclusionSegment::edge_1, 0.0);
  EXPECT_LT((e1.point - Vec2(0, 0.5)).norm(), 1e-15);
  EXPECT_LT((e1.normal - Vec2(-1, 0)).norm(), 1e-15);
  EXPECT_DOUBLE_EQ(e1.jacobian, 0.5);
  const BoundaryTrace c1 = sq.boundary_trace(InclusionSegment::curve_I, 0.0);
  EXPECT_LT((c1.point - Vec2(0.5, 0)).norm(), 1e-15);
  EXPECT_LT((c1.normal - Vec2(0, -1)).norm(), 1e-15);
  const BoundaryTrace c2 = sq.boundary_trace(InclusionSegment::curve_II, -1.0);
  EXPECT_LT((c2.point - Vec2(1, 1)).norm(), 1e-15);
  EXPECT_LT((c2.normal - Vec2(0, 1)).norm(), 1e-15);
}

TEST(InclusionBoundary, NormalIntegratesToZero) {
  for (const Inclusion& inc : {unit_square(), band(), quarter_annulus()}) {
    Vec2 sum = Vec2::Zero();
    loop_integral(inc, 16, [&](const BoundaryTrace& tr, double w) { sum += tr.normal * w; });
    EXPECT_LT(sum.norm(), 1e-10) << inc.name();
  }
}

TEST(InclusionBoundary, PositionFluxIsTwiceArea) {
  const Vec2 origin(0.3, -0.2);
  for (const Inclusion& inc : {unit_square(), band(), quarter_annulus()}) {
    double flux = 0.0;
    loop_integral(inc, 16, [&](const BoundaryTrace& tr, double w) { flux += tr.normal.dot(tr.point - origin) * w; });
    EXPECT_NEAR(flux, 2.0 * inc.area(), 1e-10) << inc.name();
  }
}

TEST(InclusionBoundary, NormalsPointOutward) {
  const Inclusion inc = quarter_annulus();
  for (InclusionSegment seg : kInclusionSegments)
    for (double xi : {-0.8, 0.0, 0.8}) {
      const BoundaryTrace tr = inc.boundary_trace(seg, xi);
      // the outward side is left empty: a small step along n leaves the region
      const InclusionLocation in = inc.locate(tr.point - 1e-3 * tr.normal);
      const InclusionLocation out = inc.locate(tr.point + 1e-3 * tr.normal);
      EXPECT_TRUE(in.inside) << segment_name(seg);
      EXPECT_FALSE(out.inside) << segment_name(seg);
    }
}

TEST(InclusionArea, MatchesAnalytic) {
  EXPECT_NEAR(unit_square().area(), 1.0, 1e-14);
  EXPECT_NEAR(band().area(), 0.33, 1e-14);
  // rational arcs are exact circles, so the area is a quarter annulus
  EXPECT_NEAR(quarter_annulus().area(), 0.25 * std::numbers::pi * 3.0, 1e-12);
}

TEST(InclusionLocate, RecoversParameters) {
  const Inclusion inc = quarter_annulus();
  for (double s : {0.0, 0.37, 1.0})
    for (double t : {0.0, 0.5, 1.0}) {
      const InclusionLocation loc = inc.locate(inc.map(s, t));
      EXPECT_TRUE(loc.inside);
      EXPECT_LT((loc.st - Vec2(s, t)).norm(), 1e-9);
    }
  const InclusionLocation far = inc.locate(Vec2(5, 5));
  EXPECT_FALSE(far.inside);
  EXPECT_NEAR(far.distance, std::hypot(5.0, 5.0) - 2.0, 1e-8);
}
