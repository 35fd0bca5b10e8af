#include "rbsde/geometry.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace rbsde;

namespace {

DomainGeometry unit_disk() { return DomainGeometry::ball(make_vec({0.0, 0.0}), 1.0); }
DomainGeometry unit_box() { return DomainGeometry::box(make_vec({0.0, 0.0}), make_vec({1.0, 2.0})); }

}  // namespace

TEST(Geometry, BallSignedDistanceAndClassification) {
    DomainGeometry d = unit_disk();
    EXPECT_DOUBLE_EQ(signed_distance(d, make_vec({0.0, 0.0})), -1.0);
    EXPECT_DOUBLE_EQ(signed_distance(d, make_vec({2.0, 0.0})), 1.0);
    EXPECT_EQ(classify(d, make_vec({0.3, 0.4})), Location::interior);
    EXPECT_EQ(classify(d, make_vec({0.6, 0.8})), Location::boundary);
    EXPECT_EQ(classify(d, make_vec({1.0, 1.0})), Location::exterior);
}

TEST(Geometry, BallProjectionAndInwardNormal) {
    DomainGeometry d = unit_disk();
    Projection p = boundary_projection(d, make_vec({3.0, 4.0}));
    EXPECT_NEAR(p.proj(0), 0.6, 1e-15);
    EXPECT_NEAR(p.proj(1), 0.8, 1e-15);
    EXPECT_NEAR(p.dist, 4.0, 1e-15);
    EXPECT_NEAR(p.n(0), -0.6, 1e-15);
    EXPECT_NEAR(p.n(1), -0.8, 1e-15);
}

TEST(Geometry, CenterProjectionIsAmbiguousUnlessTieBreak) {
    DomainGeometry d = unit_disk();
    EXPECT_THROW(boundary_projection(d, make_vec({0.0, 0.0})), ProjectionAmbiguous);
    EXPECT_NO_THROW(boundary_projection(d, make_vec({0.0, 0.0}), true));
}

TEST(Geometry, BoxProjectionPicksNearestFaceAndTieBreaksOnLowestIndex) {
    DomainGeometry b = unit_box();
    Projection p = boundary_projection(b, make_vec({0.9, 1.0}));
    EXPECT_NEAR(p.proj(0), 1.0, 1e-15);
    EXPECT_NEAR(p.n(0), -1.0, 1e-15);
    EXPECT_NEAR(p.dist, -0.1, 1e-15);
    // Equidistant from x = 0 and y = 0.
    EXPECT_THROW(boundary_projection(b, make_vec({0.5, 0.5})), ProjectionAmbiguous);
    Projection t = boundary_projection(b, make_vec({0.5, 0.5}), true);
    EXPECT_NEAR(t.n(0), 1.0, 1e-15);
}

TEST(Geometry, ConormalNeedsBoundaryPoint) {
    DomainGeometry d = unit_disk();
    MatrixField A = [](const Vec&) {
        Mat m(2, 2);
        m << 4.0, 0.0, 0.0, 1.0;
        return m;
    };
    Vec g = inward_conormal(d, A, make_vec({1.0, 0.0}));
    EXPECT_NEAR(g(0), -4.0, 1e-14);
    EXPECT_NEAR(g(1), 0.0, 1e-14);
    EXPECT_THROW(inward_conormal(d, A, make_vec({0.5, 0.0})), NotOnBoundary);
}

TEST(Geometry, ReflectionLandsOnBoundaryWithExactPush) {
    DomainGeometry d = unit_disk();
    Mat A(2, 2);
    A << 2.0, 0.3, 0.3, 1.0;
    Vec proposal = make_vec({0.9, 0.6});
    Reflection r = reflect_along_conormal(d, A, proposal);
    EXPECT_NEAR(signed_distance(d, r.landing), 0.0, 1e-12);
    Vec push = r.landing - proposal;
    EXPECT_LT((push - A * r.n * r.dL).norm(), 1e-14);
    EXPECT_GT(r.dL, 0.0);
}

TEST(Geometry, HugeOvershootThrows) {
    DomainGeometry d = unit_disk();
    Mat A = Mat::Identity(2, 2);
    EXPECT_THROW(reflect_along_conormal(d, A, make_vec({10.0, 0.0})), StepTooLarge);
}

TEST(Geometry, VolumesAndDiameters) {
    EXPECT_NEAR(unit_disk().volume(), std::numbers::pi, 1e-14);
    EXPECT_NEAR(unit_box().volume(), 2.0, 1e-14);
    EXPECT_NEAR(unit_disk().diameter(), 2.0, 1e-14);
    EXPECT_NEAR(unit_box().diameter(), std::sqrt(5.0), 1e-14);
}

TEST(Geometry, RadialLevelsetResolvesRadius) {
    DomainGeometry d = DomainGeometry::radial_levelset(make_vec({0.0, 0.0}), [](double r) { return r * r - 0.25; }, 2.0);
    EXPECT_NEAR(d.radius, 0.5, 1e-10);
    EXPECT_EQ(classify(d, make_vec({0.4, 0.0})), Location::interior);
    EXPECT_EQ(classify(d, make_vec({0.6, 0.0})), Location::exterior);
}

TEST(Geometry, SamplesRespectTheDomain) {
    DomainGeometry d = unit_disk();
    auto in = interior_samples(d, 9);
    ASSERT_FALSE(in.empty());
    for (const Vec& x : in) EXPECT_EQ(classify(d, x), Location::interior);
    for (const Vec& x : boundary_samples(d, 16)) EXPECT_NEAR(signed_distance(d, x), 0.0, 1e-12);
    for (const Vec& x : boundary_samples(unit_box(), 16)) EXPECT_NEAR(signed_distance(unit_box(), x), 0.0, 1e-12);
}
