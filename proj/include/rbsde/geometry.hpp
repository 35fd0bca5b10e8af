#pragma once

#include "rbsde/types.hpp"

#include <functional>
#include <vector>

namespace rbsde {

enum class DomainKind { ball, box, radial_levelset };

enum class Location { interior, boundary, exterior };

// Smooth bounded domain. Boxes are a test geometry: corners are not smooth.
struct DomainGeometry {
    DomainKind kind = DomainKind::ball;
    int dim = 2;
    Vec center;                             // ball, radial_levelset
    double radius = 1.0;                    // ball; resolved boundary radius for radial_levelset
    Vec lo, hi;                             // box
    std::function<double(double)> profile;  // radial_levelset: D = {profile(|x - c|) < 0}
    double eps_geom = 1e-10;

    static DomainGeometry ball(const Vec& c, double r);
    static DomainGeometry box(const Vec& lo, const Vec& hi);
    // profile must be increasing on [0, r_max] with profile(0) < 0 < profile(r_max).
    static DomainGeometry radial_levelset(const Vec& c, std::function<double(double)> profile,
                                          double r_max);

    double diameter() const;
    Vec bbox_lo() const;
    Vec bbox_hi() const;
    // Lebesgue measure of D.
    double volume() const;
};

struct Projection {
    Vec proj;
    double dist = 0.0;  // signed: negative inside
    Vec n;              // unit inward normal at proj
};

double signed_distance(const DomainGeometry& dom, const Vec& x);

Location classify(const DomainGeometry& dom, const Vec& x);

// Nearest boundary point. Equidistant faces of a box (or the center of a ball) throw
// ProjectionAmbiguous unless tie_break is set, in which case the lowest coordinate index wins.
Projection boundary_projection(const DomainGeometry& dom, const Vec& x, bool tie_break = false);

// gamma = A(x) n(x); throws NotOnBoundary when |signed_distance(x)| > eps_geom.
Vec inward_conormal(const DomainGeometry& dom, const MatrixField& A, const Vec& x);

// Result of pushing an exterior proposal back onto the boundary along the conormal
// A(x_from) n. push = landing - proposal = A(x_from) * n * dL exactly.
struct Reflection {
    Vec landing;
    Vec n;
    double dL = 0.0;
};

// Caller guarantees the proposal is exterior. Throws StepTooLarge when the overshoot
// exceeds the domain diameter.
Reflection reflect_along_conormal(const DomainGeometry& dom, const Mat& A_from, const Vec& proposal);

// Deterministic probe points: a grid of interior points of D (per_axis per coordinate before masking)
// and n points spread over the boundary.
std::vector<Vec> interior_samples(const DomainGeometry& dom, int per_axis);
std::vector<Vec> boundary_samples(const DomainGeometry& dom, int n);

}  // namespace rbsde
