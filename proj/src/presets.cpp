#include "rbsde/presets.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace rbsde {

namespace {

using Params = std::map<std::string, double>;

double take(const Params& p, const std::string& key, double fallback) {
    auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

void reject_unknown(const std::string& preset, const Params& p, const std::vector<std::string>& allowed) {
    for (const auto& [k, v] : p)
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
            throw ConfigError("preset '" + preset + "' has no parameter '" + k + "'");
}

SmoothField constant_field(double c) {
    return {[c](const Vec&) { return c; }, [](const Vec& x) { return Vec(Vec::Zero(x.size())); },
            [](const Vec& x) { return Mat(Mat::Zero(x.size(), x.size())); }};
}

SmoothField square_norm() {
    return {[](const Vec& x) { return x.squaredNorm(); }, [](const Vec& x) { return Vec(2.0 * x); },
            [](const Vec& x) { return Mat(2.0 * Mat::Identity(x.size(), x.size())); }};
}

Preset base(const std::string& name, const std::string& desc, ProblemForm form, double q0) {
    Preset p;
    p.name = name;
    p.description = desc;
    p.spec.dom = DomainGeometry::ball(make_vec({0.0, 0.0}), 1.0);
    p.spec.coeffs = CoefficientSet::isotropic(2, 1.0, q0);
    p.spec.form = form;
    p.points = five_point_stencil(make_vec({0.0, 0.0}), 0.5);
    return p;
}

Nonlinearity c_minus_y(double c, double slope) {
    return Nonlinearity::linear_in_y([c](const Vec&) { return c; }, slope, 1.0 + 1e-9);
}

}  // namespace

std::vector<Vec> five_point_stencil(const Vec& c, double r) {
    std::vector<Vec> pts = {c};
    for (int a = 0; a < c.size(); ++a) {
        for (double sgn : {1.0, -1.0}) {
            Vec x = c;
            x(a) += sgn * r;
            pts.push_back(x);
        }
    }
    // Order: center, +x, +y, -x, -y (2-d).
    if (c.size() == 2) return {pts[0], pts[1], pts[3], pts[2], pts[4]};
    return pts;
}

std::vector<std::string> preset_names() {
    return {"constant_linear", "quadratic_linear", "zero_linear",     "q_zero",  "fixed_point",
            "constant_semilinear", "manufactured_semilinear", "cubic", "mixed_hbar", "mixed_zero_bhat",
            "singular_bhat"};
}

Preset make_preset(const std::string& name, const Params& params) {
    if (name == "constant_linear") {
        reject_unknown(name, params, {"F"});
        double F = take(params, "F", 1.0);
        Preset p = base(name, "Q=-1, F_data=F, phi=0; exact u = -F", ProblemForm::linear, -1.0);
        p.spec.F_data = [F](const Vec&) { return F; };
        p.exact = constant_field(-F);
        return p;
    }
    if (name == "quadratic_linear") {
        reject_unknown(name, params, {});
        Preset p = base(name, "Q=-1, F_data=2-|x|^2, phi=-1; exact u = |x|^2", ProblemForm::linear, -1.0);
        p.spec.F_data = [](const Vec& x) { return 2.0 - x.squaredNorm(); };
        p.spec.phi = [](const Vec&) { return -1.0; };
        p.exact = square_norm();
        return p;
    }
    if (name == "zero_linear") {
        reject_unknown(name, params, {});
        Preset p = base(name, "Q=-1, F_data=0, phi=0; exact u = 0", ProblemForm::linear, -1.0);
        p.spec.F_data = [](const Vec&) { return 0.0; };
        p.exact = constant_field(0.0);
        return p;
    }
    if (name == "q_zero") {
        reject_unknown(name, params, {});
        Preset p = base(name, "Q=0, F_data=1, phi=0; the gauge diverges", ProblemForm::linear, 0.0);
        p.spec.F_data = [](const Vec&) { return 1.0; };
        return p;
    }
    if (name == "fixed_point") {
        reject_unknown(name, params, {"c"});
        double c = take(params, "c", 1.0);
        Preset p = base(name, "Q=0, G=c-y, phi=0; exact u = c", ProblemForm::semilinear, 0.0);
        p.spec.G = c_minus_y(c, 1.0);
        p.exact = constant_field(c);
        return p;
    }
    if (name == "constant_semilinear") {
        reject_unknown(name, params, {});
        Preset p = base(name, "Q=-1, G=1-y, phi=0; exact u = 1/2", ProblemForm::semilinear, -1.0);
        p.spec.G = c_minus_y(1.0, 1.0);
        p.exact = constant_field(0.5);
        return p;
    }
    if (name == "manufactured_semilinear") {
        reject_unknown(name, params, {});
        Preset p = base(name, "Q=-1, G=|x|^2-2-(y-|x|^2), phi=-1; exact u = |x|^2", ProblemForm::semilinear,
                        -1.0);
        Nonlinearity g;
        g.eval = [](const Vec& x, double y, const Vec&) {
            double r2 = x.squaredNorm();
            return r2 - 2.0 - (y - r2);
        };
        g.d1 = [](const Vec&) { return 1.0; };
        g.delta = 1.0;
        g.K = [](const Vec& x) { return std::abs(2.0 * x.squaredNorm() - 2.0); };
        p.spec.G = g;
        p.spec.phi = [](const Vec&) { return -1.0; };
        p.exact = square_norm();
        p.bsde_mode = BsdeMode::L1;
        return p;
    }
    if (name == "cubic") {
        reject_unknown(name, params, {"c", "clip"});
        double c = take(params, "c", 8.0);
        double clip = take(params, "clip", 3.0);
        Preset p = base(name, "Q=0, G=c-clip(y)^3, phi=0; exact u = c^(1/3)", ProblemForm::semilinear, 0.0);
        Nonlinearity g;
        g.eval = [c, clip](const Vec&, double y, const Vec&) {
            double yc = std::clamp(y, -clip, clip);
            return c - yc * yc * yc;
        };
        g.d1 = [](const Vec&) { return 0.0; };
        g.K = [c, clip](const Vec&) { return std::abs(c) + clip * clip * clip; };
        p.spec.G = g;
        p.exact = constant_field(std::cbrt(c));
        p.bsde_mode = BsdeMode::L1;
        p.pde_route = false;
        return p;
    }
    if (name == "mixed_hbar" || name == "mixed_zero_bhat") {
        bool zero = name == "mixed_zero_bhat";
        reject_unknown(name, params, zero ? std::vector<std::string>{} : std::vector<std::string>{"slope"});
        double a = take(params, "slope", 0.1);
        Preset p = base(name,
                        zero ? "Bhat=0, Q=-1, G=1-y, Phi=0; exact f = 1/2"
                             : "Bhat=grad(slope x1), Q=-1, data from u*=1; exact f = 1",
                        ProblemForm::mixed_full, -1.0);
        if (zero) {
            p.spec.G = c_minus_y(1.0, 1.0);
            p.exact = constant_field(0.5);
            return p;
        }
        CoefficientSet& c = p.spec.coeffs;
        c.Bhat = [a](const Vec& x) {
            Vec b = Vec::Zero(x.size());
            b(0) = a;
            return b;
        };
        c.divBhat = [](const Vec&) { return 0.0; };
        c.Bhat_zero = false;
        SmoothField u = constant_field(1.0);
        ManufacturedData md = manufactured_problem(u, c, p.spec.dom);
        p.spec.G = Nonlinearity::from_source(md.F_data);
        p.spec.Phi = md.Phi;
        p.exact = u;
        return p;
    }
    if (name == "singular_bhat") {
        reject_unknown(name, params, {"amplitude", "alpha", "cap", "x0"});
        double amp = take(params, "amplitude", 0.05);
        double alpha = take(params, "alpha", 0.3);
        double x0 = take(params, "x0", 0.3);
        Preset p = base(name, "|Bhat| = amplitude |x - x0|^-alpha along e1, Q=-1, F=1, Phi=0", ProblemForm::mixed_full,
                        -1.0);
        CoefficientSet& c = p.spec.coeffs;
        Vec s = make_vec({x0, 0.0});
        c.Bhat = [amp, alpha, s](const Vec& x) {
            Vec b = Vec::Zero(x.size());
            double r = (x - s).norm();
            b(0) = amp * std::pow(std::max(r, 1e-300), -alpha);
            return b;
        };
        c.divBhat = [amp, alpha, s](const Vec& x) {
            Vec d = x - s;
            double r = std::max(d.norm(), 1e-300);
            return -alpha * amp * std::pow(r, -alpha - 2.0) * d(0);
        };
        c.Bhat_zero = false;
        c.cap = take(params, "cap", 10.0);
        c.singular_point = s;
        p.spec.G = Nonlinearity::from_source([](const Vec&) { return 1.0; });
        return p;
    }
    throw ConfigError("unknown preset '" + name + "'");
}

}  // namespace rbsde
