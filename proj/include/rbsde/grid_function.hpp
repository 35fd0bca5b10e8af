#pragma once

#include "rbsde/geometry.hpp"
#include "rbsde/types.hpp"

#include <array>
#include <string>
#include <vector>

namespace rbsde {

enum class MeshKind { cartesian, polar };

// Cartesian: n[i] nodes per axis on [lo_i, hi_i].
// Polar (d = 2): radial nodes r_i = i R / nr for i = 0..nr, nt angular nodes; node 0 is the pole,
// node 1 + (i - 1) nt + j is (r_i, 2 pi j / nt).
struct Mesh {
    MeshKind kind = MeshKind::cartesian;
    int dim = 2;
    Vec lo, hi;
    std::array<int, kMaxDim> n{1, 1, 1};
    Vec center;
    double radius = 1.0;
    int nr = 0;
    int nt = 0;

    static Mesh cartesian(const Vec& lo, const Vec& hi, std::array<int, kMaxDim> n);
    static Mesh polar(const Vec& center, double radius, int nr, int nt);
    // Cartesian mesh on the bounding box of dom with n nodes per axis.
    static Mesh cartesian_for(const DomainGeometry& dom, int n);

    std::size_t size() const;
    Vec node(std::size_t idx) const;
    bool covers(const DomainGeometry& dom) const;
    double spacing() const;
    bool operator==(const Mesh& o) const;
};

class GridFunction {
public:
    GridFunction() = default;
    explicit GridFunction(Mesh mesh, double fill = 0.0);

    const Mesh& mesh() const { return mesh_; }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }

    // Multilinear (Cartesian) or bilinear-in-(r, theta) (polar); exact at nodes.
    double operator()(const Vec& x) const;

    // Nodal gradients by second-order differences, then interpolated. Requires build_gradients().
    void build_gradients();
    bool has_gradients() const { return !grad_.empty(); }
    Vec gradient(const Vec& x) const;

    // Quadrature weights for integrals over dom (nodes outside dom get weight 0).
    std::vector<double> quadrature_weights(const DomainGeometry& dom) const;
    double mean_over(const DomainGeometry& dom) const;

    void write_csv(const std::string& path) const;

private:
    double interp(const std::vector<double>& vals, const Vec& x) const;

    Mesh mesh_;
    std::vector<double> values_;
    std::vector<std::vector<double>> grad_;
};

}  // namespace rbsde
