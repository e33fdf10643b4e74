#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <utility>
#include <vector>

namespace elastovb {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Regular nx-by-ny grid of rectangular elements covering [0,lx] x [0,ly].
///
/// Elements are numbered row-major from the bottom-left corner: element (ix, iy)
/// has index iy*nx + ix. Nodes likewise: node (ix, iy) has index iy*(nx+1) + ix,
/// and carries the displacement dofs 2*node (x) and 2*node+1 (y).
struct Mesh2D {
    int nx = 1;
    int ny = 1;
    double lx = 1.0;
    double ly = 1.0;

    Mesh2D() = default;
    Mesh2D(int nx_, int ny_, double lx_, double ly_);

    Index element_count() const { return Index(nx) * ny; }
    Index node_count() const { return Index(nx + 1) * (ny + 1); }
    Index dof_count() const { return 2 * node_count(); }

    double hx() const { return lx / nx; }
    double hy() const { return ly / ny; }

    Index element(int ix, int iy) const { return Index(iy) * nx + ix; }
    Index node(int ix, int iy) const { return Index(iy) * (nx + 1) + ix; }
    Index dof(int ix, int iy, int component) const { return 2 * node(ix, iy) + component; }

    /// Corner nodes of element e in counter-clockwise order starting bottom-left.
    std::array<Index, 4> element_nodes(Index e) const;
    /// Element center in physical coordinates.
    std::pair<double, double> element_center(Index e) const;
    std::pair<double, double> node_position(Index n) const;

    /// Throws InvalidInput unless nx, ny >= 1 and lx, ly > 0.
    void validate() const;
};

struct DofValue {
    Index dof = 0;
    double value = 0.0;
};

/// Prescribed displacements and applied nodal forces.
struct BoundarySpec {
    std::vector<DofValue> dirichlet;
    std::vector<DofValue> traction;

    /// Throws InvalidInput on out-of-range or repeated dofs, or a dof in both lists.
    void validate(const Mesh2D& mesh) const;

    /// Bottom edge fully clamped, top edge moved by (0, top_uy). Vertical edges free.
    static BoundarySpec compression(const Mesh2D& mesh, double top_uy);
};

/// Per-element log-modulus psi_k = log(E_k) with an optional clamp mask.
struct MaterialField {
    Vec psi;
    std::vector<bool> fixed;  // empty means nothing is clamped

    MaterialField() = default;
    explicit MaterialField(Vec values) : psi(std::move(values)) {}
    MaterialField(Vec values, std::vector<bool> mask)
        : psi(std::move(values)), fixed(std::move(mask)) {}

    bool is_fixed(Index k) const { return !fixed.empty() && fixed[std::size_t(k)]; }
    Index free_count() const;
    /// Indices of unclamped elements, ascending.
    std::vector<Index> free_indices() const;

    void validate(const Mesh2D& mesh) const;
};

}  // namespace elastovb
