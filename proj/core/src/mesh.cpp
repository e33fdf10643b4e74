#include "elastovb/mesh.hpp"

#include "elastovb/error.hpp"

#include <cmath>
#include <string>
#include <unordered_set>

namespace elastovb {

Mesh2D::Mesh2D(int nx_, int ny_, double lx_, double ly_) : nx(nx_), ny(ny_), lx(lx_), ly(ly_) {
    validate();
}

void Mesh2D::validate() const {
    if (nx < 1 || ny < 1) {
        throw InvalidInput("mesh: element counts must be >= 1 (got " + std::to_string(nx) + "x" +
                           std::to_string(ny) + ")");
    }
    if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly)) {
        throw InvalidInput("mesh: side lengths must be positive and finite");
    }
}

std::array<Index, 4> Mesh2D::element_nodes(Index e) const {
    const int ix = int(e % nx);
    const int iy = int(e / nx);
    return {node(ix, iy), node(ix + 1, iy), node(ix + 1, iy + 1), node(ix, iy + 1)};
}

std::pair<double, double> Mesh2D::element_center(Index e) const {
    const int ix = int(e % nx);
    const int iy = int(e / nx);
    return {(ix + 0.5) * hx(), (iy + 0.5) * hy()};
}

std::pair<double, double> Mesh2D::node_position(Index n) const {
    const int ix = int(n % (nx + 1));
    const int iy = int(n / (nx + 1));
    return {ix * hx(), iy * hy()};
}

void BoundarySpec::validate(const Mesh2D& mesh) const {
    const Index ndof = mesh.dof_count();
    std::unordered_set<Index> seen_dirichlet;
    for (const auto& d : dirichlet) {
        if (d.dof < 0 || d.dof >= ndof) {
            throw InvalidInput("boundary: Dirichlet dof " + std::to_string(d.dof) + " out of range");
        }
        if (!std::isfinite(d.value)) {
            throw InvalidInput("boundary: non-finite prescribed displacement");
        }
        if (!seen_dirichlet.insert(d.dof).second) {
            throw InvalidInput("boundary: dof " + std::to_string(d.dof) + " prescribed twice");
        }
    }
    std::unordered_set<Index> seen_traction;
    for (const auto& t : traction) {
        if (t.dof < 0 || t.dof >= ndof) {
            throw InvalidInput("boundary: traction dof " + std::to_string(t.dof) + " out of range");
        }
        if (!std::isfinite(t.value)) {
            throw InvalidInput("boundary: non-finite traction");
        }
        if (seen_dirichlet.count(t.dof)) {
            throw InvalidInput("boundary: dof " + std::to_string(t.dof) +
                               " is both prescribed and loaded");
        }
        if (!seen_traction.insert(t.dof).second) {
            throw InvalidInput("boundary: traction dof " + std::to_string(t.dof) + " listed twice");
        }
    }
}

BoundarySpec BoundarySpec::compression(const Mesh2D& mesh, double top_uy) {
    BoundarySpec bc;
    for (int ix = 0; ix <= mesh.nx; ++ix) {
        bc.dirichlet.push_back({mesh.dof(ix, 0, 0), 0.0});
        bc.dirichlet.push_back({mesh.dof(ix, 0, 1), 0.0});
    }
    for (int ix = 0; ix <= mesh.nx; ++ix) {
        bc.dirichlet.push_back({mesh.dof(ix, mesh.ny, 0), 0.0});
        bc.dirichlet.push_back({mesh.dof(ix, mesh.ny, 1), top_uy});
    }
    return bc;
}

Index MaterialField::free_count() const {
    if (fixed.empty()) return psi.size();
    Index n = 0;
    for (bool f : fixed) n += f ? 0 : 1;
    return n;
}

std::vector<Index> MaterialField::free_indices() const {
    std::vector<Index> out;
    out.reserve(std::size_t(psi.size()));
    for (Index k = 0; k < psi.size(); ++k) {
        if (!is_fixed(k)) out.push_back(k);
    }
    return out;
}

void MaterialField::validate(const Mesh2D& mesh) const {
    if (psi.size() != mesh.element_count()) {
        throw InvalidInput("material field: expected " + std::to_string(mesh.element_count()) +
                           " values, got " + std::to_string(psi.size()));
    }
    if (!fixed.empty() && Index(fixed.size()) != psi.size()) {
        throw InvalidInput("material field: clamp mask length does not match field");
    }
    if (!psi.allFinite()) {
        throw InvalidInput("material field: non-finite log-modulus");
    }
}

}  // namespace elastovb
