#pragma once

#include "elastovb/mesh.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <memory>
#include <vector>

namespace elastovb {

/// Model outputs and their sensitivities at one parameter point.
struct ForwardEval {
    Vec y;  // d_y
    Mat G;  // d_y x d_psi, G(i,k) = dy_i / dpsi_k
};

/// Boolean selection y = Q U, stored as the list of selected dofs.
struct ObservationMap {
    std::vector<Index> dofs;

    Index size() const { return Index(dofs.size()); }

    /// Every dof that is not prescribed, ascending.
    static ObservationMap free_dofs(const Mesh2D& mesh, const BoundarySpec& bc);
};

/// Stiffness of one rectangular bilinear element with unit modulus, plane strain,
/// 2x2 Gauss quadrature. Dof order: (ux,uy) for nodes bl, br, tr, tl.
Eigen::Matrix<double, 8, 8> unit_element_stiffness(double hx, double hy, double poisson);

/// Assembled and factorized plane-strain system K(psi) U = f for one material field.
///
/// The factorization of the free-free block is kept so that any number of adjoint
/// right-hand sides can be solved without refactorizing.
class LinearElasticSystem {
public:
    LinearElasticSystem(const Mesh2D& mesh, const BoundarySpec& bc, const MaterialField& field,
                        double poisson);

    /// Full displacement vector, prescribed dofs set exactly.
    const Vec& displacement() const { return u_; }

    /// G = dy/dpsi for y = Q U including the chain rule through E = exp(psi).
    /// Columns of clamped elements are zero. Throws InvalidInput if Q selects a
    /// prescribed dof.
    Mat sensitivities(const ObservationMap& q) const;

    /// U^T K U over the full system.
    double strain_energy_twice() const;

    const Mesh2D& mesh() const { return mesh_; }

private:
    Mesh2D mesh_;
    MaterialField field_;
    Eigen::Matrix<double, 8, 8> ke_unit_;
    Vec modulus_;
    std::vector<Index> free_of_dof_;  // -1 for prescribed dofs
    Index n_free_ = 0;
    Eigen::SparseMatrix<double> k_full_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
    Vec u_;

    std::array<Index, 8> element_dofs(Index e) const;
};

/// Solve K(psi) U = f with the Dirichlet values imposed.
Vec assemble_and_solve(const Mesh2D& mesh, const BoundarySpec& bc, const MaterialField& field,
                       double poisson = 0.0);

/// y_i = U[Q(i)].
Vec observe(const Vec& u, const ObservationMap& q);

/// Adjoint sensitivities of the observed dofs, one adjoint solve per row against a
/// shared factorization.
Mat adjoint_jacobian(const Mesh2D& mesh, const BoundarySpec& bc, const MaterialField& field,
                     const ObservationMap& q, double poisson = 0.0);

}  // namespace elastovb
