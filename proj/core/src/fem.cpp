#include "elastovb/fem.hpp"

#include "elastovb/error.hpp"

#include <cmath>
#include <string>

namespace elastovb {

namespace {

Eigen::Matrix3d plane_strain_unit_modulus(double nu) {
    if (!(nu > -1.0 && nu < 0.5)) {
        throw InvalidInput("Poisson ratio must lie in (-1, 0.5) for plane strain");
    }
    const double c = 1.0 / ((1.0 + nu) * (1.0 - 2.0 * nu));
    Eigen::Matrix3d d;
    d << 1.0 - nu, nu, 0.0,
         nu, 1.0 - nu, 0.0,
         0.0, 0.0, 0.5 * (1.0 - 2.0 * nu);
    return c * d;
}

}  // namespace

ObservationMap ObservationMap::free_dofs(const Mesh2D& mesh, const BoundarySpec& bc) {
    std::vector<bool> prescribed(std::size_t(mesh.dof_count()), false);
    for (const auto& d : bc.dirichlet) prescribed[std::size_t(d.dof)] = true;
    ObservationMap q;
    for (Index i = 0; i < mesh.dof_count(); ++i) {
        if (!prescribed[std::size_t(i)]) q.dofs.push_back(i);
    }
    return q;
}

Eigen::Matrix<double, 8, 8> unit_element_stiffness(double hx, double hy, double poisson) {
    const Eigen::Matrix3d d = plane_strain_unit_modulus(poisson);
    const double g = 1.0 / std::sqrt(3.0);
    const double xi_n[4] = {-1.0, 1.0, 1.0, -1.0};
    const double eta_n[4] = {-1.0, -1.0, 1.0, 1.0};
    const double det_j = 0.25 * hx * hy;

    Eigen::Matrix<double, 8, 8> ke = Eigen::Matrix<double, 8, 8>::Zero();
    for (double xi : {-g, g}) {
        for (double eta : {-g, g}) {
            Eigen::Matrix<double, 3, 8> b = Eigen::Matrix<double, 3, 8>::Zero();
            for (int a = 0; a < 4; ++a) {
                const double dndx = 0.25 * xi_n[a] * (1.0 + eta_n[a] * eta) * (2.0 / hx);
                const double dndy = 0.25 * eta_n[a] * (1.0 + xi_n[a] * xi) * (2.0 / hy);
                b(0, 2 * a) = dndx;
                b(1, 2 * a + 1) = dndy;
                b(2, 2 * a) = dndy;
                b(2, 2 * a + 1) = dndx;
            }
            ke.noalias() += b.transpose() * d * b * det_j;
        }
    }
    return ke;
}

LinearElasticSystem::LinearElasticSystem(const Mesh2D& mesh, const BoundarySpec& bc,
                                         const MaterialField& field, double poisson)
    : mesh_(mesh), field_(field) {
    mesh_.validate();
    bc.validate(mesh_);
    field_.validate(mesh_);
    ke_unit_ = unit_element_stiffness(mesh_.hx(), mesh_.hy(), poisson);
    modulus_ = field_.psi.array().exp();
    if (!modulus_.allFinite()) {
        throw InvalidInput("material field: modulus overflow for exp(psi)");
    }

    const Index ndof = mesh_.dof_count();
    Vec prescribed_value = Vec::Zero(ndof);
    free_of_dof_.assign(std::size_t(ndof), 0);
    for (const auto& d : bc.dirichlet) {
        free_of_dof_[std::size_t(d.dof)] = -1;
        prescribed_value[d.dof] = d.value;
    }
    n_free_ = 0;
    for (auto& f : free_of_dof_) {
        if (f >= 0) f = n_free_++;
    }
    if (n_free_ == 0) {
        throw InvalidInput("boundary: every dof is prescribed, nothing to solve");
    }

    Vec rhs = Vec::Zero(n_free_);
    for (const auto& t : bc.traction) rhs[free_of_dof_[std::size_t(t.dof)]] += t.value;

    std::vector<Eigen::Triplet<double>> free_trip;
    std::vector<Eigen::Triplet<double>> full_trip;
    free_trip.reserve(std::size_t(mesh_.element_count()) * 64);
    full_trip.reserve(std::size_t(mesh_.element_count()) * 64);
    for (Index e = 0; e < mesh_.element_count(); ++e) {
        const auto dofs = element_dofs(e);
        const double ek = modulus_[e];
        for (int a = 0; a < 8; ++a) {
            const Index fa = free_of_dof_[std::size_t(dofs[a])];
            for (int b = 0; b < 8; ++b) {
                const double kab = ek * ke_unit_(a, b);
                full_trip.emplace_back(dofs[a], dofs[b], kab);
                if (fa < 0) continue;
                const Index fb = free_of_dof_[std::size_t(dofs[b])];
                if (fb >= 0) {
                    free_trip.emplace_back(fa, fb, kab);
                } else {
                    rhs[fa] -= kab * prescribed_value[dofs[b]];
                }
            }
        }
    }
    k_full_.resize(ndof, ndof);
    k_full_.setFromTriplets(full_trip.begin(), full_trip.end());
    Eigen::SparseMatrix<double> k_ff(n_free_, n_free_);
    k_ff.setFromTriplets(free_trip.begin(), free_trip.end());

    solver_.compute(k_ff);
    if (solver_.info() != Eigen::Success) {
        throw SingularSystem("stiffness factorization failed; check Dirichlet constraints");
    }
    const Vec diag = solver_.vectorD();
    const double dmax = diag.cwiseAbs().maxCoeff();
    if (!(diag.minCoeff() > 1e-12 * dmax)) {
        throw SingularSystem(
            "stiffness matrix is singular after applying Dirichlet conditions "
            "(rigid-body modes not constrained)");
    }

    const Vec u_free = solver_.solve(rhs);
    u_ = prescribed_value;
    for (Index i = 0; i < ndof; ++i) {
        const Index f = free_of_dof_[std::size_t(i)];
        if (f >= 0) u_[i] = u_free[f];
    }
    if (!u_.allFinite()) {
        throw NumericalFailure("displacement solve produced non-finite values");
    }
}

std::array<Index, 8> LinearElasticSystem::element_dofs(Index e) const {
    const auto nodes = mesh_.element_nodes(e);
    std::array<Index, 8> dofs{};
    for (int a = 0; a < 4; ++a) {
        dofs[2 * a] = 2 * nodes[a];
        dofs[2 * a + 1] = 2 * nodes[a] + 1;
    }
    return dofs;
}

Mat LinearElasticSystem::sensitivities(const ObservationMap& q) const {
    const Index dy = q.size();
    Mat rhs = Mat::Zero(n_free_, dy);
    for (Index i = 0; i < dy; ++i) {
        const Index dof = q.dofs[std::size_t(i)];
        if (dof < 0 || dof >= mesh_.dof_count()) {
            throw InvalidInput("observation map: dof " + std::to_string(dof) + " out of range");
        }
        const Index f = free_of_dof_[std::size_t(dof)];
        if (f < 0) {
            throw InvalidInput("observation map: dof " + std::to_string(dof) +
                               " is prescribed; its sensitivity is identically zero");
        }
        rhs(f, i) = 1.0;
    }
    // K is symmetric, so the adjoint system K^T nu = e_i reuses the same factor.
    const Mat adjoint = dy > 0 ? Mat(solver_.solve(rhs)) : Mat(n_free_, 0);

    Mat g = Mat::Zero(dy, mesh_.element_count());
    Eigen::Matrix<double, 8, 1> ue;
    Mat nu_e(8, dy);
    for (Index e = 0; e < mesh_.element_count(); ++e) {
        if (field_.is_fixed(e)) continue;
        const auto dofs = element_dofs(e);
        for (int a = 0; a < 8; ++a) {
            ue[a] = u_[dofs[a]];
            const Index f = free_of_dof_[std::size_t(dofs[a])];
            if (f >= 0) {
                nu_e.row(a) = adjoint.row(f);
            } else {
                nu_e.row(a).setZero();
            }
        }
        // dr/dpsi_k = E_k * Ke_unit * U_e; dy/dpsi_k = -nu^T dr/dpsi_k
        const Eigen::Matrix<double, 8, 1> dr = modulus_[e] * (ke_unit_ * ue);
        g.col(e) = -(nu_e.transpose() * dr);
    }
    return g;
}

double LinearElasticSystem::strain_energy_twice() const {
    return u_.dot(k_full_ * u_);
}

Vec assemble_and_solve(const Mesh2D& mesh, const BoundarySpec& bc, const MaterialField& field,
                       double poisson) {
    return LinearElasticSystem(mesh, bc, field, poisson).displacement();
}

Vec observe(const Vec& u, const ObservationMap& q) {
    Vec y(q.size());
    for (Index i = 0; i < q.size(); ++i) {
        const Index dof = q.dofs[std::size_t(i)];
        if (dof < 0 || dof >= u.size()) {
            throw InvalidInput("observation map: dof " + std::to_string(dof) + " out of range");
        }
        y[i] = u[dof];
    }
    return y;
}

Mat adjoint_jacobian(const Mesh2D& mesh, const BoundarySpec& bc, const MaterialField& field,
                     const ObservationMap& q, double poisson) {
    return LinearElasticSystem(mesh, bc, field, poisson).sensitivities(q);
}

}  // namespace elastovb
