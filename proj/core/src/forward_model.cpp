#include "elastovb/forward_model.hpp"

#include <string>

namespace elastovb {

ForwardEval ForwardModel::evaluate(const Vec& psi) const {
    calls_.fetch_add(1, std::memory_order_relaxed);
    if (psi.size() != parameter_dim()) {
        throw InvalidInput("forward model: expected " + std::to_string(parameter_dim()) +
                           " parameters, got " + std::to_string(psi.size()));
    }
    if (!psi.allFinite()) {
        throw ForwardFailure("forward model: non-finite parameter vector", psi);
    }
    ForwardEval out;
    try {
        out = do_evaluate(psi);
    } catch (const ForwardFailure&) {
        throw;
    } catch (const Error& e) {
        throw ForwardFailure(std::string("forward model: ") + e.what(), psi);
    }
    if (out.y.size() != output_dim() || out.G.rows() != output_dim() ||
        out.G.cols() != parameter_dim()) {
        throw ForwardFailure("forward model: inconsistent output dimensions", psi);
    }
    if (!out.y.allFinite() || !out.G.allFinite()) {
        throw ForwardFailure("forward model: non-finite outputs", psi);
    }
    return out;
}

LinearOracleModel::LinearOracleModel(Mat a) : LinearOracleModel(a, Vec::Zero(a.rows())) {}

LinearOracleModel::LinearOracleModel(Mat a, Vec offset) : a_(std::move(a)), offset_(std::move(offset)) {
    if (offset_.size() != a_.rows()) {
        throw InvalidInput("linear model: offset length must equal the number of rows of A");
    }
    if (!a_.allFinite() || !offset_.allFinite()) {
        throw InvalidInput("linear model: non-finite coefficients");
    }
}

ForwardEval LinearOracleModel::do_evaluate(const Vec& psi) const {
    return {a_ * psi + offset_, a_};
}

FemElastographyModel::FemElastographyModel(Mesh2D mesh, BoundarySpec bc, MaterialField base,
                                           double poisson, ObservationMap observed)
    : mesh_(mesh), bc_(std::move(bc)), base_(std::move(base)), poisson_(poisson),
      observed_(std::move(observed)) {
    mesh_.validate();
    bc_.validate(mesh_);
    base_.validate(mesh_);
    std::vector<bool> prescribed(std::size_t(mesh_.dof_count()), false);
    for (const auto& d : bc_.dirichlet) prescribed[std::size_t(d.dof)] = true;
    for (Index dof : observed_.dofs) {
        if (dof < 0 || dof >= mesh_.dof_count()) {
            throw InvalidInput("observation map: dof " + std::to_string(dof) + " out of range");
        }
        if (prescribed[std::size_t(dof)]) {
            throw InvalidInput("observation map: dof " + std::to_string(dof) + " is prescribed");
        }
    }
    free_ = base_.free_indices();
}

MaterialField FemElastographyModel::full_field(const Vec& psi) const {
    if (psi.size() != parameter_dim()) {
        throw InvalidInput("forward model: parameter vector has the wrong length");
    }
    MaterialField field = base_;
    for (std::size_t j = 0; j < free_.size(); ++j) field.psi[free_[j]] = psi[Index(j)];
    return field;
}

Vec FemElastographyModel::reduce(const Vec& full_psi) const {
    if (full_psi.size() != mesh_.element_count()) {
        throw InvalidInput("forward model: full field has the wrong length");
    }
    Vec out(parameter_dim());
    for (std::size_t j = 0; j < free_.size(); ++j) out[Index(j)] = full_psi[free_[j]];
    return out;
}

Vec FemElastographyModel::expand(const Vec& reduced, double fill) const {
    Vec out = Vec::Constant(mesh_.element_count(), fill);
    for (std::size_t j = 0; j < free_.size(); ++j) out[free_[j]] = reduced[Index(j)];
    return out;
}

ForwardEval FemElastographyModel::do_evaluate(const Vec& psi) const {
    const LinearElasticSystem system(mesh_, bc_, full_field(psi), poisson_);
    ForwardEval out;
    out.y = observe(system.displacement(), observed_);
    const Mat g_full = system.sensitivities(observed_);
    out.G.resize(g_full.rows(), parameter_dim());
    for (std::size_t j = 0; j < free_.size(); ++j) out.G.col(Index(j)) = g_full.col(free_[j]);
    return out;
}

}  // namespace elastovb
