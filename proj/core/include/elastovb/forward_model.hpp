#pragma once

#include "elastovb/error.hpp"
#include "elastovb/fem.hpp"
#include "elastovb/mesh.hpp"

#include <atomic>
#include <cstdint>
#include <vector>

namespace elastovb {

/// Raised when a forward evaluation fails; carries the offending parameter vector.
class ForwardFailure : public NumericalFailure {
public:
    ForwardFailure(const std::string& what, Vec psi) : NumericalFailure(what), psi_(std::move(psi)) {}
    const Vec& psi() const { return psi_; }

private:
    Vec psi_;
};

/// A map psi -> y(psi) that always returns its Jacobian alongside the value.
///
/// evaluate() is re-entrant. Every call, successful or not, bumps the forward-call
/// counter by exactly one; that counter is the cost metric reported by the driver.
class ForwardModel {
public:
    virtual ~ForwardModel() = default;

    virtual Index parameter_dim() const = 0;
    virtual Index output_dim() const = 0;

    ForwardEval evaluate(const Vec& psi) const;

    std::uint64_t call_count() const { return calls_.load(std::memory_order_relaxed); }
    void reset_call_count() { calls_.store(0, std::memory_order_relaxed); }

protected:
    virtual ForwardEval do_evaluate(const Vec& psi) const = 0;

private:
    mutable std::atomic<std::uint64_t> calls_{0};
};

/// y = A psi + offset, G = A. Linearization is exact, which makes it the
/// conjugate-Gaussian reference for the inference code.
class LinearOracleModel final : public ForwardModel {
public:
    explicit LinearOracleModel(Mat a);
    LinearOracleModel(Mat a, Vec offset);

    Index parameter_dim() const override { return a_.cols(); }
    Index output_dim() const override { return a_.rows(); }

    const Mat& matrix() const { return a_; }
    const Vec& offset() const { return offset_; }

protected:
    ForwardEval do_evaluate(const Vec& psi) const override;

private:
    Mat a_;
    Vec offset_;
};

/// Plane-strain elastography: psi holds the log-moduli of the unclamped elements
/// (ascending element index); clamped elements keep their value from the base field.
class FemElastographyModel final : public ForwardModel {
public:
    FemElastographyModel(Mesh2D mesh, BoundarySpec bc, MaterialField base, double poisson,
                         ObservationMap observed);

    Index parameter_dim() const override { return Index(free_.size()); }
    Index output_dim() const override { return observed_.size(); }

    /// Scatter a reduced parameter vector into a full per-element field.
    MaterialField full_field(const Vec& psi) const;
    /// Gather the unclamped entries of a full field.
    Vec reduce(const Vec& full_psi) const;
    /// Scatter per-parameter values into a per-element vector, `fill` on clamped elements.
    Vec expand(const Vec& reduced, double fill) const;

    const Mesh2D& mesh() const { return mesh_; }
    const BoundarySpec& boundary() const { return bc_; }
    const MaterialField& base_field() const { return base_; }
    const ObservationMap& observed() const { return observed_; }
    double poisson() const { return poisson_; }
    const std::vector<Index>& free_elements() const { return free_; }

protected:
    ForwardEval do_evaluate(const Vec& psi) const override;

private:
    Mesh2D mesh_;
    BoundarySpec bc_;
    MaterialField base_;
    double poisson_;
    ObservationMap observed_;
    std::vector<Index> free_;
};

}  // namespace elastovb
