#pragma once

#include "elastovb/mesh.hpp"

#include <cstddef>
#include <vector>

namespace elastovb {

/// One penalized jump mu[k] - mu[l]. When l < 0 the second site is clamped and
/// `anchor` holds its known value, so the jump is mu[k] - anchor.
struct NeighborPair {
    Index k = 0;
    Index l = -1;
    double anchor = 0.0;
};

/// Per-jump Gamma posterior q(phi_j) = Gamma(a_j, b_j).
struct PhiPosterior {
    Vec a;
    Vec b;
    std::size_t floored = 0;  // jumps whose b_j hit the floor in the last E-step

    Vec mean() const { return (a.array() / b.array()).matrix(); }
};

struct PriorValue {
    double value = 0.0;
    Vec gradient;
};

/// Hierarchical jump-penalty prior on mu: Gaussian jumps with Gamma(a_phi, b_phi)
/// precisions, handled through an EM bound.
class SmoothPrior {
public:
    static constexpr double kRateFloor = 1e-12;

    SmoothPrior() = default;
    SmoothPrior(Index dim, std::vector<NeighborPair> pairs, double a_phi = 0.0, double b_phi = 0.0);

    /// 4-neighborhood pairs of a structured grid. `free` lists the elements that are
    /// parameters (in parameter order); pairs touching one clamped element are anchored
    /// to `clamped_values`, pairs between two clamped elements are dropped.
    static SmoothPrior grid(const Mesh2D& mesh, const std::vector<Index>& free,
                            const Vec& clamped_values, double a_phi = 0.0, double b_phi = 0.0);

    Index dim() const { return dim_; }
    Index pair_count() const { return Index(pairs_.size()); }
    bool empty() const { return pairs_.empty(); }
    const std::vector<NeighborPair>& pairs() const { return pairs_; }
    double a_phi() const { return a_phi_; }
    double b_phi() const { return b_phi_; }

    /// L mu - c, one entry per pair.
    Vec jumps(const Vec& mu) const;

    /// E-step: exact posterior of every phi_j given mu, with b_j floored at kRateFloor.
    PhiPosterior em_phi(const Vec& mu) const;

    /// -1/2 (L mu - c)^T <Phi> (L mu - c) and its gradient -L^T <Phi> (L mu - c).
    PriorValue log_prior_and_grad(const Vec& mu, const PhiPosterior& phi) const;

    /// h += L^T diag(weights) L without forming L.
    void add_precision(Mat& h, const Vec& weights) const;

    /// Remaining terms of the EM bound on log p(mu): the 1/2 log|Phi| normalizer and the
    /// prior/entropy of q(Phi). Added to log_prior_and_grad().value this is the full
    /// bound. The log-normalizer of an improper hyperprior (a_phi or b_phi zero) is dropped.
    double phi_bound_terms(const PhiPosterior& phi) const;

private:
    Index dim_ = 0;
    std::vector<NeighborPair> pairs_;
    double a_phi_ = 0.0;
    double b_phi_ = 0.0;
};

}  // namespace elastovb
