#include "elastovb/smooth_prior.hpp"

#include "elastovb/error.hpp"

#include <boost/math/special_functions/digamma.hpp>

#include <cmath>
#include <numbers>
#include <string>

namespace elastovb {

namespace {

double log_gamma_normalizer(double shape, double rate) {
    return std::lgamma(shape) - shape * std::log(rate);
}

}  // namespace

SmoothPrior::SmoothPrior(Index dim, std::vector<NeighborPair> pairs, double a_phi, double b_phi)
    : dim_(dim), pairs_(std::move(pairs)), a_phi_(a_phi), b_phi_(b_phi) {
    if (a_phi_ < 0.0 || b_phi_ < 0.0) {
        throw InvalidInput("smooth prior: Gamma hyperparameters must be non-negative");
    }
    for (const auto& p : pairs_) {
        if (p.k < 0 || p.k >= dim_ || p.l >= dim_ || p.k == p.l) {
            throw InvalidInput("smooth prior: pair (" + std::to_string(p.k) + ", " +
                               std::to_string(p.l) + ") is invalid");
        }
        if (p.l < 0 && !std::isfinite(p.anchor)) {
            throw InvalidInput("smooth prior: non-finite anchor value");
        }
    }
}

SmoothPrior SmoothPrior::grid(const Mesh2D& mesh, const std::vector<Index>& free,
                              const Vec& clamped_values, double a_phi, double b_phi) {
    if (clamped_values.size() != mesh.element_count()) {
        throw InvalidInput("smooth prior: clamped value vector must cover every element");
    }
    std::vector<Index> param_of(std::size_t(mesh.element_count()), -1);
    for (std::size_t j = 0; j < free.size(); ++j) param_of[std::size_t(free[j])] = Index(j);

    std::vector<NeighborPair> pairs;
    auto add = [&](Index e1, Index e2) {
        const Index p1 = param_of[std::size_t(e1)];
        const Index p2 = param_of[std::size_t(e2)];
        if (p1 >= 0 && p2 >= 0) {
            pairs.push_back({p1, p2, 0.0});
        } else if (p1 >= 0) {
            pairs.push_back({p1, -1, clamped_values[e2]});
        } else if (p2 >= 0) {
            pairs.push_back({p2, -1, clamped_values[e1]});
        }
    };
    for (int iy = 0; iy < mesh.ny; ++iy) {
        for (int ix = 0; ix < mesh.nx; ++ix) {
            if (ix + 1 < mesh.nx) add(mesh.element(ix, iy), mesh.element(ix + 1, iy));
            if (iy + 1 < mesh.ny) add(mesh.element(ix, iy), mesh.element(ix, iy + 1));
        }
    }
    return SmoothPrior(Index(free.size()), std::move(pairs), a_phi, b_phi);
}

Vec SmoothPrior::jumps(const Vec& mu) const {
    if (mu.size() != dim_) {
        throw InvalidInput("smooth prior: mu has length " + std::to_string(mu.size()) +
                           ", expected " + std::to_string(dim_));
    }
    Vec out(pair_count());
    for (Index j = 0; j < pair_count(); ++j) {
        const auto& p = pairs_[std::size_t(j)];
        out[j] = mu[p.k] - (p.l >= 0 ? mu[p.l] : p.anchor);
    }
    return out;
}

PhiPosterior SmoothPrior::em_phi(const Vec& mu) const {
    if (!mu.allFinite()) throw InvalidInput("smooth prior: non-finite mu");
    const Vec jump = jumps(mu);
    PhiPosterior post;
    post.a = Vec::Constant(pair_count(), a_phi_ + 0.5);
    post.b.resize(pair_count());
    for (Index j = 0; j < pair_count(); ++j) {
        double b = b_phi_ + 0.5 * jump[j] * jump[j];
        if (b < kRateFloor) {
            b = kRateFloor;
            ++post.floored;
        }
        post.b[j] = b;
    }
    return post;
}

PriorValue SmoothPrior::log_prior_and_grad(const Vec& mu, const PhiPosterior& phi) const {
    const Vec jump = jumps(mu);
    if (phi.a.size() != pair_count() || phi.b.size() != pair_count()) {
        throw InvalidInput("smooth prior: phi posterior does not match the pair list");
    }
    const Vec mean_phi = phi.mean();
    PriorValue out;
    out.gradient = Vec::Zero(dim_);
    for (Index j = 0; j < pair_count(); ++j) {
        const auto& p = pairs_[std::size_t(j)];
        const double wj = mean_phi[j] * jump[j];
        out.value -= 0.5 * wj * jump[j];
        out.gradient[p.k] -= wj;
        if (p.l >= 0) out.gradient[p.l] += wj;
    }
    return out;
}

void SmoothPrior::add_precision(Mat& h, const Vec& weights) const {
    for (Index j = 0; j < pair_count(); ++j) {
        const auto& p = pairs_[std::size_t(j)];
        const double w = weights[j];
        h(p.k, p.k) += w;
        if (p.l >= 0) {
            h(p.l, p.l) += w;
            h(p.k, p.l) -= w;
            h(p.l, p.k) -= w;
        }
    }
}

double SmoothPrior::phi_bound_terms(const PhiPosterior& phi) const {
    using boost::math::digamma;
    const bool proper = a_phi_ > 0.0 && b_phi_ > 0.0;
    double total = 0.0;
    for (Index j = 0; j < pair_count(); ++j) {
        const double a = phi.a[j];
        const double b = phi.b[j];
        const double mean = a / b;
        const double mean_log = digamma(a) - std::log(b);
        // 1/2 <log phi> - 1/2 log 2pi from the Gaussian normalizer of the jump
        total += 0.5 * mean_log - 0.5 * std::log(2.0 * std::numbers::pi);
        // <log p(phi)>
        total += (a_phi_ - 1.0) * mean_log - b_phi_ * mean;
        if (proper) total -= log_gamma_normalizer(a_phi_, b_phi_);
        // -<log q(phi)>
        total -= (a - 1.0) * mean_log - b * mean - log_gamma_normalizer(a, b);
    }
    return total;
}

}  // namespace elastovb
