#pragma once

#include "elastovb/fem.hpp"
#include "elastovb/mesh.hpp"
#include "elastovb/smooth_prior.hpp"

#include <optional>

namespace elastovb {

/// Full variational state: Psi = mu + W Theta, q(Theta) = N(0, diag(lambda)^-1),
/// q(tau) = Gamma(a, b) with prior Gamma(a0, b0).
///
/// Invariants maintained by the drivers: W has orthonormal columns, lambda0 is
/// nondecreasing, lambda >= lambda0 elementwise.
struct ReducedPosterior {
    Vec mu;
    Mat W;
    Vec lambda0;
    Vec lambda;
    double a0 = 0.0;
    double b0 = 0.0;
    double a = 0.0;
    double b = 0.0;

    Index dim() const { return mu.size(); }
    Index bases() const { return W.cols(); }

    double mean_tau() const { return a / b; }
    /// digamma(a) - log(b)
    double mean_log_tau() const;

    /// max |W^T W - I|
    double orthonormality_defect() const;

    /// Dimensions agree, values finite. Throws InvalidInput otherwise.
    void validate() const;

    static ReducedPosterior point(Vec mu, double a0 = 0.0, double b0 = 0.0);
};

struct GammaParams {
    double a = 0.0;
    double b = 0.0;
};

/// s_i = w_i^T G^T G w_i for every column of W.
Vec data_precision(const Mat& w, const Mat& g);

/// a = a0 + d_y/2, b = b0 + |yhat - y|^2/2 + tr(W^T G^T G W Lambda^-1)/2.
GammaParams update_q_tau(const ReducedPosterior& state, const ForwardEval& eval, const Vec& yhat);

/// lambda_i = lambda0_i + <tau> s_i using the state's current (a, b).
Vec update_q_theta(const ReducedPosterior& state, const ForwardEval& eval);

struct QFixedPointReport {
    int iterations = 0;
    bool converged = false;
};

/// Alternate update_q_theta / update_q_tau until the relative change of (lambda, a, b)
/// drops below tol, at most max_iter rounds. Updates the state in place.
QFixedPointReport refine_q(ReducedPosterior& state, const ForwardEval& eval, const Vec& yhat,
                           int max_iter = 50, double tol = 1e-10);

/// Addends of the variational lower bound at the optimal q(Theta) q(tau).
struct ElboBreakdown {
    double likelihood = 0.0;  // -d/2 log 2pi + d/2 <log tau> - <tau>/2 (|r|^2 + W^T G^T G W : Lambda^-1)
    double theta = 0.0;       // 1/2 log|Lambda0| - 1/2 Lambda0 : Lambda^-1 - 1/2 log|Lambda| + d_theta/2
    double tau = 0.0;         // Gamma prior and entropy terms of tau
    double log_p_mu = 0.0;    // -1/2 (L mu - c)^T <Phi> (L mu - c)
    double phi = 0.0;         // remaining EM-bound terms of the mu prior
    double log_p_w = 0.0;     // uniform on the Stiefel manifold: constant, reported as 0
    double total = 0.0;
};

/// The log-normalizer of an improper Gamma prior (a0 or b0 zero) is dropped.
double tau_terms(double a0, double b0, double a, double b);
double theta_terms(const Vec& lambda0, const Vec& lambda);

/// Lower bound F. The mu-prior terms are included when both `prior` and `phi` are given.
ElboBreakdown elbo(const ReducedPosterior& state, const ForwardEval& eval, const Vec& yhat,
                   const SmoothPrior* prior = nullptr, const PhiPosterior* phi = nullptr);

/// Mean, low-rank covariance factor (Cov = factor factor^T) and per-element std.
struct PsiStats {
    Vec mean;
    Mat factor;
    Vec std;
};

PsiStats posterior_psi_stats(const ReducedPosterior& state);

}  // namespace elastovb
