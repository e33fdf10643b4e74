#pragma once

#include "elastovb/forward_model.hpp"
#include "elastovb/posterior.hpp"
#include "elastovb/smooth_prior.hpp"

#include <optional>
#include <vector>

namespace elastovb {

struct GaussNewtonStep {
    Vec delta;
    bool tikhonov = false;  // the system was singular and got a 1e-10 diagonal floor
};

/// Solves (<tau> G^T G + L^T <Phi> L) d = <tau> G^T r - L^T <Phi> (L mu - c), dropping the
/// prior on both sides when `prior`/`phi` are null. Entries flagged in `fixed` get d = 0.
GaussNewtonStep gauss_newton_step(const Vec& mu, const ForwardEval& eval, const Vec& yhat,
                                  double mean_tau, const SmoothPrior* prior, const PhiPosterior* phi,
                                  const std::vector<bool>& fixed = {});

/// The symmetric system matrix of gauss_newton_step (for diagnostics and tests).
Mat gauss_newton_matrix(const ForwardEval& eval, double mean_tau, const SmoothPrior* prior,
                        const PhiPosterior* phi);

struct MuUpdateOptions {
    int max_outer = 30;          // accepted + rejected trial steps, i.e. forward calls after the first
    int max_halvings = 10;
    int warmup_steps = 5;        // accepted steps before the smoothing prior switches on
    double tol = 1e-6;           // relative F_mu gain that counts as converged
    double step_tol = 1e-8;      // |d|_inf that counts as converged
    std::vector<bool> fixed;     // optional clamp mask over the parameters
    std::optional<Vec> fixed_phi;  // hold <phi> at these values instead of running EM
};

struct MuUpdateReport {
    bool accepted = false;
    double step_norm = 0.0;       // |d|_inf of the final trial
    double f_before = 0.0;        // F_mu at fixed <tau>, <phi>
    double f_after = 0.0;
    double bound = 0.0;           // full lower bound (d_theta = 0) after the step
    int halvings = 0;
    int forward_calls = 0;
    bool regularized = false;
    bool tikhonov = false;
};

struct MuPhaseResult {
    Vec mu;
    ForwardEval eval;             // at mu
    GammaParams tau;              // q(tau) from the residual alone
    std::optional<PhiPosterior> phi;
    bool regularized = false;
    int forward_calls = 0;
    std::size_t floored_jumps = 0;
    std::vector<MuUpdateReport> steps;
};

/// F_mu = -<tau>/2 |yhat - y|^2 + <log p(mu)> at fixed q(tau), q(phi).
double f_mu(const Vec& mu, const ForwardEval& eval, const Vec& yhat, double mean_tau,
            const SmoothPrior* prior, const PhiPosterior* phi);

/// Gauss-Newton ascent on F_mu from mu0 with accept/reject on the exact objective.
/// `prior` may be null or empty, in which case no smoothing is applied.
MuPhaseResult update_mu(const ForwardModel& model, const Vec& yhat, const Vec& mu0,
                        const SmoothPrior* prior, double a0, double b0, const MuUpdateOptions& opts = {});

}  // namespace elastovb
