#pragma once

#include "elastovb/forward_model.hpp"
#include "elastovb/posterior.hpp"

#include <cstdint>
#include <vector>

namespace elastovb {

/// Squared residuals below this are clamped before taking logs (improper-prior guard).
inline constexpr double kResidualFloor = 1e-300;

/// Theta-dependent part of log int N(yhat | y, 1/tau) Gamma(tau | a0, b0) dtau:
/// -(a0 + d/2) log(1 + r2 / (2 b0)) for b0 > 0, -(a0 + d/2) log(r2 / 2) for b0 = 0.
double marginal_log_likelihood_kernel(double residual_sq, Index d_y, double a0, double b0);

/// lgamma(a0 + d/2) - (a0 + d/2) log(b0 + r2/2), evaluated without cancellation for large b0.
double marginal_log_likelihood(double residual_sq, Index d_y, double a0, double b0);

/// What the kernel leaves out of the full tau-marginal likelihood: -d/2 log 2pi,
/// the Gamma normalizer of the prior when it is proper, and the lgamma term.
double marginal_log_likelihood_constant(Index d_y, double a0, double b0);

/// Same quantity at Psi = mu + W theta, one forward evaluation.
double marginal_log_likelihood(const Vec& theta, const ReducedPosterior& state,
                               const ForwardModel& model, const Vec& yhat);

struct ISOptions {
    int samples = 1000;
    std::uint64_t seed = 1;
    bool uniform_weights = false;  // w = 1, no forward calls: q's own Monte Carlo error
};

struct ISReport {
    int M = 0;
    Vec log_weights;         // -inf for discarded samples
    Vec weights;             // exp(log_weights - max), in [0, 1]
    double ess = 0.0;
    double log_evidence = 0.0;     // log (1/M) sum w, including the likelihood constants
    double log_evidence_se = 0.0;  // standard error of the evidence estimate, on the log scale
    Vec psi_mean;
    Vec psi_std;
    int failed = 0;
    std::uint64_t forward_calls = 0;
    bool degenerate = false;  // every weight zero
};

/// (sum w)^2 / (M sum w^2); 0 when all weights vanish.
double ess(const Vec& weights);

/// Importance sampling with q(Theta) = N(0, Lambda^-1) as proposal and the tau-marginal
/// likelihood times the N(0, Lambda0^-1) prior as target.
ISReport run_is(const ReducedPosterior& state, const ForwardModel& model, const Vec& yhat,
                const ISOptions& opts = {});

struct VbIsComparison {
    Vec mean_rel;  // |m_is - m_vb| / |m_vb|
    Vec std_rel;   // |s_is - s_vb| / s_vb (0 when both vanish)
    Vec mean_abs;
    double mean_rel_max = 0.0;
    double mean_rel_median = 0.0;
    double std_rel_max = 0.0;
    double std_rel_median = 0.0;
    double mean_abs_max = 0.0;
};

VbIsComparison compare_vb_is(const ReducedPosterior& state, const ISReport& report);

double median(Vec v);

}  // namespace elastovb
