#pragma once

#include "elastovb/forward_model.hpp"
#include "elastovb/mean_update.hpp"
#include "elastovb/posterior.hpp"
#include "elastovb/smooth_prior.hpp"
#include "elastovb/stiefel.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace elastovb {

struct DriverConfig {
    double lambda0_1 = 1e-10;
    double info_gain_threshold = 0.01;
    int info_gain_window = 5;
    int max_bases = 40;
    std::optional<int> force_bases;  // grow to exactly this many bases, ignoring the gain test
    std::uint64_t seed = 1;

    double a0 = 0.0;
    double b0 = 0.0;

    double sweep_tol = 1e-8;  // relative F change between (W, q) sweeps
    int sweep_window = 3;
    int max_sweeps = 200;
    int q_max_iter = 50;
    double q_tol = 1e-10;

    MuUpdateOptions mu;
    StiefelOptions stiefel{.max_iters = 100};  // per sweep; sweeps re-enter the optimizer

    std::function<void(const struct BasisRecord&)> on_basis;  // progress hook, optional

    void validate() const;
};

/// Per-coordinate KL terms -log r + r - 1 with r = lambda_i / lambda0_i.
Vec kl_terms(const Vec& lambda0, const Vec& lambda);

struct InfoGain {
    double value = 0.0;
    bool degenerate = false;  // all KL terms zero: nothing learned, reported as 0
};

/// Relative KL increment from d-1 to d coordinates; 1 for d = 1 unless degenerate.
InfoGain info_gain(const Vec& lambda0, const Vec& lambda, Index d);

/// max(lambda0_1, lambda_prev - lambda0_prev), never below lambda0_prev.
double next_prior_precision(double lambda0_1, double lambda_prev, double lambda0_prev);

/// Appends one random unit column orthogonal to W (two Gram-Schmidt passes) with
/// lambda0 extended by the schedule and lambda initialized to the new lambda0.
void add_basis(ReducedPosterior& state, double lambda0_1, std::mt19937_64& rng);

struct BasisRecord {
    int d_theta = 0;
    double info_gain = 0.0;
    bool gain_degenerate = false;
    double elbo = 0.0;
    double kl_sum = 0.0;
    std::uint64_t forward_calls = 0;  // cumulative
    int sweeps = 0;
    int w_iterations = 0;
    double mean_tau = 0.0;
    Vec lambda0;
    Vec lambda;
};

struct ElboTraceRow {
    int d_theta = 0;
    int sweep = 0;
    ElboBreakdown f;
    std::uint64_t forward_calls = 0;
};

struct RunTrace {
    std::vector<BasisRecord> bases;
    std::vector<ElboTraceRow> elbo;
    std::vector<MuUpdateReport> mu_steps;
    std::vector<StiefelTraceRow> last_w_trace;
    std::optional<PhiPosterior> phi;
    ReducedPosterior state;
    ForwardEval eval;  // at state.mu
    std::uint64_t forward_calls = 0;
    std::size_t floored_jumps = 0;
    std::string stop_reason;

    /// Bases at termination.
    int d_theta() const { return int(state.bases()); }
};

/// Full pipeline: one mu phase, then bases added one at a time, each followed by
/// (W, q) sweeps until F settles. Forward calls happen only in the mu phase.
RunTrace run(const ForwardModel& model, const Vec& yhat, const Vec& mu0, const SmoothPrior* prior,
             const DriverConfig& config);

}  // namespace elastovb
