#pragma once

#include "elastovb/mesh.hpp"

#include <vector>

namespace elastovb {

/// Skew matrix kept in factored form B = U V^T (d x 2p times 2p x d).
struct SkewFactor {
    Mat U;
    Mat V;

    // antisymmetrized so rounding in the product cannot leak a symmetric part
    Mat dense() const {
        const Mat m = U * V.transpose();
        return 0.5 * (m - m.transpose());
    }
};

/// Quadratic objective F_W(W) = -<tau>/2 W^T M W : Lambda^-1 with M = G^T G held dense.
struct WObjective {
    Mat gram;       // G^T G
    Vec inv_lambda; // diagonal of Lambda^-1
    double tau = 1.0;

    static WObjective from_jacobian(const Mat& g, const Vec& lambda, double mean_tau);

    double value(const Mat& w) const;
    /// dF_W/dW = -<tau> M W Lambda^-1
    Mat gradient(const Mat& w) const;
};

/// -<tau> G^T G W Lambda^-1
Mat grad_fw(const Mat& w, const Mat& g, const Vec& lambda, double mean_tau);
double objective_fw(const Mat& w, const Mat& g, const Vec& lambda, double mean_tau);

/// Skew factor of the descent direction for -F_W: with g = -dF_W/dW,
/// B = g W^T - W g^T = U V^T where U = [g, W], V = [W, -g].
SkewFactor descent_skew(const Mat& w, const Mat& grad_f);

struct CayleyResult {
    Mat W;
    double alpha = 0.0;  // step actually used
    int halvings = 0;
};

/// W_new = (I + alpha/2 B)^-1 (I - alpha/2 B) W.
///
/// For 2p < d the Sherman-Morrison-Woodbury form only inverts the 2p x 2p matrix
/// I + alpha/2 V^T U; otherwise the d x d system is solved directly. A singular
/// system halves alpha, at most 30 times, before throwing NumericalFailure.
CayleyResult cayley_step(const Mat& w, const SkewFactor& b, double alpha);

/// |tr(dW^T dG)| / |dG|_F^2, or `fallback` when the denominator vanishes.
double bb_step(const Mat& delta_w, const Mat& delta_grad, double fallback);

struct StiefelOptions {
    int max_iters = 2000;
    double tol = 1e-10;       // relative F_W change over `window` iterations
    int window = 5;           // also the nonmonotone memory
    double alpha_init = 1e-3;
    double armijo = 1e-4;
    int max_backtracks = 30;
    double grad_tol = 1e-12;  // |B|_F relative to |g|_F
};

struct StiefelTraceRow {
    int iteration = 0;
    double fw = 0.0;
    double alpha = 0.0;
    double defect = 0.0;
};

struct StiefelResult {
    Mat W;
    double fw = 0.0;
    double fw_initial = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<StiefelTraceRow> trace;
};

/// Feasible ascent on F_W over W^T W = I (Cayley curve, Barzilai-Borwein steps with a
/// nonmonotone Armijo test). Returns the best iterate seen.
StiefelResult optimize_w(const Mat& w0, const WObjective& objective, const StiefelOptions& opts = {});

}  // namespace elastovb
