#include "elastovb/stiefel.hpp"

#include "elastovb/error.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace elastovb {

namespace {

double defect(const Mat& w) {
    if (w.cols() == 0) return 0.0;
    return (w.transpose() * w - Mat::Identity(w.cols(), w.cols())).cwiseAbs().maxCoeff();
}

// Solves m x = rhs, reporting failure instead of returning garbage.
bool solve_checked(const Mat& m, const Mat& rhs, Mat& out) {
    Eigen::PartialPivLU<Mat> lu(m);
    const double rc = lu.rcond();
    if (!(rc > 1e-14)) return false;
    out = lu.solve(rhs);
    return out.allFinite();
}

}  // namespace

WObjective WObjective::from_jacobian(const Mat& g, const Vec& lambda, double mean_tau) {
    if ((lambda.array() <= 0.0).any()) throw InvalidInput("F_W: precisions must be positive");
    WObjective obj;
    obj.gram = g.transpose() * g;
    obj.inv_lambda = lambda.cwiseInverse();
    obj.tau = mean_tau;
    return obj;
}

double WObjective::value(const Mat& w) const {
    if (w.cols() == 0) return 0.0;
    const Vec s = (w.transpose() * gram * w).diagonal();
    return -0.5 * tau * s.dot(inv_lambda);
}

Mat WObjective::gradient(const Mat& w) const {
    return -tau * (gram * w) * inv_lambda.asDiagonal();
}

Mat grad_fw(const Mat& w, const Mat& g, const Vec& lambda, double mean_tau) {
    return -mean_tau * (g.transpose() * (g * w)) * lambda.cwiseInverse().asDiagonal();
}

double objective_fw(const Mat& w, const Mat& g, const Vec& lambda, double mean_tau) {
    if (w.cols() == 0) return 0.0;
    const Vec s = (g * w).colwise().squaredNorm().transpose();
    return -0.5 * mean_tau * (s.array() / lambda.array()).sum();
}

SkewFactor descent_skew(const Mat& w, const Mat& grad_f) {
    const Index d = w.rows();
    const Index p = w.cols();
    SkewFactor b;
    b.U.resize(d, 2 * p);
    b.V.resize(d, 2 * p);
    b.U << grad_f, w;
    b.V << w, -grad_f;
    return b;
}

CayleyResult cayley_step(const Mat& w, const SkewFactor& b, double alpha) {
    if (!(alpha > 0.0)) throw InvalidInput("Cayley step: alpha must be positive");
    if (b.U.rows() != w.rows() || b.V.rows() != w.rows() || b.U.cols() != b.V.cols()) {
        throw InvalidInput("Cayley step: skew factor does not match W");
    }
    const Index d = w.rows();
    const Index r = b.U.cols();
    CayleyResult out;
    out.alpha = alpha;
    if (r == 0 || w.cols() == 0) {
        out.W = w;
        return out;
    }
    const bool dense = r >= d;
    const Mat bd = dense ? b.dense() : Mat();
    const Mat vtu = dense ? Mat() : Mat(b.V.transpose() * b.U);
    const Mat vtw = dense ? Mat() : Mat(b.V.transpose() * w);

    for (; out.halvings <= 30; ++out.halvings) {
        const double h = 0.5 * out.alpha;
        Mat x;
        bool ok;
        if (dense) {
            const Mat id = Mat::Identity(d, d);
            ok = solve_checked(id + h * bd, w - h * (bd * w), x);
            if (ok) out.W = x;
        } else {
            // (I + hUV^T)^-1 (I - hUV^T) W = W - 2h U (I + h V^T U)^-1 V^T W
            ok = solve_checked(Mat::Identity(r, r) + h * vtu, vtw, x);
            if (ok) out.W = w - 2.0 * h * (b.U * x);
        }
        if (ok) return out;
        out.alpha *= 0.5;
    }
    throw NumericalFailure("Cayley step: system stayed singular after 30 halvings");
}

double bb_step(const Mat& delta_w, const Mat& delta_grad, double fallback) {
    const double den = delta_grad.squaredNorm();
    if (!(den > 0.0) || !std::isfinite(den)) return fallback;
    const double a = std::abs((delta_w.transpose() * delta_grad).trace()) / den;
    if (!(a > 0.0) || !std::isfinite(a)) return fallback;
    return a;
}

StiefelResult optimize_w(const Mat& w0, const WObjective& objective, const StiefelOptions& opts) {
    StiefelResult res;
    res.W = w0;
    res.fw = res.fw_initial = objective.value(w0);
    if (w0.cols() == 0) {
        res.converged = true;
        return res;
    }

    // Descent on f = -F_W / |dF_W/dW (W0)|_F. The scaling leaves the minimizer alone but
    // makes alpha_init meaningful whatever the magnitudes of <tau> and Lambda^-1.
    Mat w = w0;
    const double g0 = objective.gradient(w0).norm();
    const double scale = g0 > 0.0 && std::isfinite(g0) ? 1.0 / g0 : 1.0;
    auto fval = [&](const Mat& x) { return -scale * objective.value(x); };
    auto fgrad = [&](const Mat& x) { return Mat(-scale * objective.gradient(x)); };
    double f = fval(w);
    Mat g = fgrad(w);
    std::deque<double> recent{f};
    std::vector<double> history{res.fw};
    double alpha = opts.alpha_init;

    for (int it = 1; it <= opts.max_iters; ++it) {
        const SkewFactor b = descent_skew(w, g);
        // |A|_F^2 for A = g W^T - W g^T. Splitting g = W S + P with W^T P = 0 gives
        // |S - S^T|^2 + 2 |P|^2, free of the cancellation in the Gram-matrix form.
        const Mat s = w.transpose() * g;
        const double a_norm2 = (s - s.transpose()).squaredNorm() + 2.0 * (g - w * s).squaredNorm();
        if (std::sqrt(a_norm2) <= opts.grad_tol * std::max(1.0, g.norm())) {
            res.converged = true;
            break;
        }
        const double slope = -0.5 * a_norm2;
        const double reference = *std::max_element(recent.begin(), recent.end());

        Mat w_new;
        double f_new = 0.0;
        double step = alpha;
        bool accepted = false;
        for (int bt = 0; bt <= opts.max_backtracks; ++bt) {
            const CayleyResult c = cayley_step(w, b, step);
            step = c.alpha;
            w_new = c.W;
            f_new = fval(w_new);
            if (f_new <= reference + opts.armijo * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;

        const Mat g_new = fgrad(w_new);
        alpha = bb_step(w_new - w, g_new - g, opts.alpha_init);
        w = w_new;
        g = g_new;
        f = f_new;

        recent.push_back(f);
        if (int(recent.size()) > opts.window) recent.pop_front();
        history.push_back(-f / scale);
        res.iterations = it;
        res.trace.push_back({it, -f / scale, step, defect(w)});
        if (-f / scale > res.fw) {
            res.fw = -f / scale;
            res.W = w;
        }
        if (int(history.size()) > opts.window) {
            const double old = history[history.size() - 1 - std::size_t(opts.window)];
            const double now = history.back();
            if (std::abs(now - old) / std::max(std::abs(now), std::numeric_limits<double>::min()) < opts.tol) {
                res.converged = true;
                break;
            }
        }
    }
    return res;
}

}  // namespace elastovb
