#include "elastovb/posterior.hpp"

#include "elastovb/error.hpp"

#include <boost/math/special_functions/digamma.hpp>

#include <cmath>
#include <numbers>
#include <string>

namespace elastovb {

double ReducedPosterior::mean_log_tau() const {
    return boost::math::digamma(a) - std::log(b);
}

double ReducedPosterior::orthonormality_defect() const {
    if (W.cols() == 0) return 0.0;
    const Mat gram = W.transpose() * W;
    return (gram - Mat::Identity(W.cols(), W.cols())).cwiseAbs().maxCoeff();
}

void ReducedPosterior::validate() const {
    if (W.rows() != mu.size() && W.cols() > 0) {
        throw InvalidInput("posterior: W has " + std::to_string(W.rows()) + " rows, mu has " +
                           std::to_string(mu.size()) + " entries");
    }
    if (lambda0.size() != W.cols() || lambda.size() != W.cols()) {
        throw InvalidInput("posterior: precision vectors must have one entry per basis");
    }
    if (!mu.allFinite() || !W.allFinite() || !lambda0.allFinite() || !lambda.allFinite()) {
        throw InvalidInput("posterior: non-finite state");
    }
    if ((lambda0.array() <= 0.0).any() || (lambda.array() <= 0.0).any()) {
        throw InvalidInput("posterior: precisions must be positive");
    }
}

ReducedPosterior ReducedPosterior::point(Vec mu, double a0, double b0) {
    ReducedPosterior s;
    s.W = Mat(mu.size(), 0);
    s.mu = std::move(mu);
    s.lambda0 = Vec(0);
    s.lambda = Vec(0);
    s.a0 = a0;
    s.b0 = b0;
    return s;
}

Vec data_precision(const Mat& w, const Mat& g) {
    if (w.cols() == 0) return Vec(0);
    return (g * w).colwise().squaredNorm().transpose();
}

GammaParams update_q_tau(const ReducedPosterior& state, const ForwardEval& eval, const Vec& yhat) {
    if (yhat.size() != eval.y.size()) {
        throw InvalidInput("q(tau) update: observation length does not match model output");
    }
    const Vec s = data_precision(state.W, eval.G);
    const double trace = state.bases() > 0 ? (s.array() / state.lambda.array()).sum() : 0.0;
    GammaParams out;
    out.a = state.a0 + 0.5 * double(yhat.size());
    out.b = state.b0 + 0.5 * (yhat - eval.y).squaredNorm() + 0.5 * trace;
    if (!(out.b > 0.0) || !std::isfinite(out.b)) {
        throw NumericalFailure("q(tau) update: rate parameter is not positive (b = " +
                               std::to_string(out.b) + ")");
    }
    return out;
}

Vec update_q_theta(const ReducedPosterior& state, const ForwardEval& eval) {
    const Vec s = data_precision(state.W, eval.G);
    const Vec lambda = state.lambda0 + state.mean_tau() * s;
    if (!lambda.allFinite()) throw NumericalFailure("q(Theta) update: non-finite precision");
    return lambda;
}

QFixedPointReport refine_q(ReducedPosterior& state, const ForwardEval& eval, const Vec& yhat,
                           int max_iter, double tol) {
    QFixedPointReport report;
    if (!(state.a > 0.0 && state.b > 0.0)) {
        const auto g = update_q_tau(state, eval, yhat);
        state.a = g.a;
        state.b = g.b;
    }
    for (int it = 0; it < max_iter; ++it) {
        const Vec lambda = update_q_theta(state, eval);
        const Vec lambda_old = state.lambda;
        const double a_old = state.a;
        const double b_old = state.b;
        state.lambda = lambda;
        const auto g = update_q_tau(state, eval, yhat);
        state.a = g.a;
        state.b = g.b;
        report.iterations = it + 1;

        double change = std::abs(state.a - a_old) / state.a + std::abs(state.b - b_old) / state.b;
        if (state.bases() > 0) {
            change += ((state.lambda - lambda_old).array().abs() / state.lambda.array()).maxCoeff();
        }
        if (change < tol) {
            report.converged = true;
            break;
        }
    }
    return report;
}

double tau_terms(double a0, double b0, double a, double b) {
    using boost::math::digamma;
    const double mean = a / b;
    const double mean_log = digamma(a) - std::log(b);
    auto log_z = [](double shape, double rate) { return std::lgamma(shape) - shape * std::log(rate); };
    double t = (a0 - 1.0) * mean_log - b0 * mean;
    if (a0 > 0.0 && b0 > 0.0) t -= log_z(a0, b0);
    t += -(a - 1.0) * mean_log + b * mean + log_z(a, b);
    return t;
}

double theta_terms(const Vec& lambda0, const Vec& lambda) {
    if (lambda.size() == 0) return 0.0;
    const auto l0 = lambda0.array();
    const auto l = lambda.array();
    return 0.5 * l0.log().sum() - 0.5 * (l0 / l).sum() - 0.5 * l.log().sum() +
           0.5 * double(lambda.size());
}

ElboBreakdown elbo(const ReducedPosterior& state, const ForwardEval& eval, const Vec& yhat,
                   const SmoothPrior* prior, const PhiPosterior* phi) {
    const double dy = double(yhat.size());
    const double tau = state.mean_tau();
    const double log_tau = state.mean_log_tau();
    const Vec s = data_precision(state.W, eval.G);
    const double trace = state.bases() > 0 ? (s.array() / state.lambda.array()).sum() : 0.0;

    ElboBreakdown f;
    f.likelihood = -0.5 * dy * std::log(2.0 * std::numbers::pi) + 0.5 * dy * log_tau -
                   0.5 * tau * ((yhat - eval.y).squaredNorm() + trace);
    f.theta = theta_terms(state.lambda0, state.lambda);
    f.tau = tau_terms(state.a0, state.b0, state.a, state.b);
    if (prior != nullptr && phi != nullptr && !prior->empty()) {
        f.log_p_mu = prior->log_prior_and_grad(state.mu, *phi).value;
        f.phi = prior->phi_bound_terms(*phi);
    }
    f.log_p_w = 0.0;
    f.total = f.likelihood + f.theta + f.tau + f.log_p_mu + f.phi + f.log_p_w;
    return f;
}

PsiStats posterior_psi_stats(const ReducedPosterior& state) {
    PsiStats out;
    out.mean = state.mu;
    if (state.bases() == 0) {
        out.factor = Mat(state.dim(), 0);
        out.std = Vec::Zero(state.dim());
        return out;
    }
    const Vec inv_sqrt = state.lambda.array().rsqrt();
    out.factor = state.W * inv_sqrt.asDiagonal();
    out.std = out.factor.rowwise().squaredNorm().cwiseSqrt();
    return out;
}

}  // namespace elastovb
