#include "elastovb/importance.hpp"

#include "elastovb/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace elastovb {

double marginal_log_likelihood_kernel(double residual_sq, Index d_y, double a0, double b0) {
    const double shape = a0 + 0.5 * double(d_y);
    if (b0 > 0.0) return -shape * std::log1p(residual_sq / (2.0 * b0));
    return -shape * std::log(std::max(residual_sq, kResidualFloor) / 2.0);
}

double marginal_log_likelihood(double residual_sq, Index d_y, double a0, double b0) {
    const double shape = a0 + 0.5 * double(d_y);
    double v = std::lgamma(shape) + marginal_log_likelihood_kernel(residual_sq, d_y, a0, b0);
    if (b0 > 0.0) v -= shape * std::log(b0);
    return v;
}

double marginal_log_likelihood_constant(Index d_y, double a0, double b0) {
    const double shape = a0 + 0.5 * double(d_y);
    double c = -0.5 * double(d_y) * std::log(2.0 * std::numbers::pi) + std::lgamma(shape);
    if (b0 > 0.0) {
        c -= shape * std::log(b0);
        if (a0 > 0.0) c += a0 * std::log(b0) - std::lgamma(a0);
    }
    return c;
}

double marginal_log_likelihood(const Vec& theta, const ReducedPosterior& state,
                               const ForwardModel& model, const Vec& yhat) {
    if (theta.size() != state.bases()) throw InvalidInput("marginal likelihood: theta has the wrong length");
    const Vec psi = state.mu + state.W * theta;
    const ForwardEval ev = model.evaluate(psi);
    return marginal_log_likelihood((yhat - ev.y).squaredNorm(), yhat.size(), state.a0, state.b0);
}

double ess(const Vec& weights) {
    if (weights.size() == 0) return 0.0;
    const double top = weights.maxCoeff();
    if (!(top > 0.0) || !std::isfinite(top)) return 0.0;
    // normalizing by the largest weight keeps the squares away from under/overflow
    const Vec u = weights / top;
    const double s = u.sum();
    return s * s / (double(weights.size()) * u.squaredNorm());
}

ISReport run_is(const ReducedPosterior& state, const ForwardModel& model, const Vec& yhat,
                const ISOptions& opts) {
    if (opts.samples < 2) throw InvalidInput("importance sampling: need at least 2 samples");
    if (yhat.size() != model.output_dim() || state.dim() != model.parameter_dim()) {
        throw InvalidInput("importance sampling: state, model and data dimensions disagree");
    }
    const int m = opts.samples;
    const Index p = state.bases();
    const Index d = state.dim();
    const std::uint64_t calls0 = model.call_count();

    ISReport rep;
    rep.M = m;
    rep.log_weights.resize(m);
    Mat samples(d, m);

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Vec sd = p > 0 ? Vec(state.lambda.array().rsqrt()) : Vec(0);
    const double half_log_ratio = p > 0 ? 0.5 * (state.lambda0.array() / state.lambda.array()).log().sum() : 0.0;

    for (int s = 0; s < m; ++s) {
        Vec theta(p);
        for (Index i = 0; i < p; ++i) theta[i] = sd[i] * normal(rng);
        samples.col(s) = state.mu + state.W * theta;
        if (opts.uniform_weights) {
            rep.log_weights[s] = 0.0;
            continue;
        }
        // log p(theta) - log q(theta)
        double lw = half_log_ratio;
        if (p > 0) lw -= 0.5 * ((state.lambda0 - state.lambda).array() * theta.array().square()).sum();
        try {
            const ForwardEval ev = model.evaluate(samples.col(s));
            lw += marginal_log_likelihood_kernel((yhat - ev.y).squaredNorm(), yhat.size(), state.a0, state.b0);
        } catch (const NumericalFailure&) {
            lw = -std::numeric_limits<double>::infinity();
            ++rep.failed;
        }
        rep.log_weights[s] = lw;
    }
    rep.forward_calls = model.call_count() - calls0;

    const double lmax = rep.log_weights.maxCoeff();
    if (!std::isfinite(lmax)) {
        rep.degenerate = true;
        rep.weights = Vec::Zero(m);
        rep.psi_mean = state.mu;
        rep.psi_std = Vec::Zero(d);
        rep.log_evidence = -std::numeric_limits<double>::infinity();
        return rep;
    }
    rep.weights = (rep.log_weights.array() - lmax).exp();
    rep.ess = ess(rep.weights);

    const double sw = rep.weights.sum();
    const double mean_w = sw / m;
    const double var_w = (rep.weights.array() - mean_w).square().sum() / (m - 1);
    const double constant = opts.uniform_weights ? 0.0 : marginal_log_likelihood_constant(yhat.size(), state.a0, state.b0);
    rep.log_evidence = lmax + std::log(mean_w) + constant;
    rep.log_evidence_se = std::sqrt(var_w / m) / mean_w;

    rep.psi_mean = samples * rep.weights / sw;
    const Mat centered = samples.colwise() - rep.psi_mean;
    rep.psi_std = (centered.array().square().matrix() * rep.weights / sw).cwiseSqrt();
    return rep;
}

double median(Vec v) {
    if (v.size() == 0) return 0.0;
    std::vector<double> x(v.data(), v.data() + v.size());
    const std::size_t mid = x.size() / 2;
    std::nth_element(x.begin(), x.begin() + std::ptrdiff_t(mid), x.end());
    if (x.size() % 2 == 1) return x[mid];
    const double hi = x[mid];
    const double lo = *std::max_element(x.begin(), x.begin() + std::ptrdiff_t(mid));
    return 0.5 * (lo + hi);
}

VbIsComparison compare_vb_is(const ReducedPosterior& state, const ISReport& report) {
    if (report.psi_mean.size() != state.dim() || report.psi_std.size() != state.dim()) {
        throw InvalidInput("VB/IS comparison: report does not match the state");
    }
    const PsiStats vb = posterior_psi_stats(state);
    const Index d = state.dim();
    VbIsComparison c;
    c.mean_rel.resize(d);
    c.std_rel.resize(d);
    c.mean_abs = (report.psi_mean - vb.mean).cwiseAbs();
    auto rel = [](double est, double ref) {
        const double diff = std::abs(est - ref);
        if (diff == 0.0) return 0.0;
        return diff / std::max(std::abs(ref), std::numeric_limits<double>::min());
    };
    for (Index k = 0; k < d; ++k) {
        c.mean_rel[k] = rel(report.psi_mean[k], vb.mean[k]);
        c.std_rel[k] = rel(report.psi_std[k], vb.std[k]);
    }
    if (d > 0) {
        c.mean_rel_max = c.mean_rel.maxCoeff();
        c.std_rel_max = c.std_rel.maxCoeff();
        c.mean_abs_max = c.mean_abs.maxCoeff();
        c.mean_rel_median = median(c.mean_rel);
        c.std_rel_median = median(c.std_rel);
    }
    return c;
}

}  // namespace elastovb
