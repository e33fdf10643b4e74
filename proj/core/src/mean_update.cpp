#include "elastovb/mean_update.hpp"

#include "elastovb/error.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>

namespace elastovb {

namespace {

bool use_prior(const SmoothPrior* prior, const PhiPosterior* phi) {
    return prior != nullptr && phi != nullptr && !prior->empty();
}

PhiPosterior held_phi(const SmoothPrior& prior, const Vec& values) {
    if (values.size() != prior.pair_count() || (values.array() < 0.0).any()) {
        throw InvalidInput("mu update: fixed phi must hold one non-negative value per pair");
    }
    PhiPosterior p;
    p.a = values;
    p.b = Vec::Ones(values.size());
    return p;
}

}  // namespace

Mat gauss_newton_matrix(const ForwardEval& eval, double mean_tau, const SmoothPrior* prior,
                        const PhiPosterior* phi) {
    Mat h = mean_tau * (eval.G.transpose() * eval.G);
    if (use_prior(prior, phi)) prior->add_precision(h, phi->mean());
    return h;
}

GaussNewtonStep gauss_newton_step(const Vec& mu, const ForwardEval& eval, const Vec& yhat,
                                  double mean_tau, const SmoothPrior* prior, const PhiPosterior* phi,
                                  const std::vector<bool>& fixed) {
    const Index d = mu.size();
    if (eval.G.cols() != d || eval.y.size() != yhat.size()) {
        throw InvalidInput("Gauss-Newton step: dimensions of mu, G and y do not agree");
    }
    if (!fixed.empty() && Index(fixed.size()) != d) {
        throw InvalidInput("Gauss-Newton step: clamp mask has the wrong length");
    }
    Mat h = gauss_newton_matrix(eval, mean_tau, prior, phi);
    Vec rhs = mean_tau * (eval.G.transpose() * (yhat - eval.y));
    if (use_prior(prior, phi)) rhs += prior->log_prior_and_grad(mu, *phi).gradient;

    for (Index k = 0; k < Index(fixed.size()); ++k) {
        if (!fixed[std::size_t(k)]) continue;
        h.row(k).setZero();
        h.col(k).setZero();
        h(k, k) = 1.0;
        rhs[k] = 0.0;
    }

    GaussNewtonStep out;
    Eigen::LDLT<Mat> ldlt(h);
    const Vec dvals = ldlt.vectorD().cwiseAbs();
    const double dmax = dvals.size() > 0 ? dvals.maxCoeff() : 0.0;
    const bool singular = ldlt.info() != Eigen::Success || dvals.size() == 0 ||
                          !(dvals.minCoeff() > 1e-14 * dmax) || !ldlt.isPositive();
    if (singular && d > 0) {
        out.tikhonov = true;
        h.diagonal().array() += 1e-10 * std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
        ldlt.compute(h);
    }
    out.delta = d > 0 ? Vec(ldlt.solve(rhs)) : Vec(0);
    for (Index k = 0; k < Index(fixed.size()); ++k) {
        if (fixed[std::size_t(k)]) out.delta[k] = 0.0;
    }
    if (!out.delta.allFinite()) throw NumericalFailure("Gauss-Newton step: non-finite update");
    return out;
}

double f_mu(const Vec& mu, const ForwardEval& eval, const Vec& yhat, double mean_tau,
            const SmoothPrior* prior, const PhiPosterior* phi) {
    double f = -0.5 * mean_tau * (yhat - eval.y).squaredNorm();
    if (use_prior(prior, phi)) f += prior->log_prior_and_grad(mu, *phi).value;
    return f;
}

MuPhaseResult update_mu(const ForwardModel& model, const Vec& yhat, const Vec& mu0,
                        const SmoothPrior* prior, double a0, double b0, const MuUpdateOptions& opts) {
    if (yhat.size() != model.output_dim() || mu0.size() != model.parameter_dim()) {
        throw InvalidInput("mu update: observation or starting point has the wrong length");
    }
    if (prior != nullptr && !prior->empty() && prior->dim() != mu0.size()) {
        throw InvalidInput("mu update: smoothing prior dimension does not match mu");
    }
    const bool can_regularize = prior != nullptr && !prior->empty();

    MuPhaseResult res;
    res.mu = mu0;
    res.eval = model.evaluate(mu0);
    res.forward_calls = 1;

    ReducedPosterior point = ReducedPosterior::point(mu0, a0, b0);
    auto refresh_tau = [&] {
        point.mu = res.mu;
        res.tau = update_q_tau(point, res.eval, yhat);
        point.a = res.tau.a;
        point.b = res.tau.b;
    };
    auto refresh_phi = [&] {
        if (!res.regularized) return;
        if (opts.fixed_phi) {
            res.phi = held_phi(*prior, *opts.fixed_phi);
        } else {
            res.phi = prior->em_phi(res.mu);
            res.floored_jumps += res.phi->floored;
        }
    };
    auto bound = [&] {
        point.mu = res.mu;
        const PhiPosterior* phi = res.phi ? &*res.phi : nullptr;
        // held phi is a plain weight vector, not a posterior; only the quadratic term applies
        if (opts.fixed_phi) {
            return elbo(point, res.eval, yhat).total + f_mu(res.mu, res.eval, yhat, 0.0, prior, phi);
        }
        return elbo(point, res.eval, yhat, prior, phi).total;
    };

    refresh_tau();
    int accepted = 0;
    if (can_regularize && opts.warmup_steps <= 0) {
        res.regularized = true;
        refresh_phi();
    }

    int trials = 0;
    while (trials < opts.max_outer) {
        const double tau = res.tau.a / res.tau.b;
        const PhiPosterior* phi = res.phi ? &*res.phi : nullptr;
        const SmoothPrior* active = res.regularized ? prior : nullptr;
        MuUpdateReport rep;
        rep.regularized = res.regularized;
        rep.f_before = f_mu(res.mu, res.eval, yhat, tau, active, phi);

        const GaussNewtonStep step = gauss_newton_step(res.mu, res.eval, yhat, tau, active, phi, opts.fixed);
        rep.tikhonov = step.tikhonov;
        rep.step_norm = step.delta.size() > 0 ? step.delta.cwiseAbs().maxCoeff() : 0.0;

        bool converged = rep.step_norm < opts.step_tol;
        if (!converged) {
            double scale = 1.0;
            for (int h = 0; h <= opts.max_halvings && trials < opts.max_outer; ++h, scale *= 0.5) {
                const Vec trial = res.mu + scale * step.delta;
                ++trials;
                ++rep.forward_calls;
                ForwardEval ev;
                try {
                    ev = model.evaluate(trial);
                } catch (const NumericalFailure&) {
                    rep.halvings = h + 1;
                    continue;
                }
                const double f_trial = f_mu(trial, ev, yhat, tau, active, phi);
                if (f_trial > rep.f_before) {
                    rep.accepted = true;
                    rep.f_after = f_trial;
                    rep.halvings = h;
                    rep.step_norm *= scale;
                    res.mu = trial;
                    res.eval = std::move(ev);
                    break;
                }
                rep.halvings = h + 1;
            }
        }
        res.forward_calls += rep.forward_calls;

        if (rep.accepted) {
            ++accepted;
            const double gain = rep.f_after - rep.f_before;
            converged = gain <= opts.tol * std::abs(rep.f_after) || rep.step_norm < opts.step_tol;
            refresh_tau();
            refresh_phi();
            rep.bound = bound();
            res.steps.push_back(rep);
        } else {
            rep.f_after = rep.f_before;
            rep.bound = bound();
            if (rep.forward_calls > 0 || !converged) res.steps.push_back(rep);
            converged = true;
        }

        if (!converged && !res.regularized && can_regularize && accepted >= opts.warmup_steps) {
            res.regularized = true;
            refresh_phi();
            continue;
        }
        if (converged) {
            if (!res.regularized && can_regularize) {
                res.regularized = true;
                refresh_phi();
                continue;
            }
            break;
        }
    }
    return res;
}

}  // namespace elastovb
