#include "elastovb/driver.hpp"

#include "elastovb/error.hpp"

#include <algorithm>
#include <cmath>

namespace elastovb {

void DriverConfig::validate() const {
    if (!(info_gain_threshold > 0.0 && info_gain_threshold < 1.0)) {
        throw InvalidInput("driver: info_gain_threshold must lie in (0, 1)");
    }
    if (info_gain_window < 1) throw InvalidInput("driver: info_gain_window must be >= 1");
    if (max_bases < 1) throw InvalidInput("driver: max_bases must be >= 1");
    if (force_bases && *force_bases < 1) throw InvalidInput("driver: force_bases must be >= 1");
    if (!(lambda0_1 > 0.0)) throw InvalidInput("driver: lambda0_1 must be positive");
    if (a0 < 0.0 || b0 < 0.0) throw InvalidInput("driver: tau hyperparameters must be >= 0");
    if (sweep_window < 1 || max_sweeps < 1) throw InvalidInput("driver: bad sweep settings");
}

Vec kl_terms(const Vec& lambda0, const Vec& lambda) {
    if (lambda0.size() != lambda.size()) throw InvalidInput("info gain: length mismatch");
    Vec t(lambda.size());
    for (Index i = 0; i < lambda.size(); ++i) {
        const double r = lambda[i] / lambda0[i];
        if (!(r > 0.0)) throw InvalidInput("info gain: precision ratio must be positive");
        // -log r + r - 1 loses everything to cancellation near r = 1
        const double x = r - 1.0;
        t[i] = std::abs(x) < 1e-4 ? x * x / 2.0 - x * x * x / 3.0 : x - std::log1p(x);
        t[i] = std::max(t[i], 0.0);
    }
    return t;
}

InfoGain info_gain(const Vec& lambda0, const Vec& lambda, Index d) {
    if (d < 1 || d > lambda.size() || d > lambda0.size()) {
        throw InvalidInput("info gain: d_theta out of range");
    }
    const Vec t = kl_terms(lambda0.head(d), lambda.head(d));
    const double total = t.sum();
    InfoGain g;
    if (!(total > 0.0)) {
        g.degenerate = true;
        return g;
    }
    g.value = std::clamp(t[d - 1] / total, 0.0, 1.0);
    return g;
}

double next_prior_precision(double lambda0_1, double lambda_prev, double lambda0_prev) {
    return std::max({lambda0_1, lambda_prev - lambda0_prev, lambda0_prev});
}

void add_basis(ReducedPosterior& state, double lambda0_1, std::mt19937_64& rng) {
    const Index d = state.dim();
    const Index p = state.bases();
    if (p >= d) throw InvalidInput("add_basis: the basis already spans the parameter space");

    std::normal_distribution<double> normal(0.0, 1.0);
    Vec v(d);
    for (int attempt = 0; attempt < 16; ++attempt) {
        for (Index i = 0; i < d; ++i) v[i] = normal(rng);
        for (int pass = 0; pass < 2; ++pass) {
            if (p > 0) v -= state.W * (state.W.transpose() * v);
        }
        const double n = v.norm();
        if (n > 1e-8) {
            v /= n;
            break;
        }
        if (attempt == 15) throw NumericalFailure("add_basis: could not draw an independent direction");
    }

    const double l0 = p == 0 ? lambda0_1
                             : next_prior_precision(lambda0_1, state.lambda[p - 1], state.lambda0[p - 1]);
    state.W.conservativeResize(d, p + 1);
    state.W.col(p) = v;
    state.lambda0.conservativeResize(p + 1);
    state.lambda0[p] = l0;
    state.lambda.conservativeResize(p + 1);
    state.lambda[p] = l0;
}

RunTrace run(const ForwardModel& model, const Vec& yhat, const Vec& mu0, const SmoothPrior* prior,
             const DriverConfig& config) {
    config.validate();
    const std::uint64_t calls_at_start = model.call_count();
    auto calls = [&] { return model.call_count() - calls_at_start; };

    RunTrace trace;
    MuPhaseResult mp = update_mu(model, yhat, mu0, prior, config.a0, config.b0, config.mu);
    trace.mu_steps = mp.steps;
    trace.phi = mp.phi;
    trace.floored_jumps = mp.floored_jumps;
    trace.eval = std::move(mp.eval);

    ReducedPosterior& state = trace.state;
    state = ReducedPosterior::point(mp.mu, config.a0, config.b0);
    state.a = mp.tau.a;
    state.b = mp.tau.b;

    const SmoothPrior* active = mp.regularized ? prior : nullptr;
    const PhiPosterior* phi = trace.phi ? &*trace.phi : nullptr;
    auto bound = [&] { return elbo(state, trace.eval, yhat, active, phi); };

    std::mt19937_64 rng(config.seed);
    const int cap = config.force_bases ? *config.force_bases : config.max_bases;
    int quiet = 0;

    while (true) {
        if (state.bases() >= state.dim()) {
            trace.stop_reason = "basis spans the parameter space";
            break;
        }
        add_basis(state, config.lambda0_1, rng);
        const int d = int(state.bases());

        BasisRecord rec;
        rec.d_theta = d;
        std::vector<double> history;
        for (int sweep = 1; sweep <= config.max_sweeps; ++sweep) {
            const WObjective obj = WObjective::from_jacobian(trace.eval.G, state.lambda, state.mean_tau());
            StiefelResult w = optimize_w(state.W, obj, config.stiefel);
            state.W = std::move(w.W);
            rec.w_iterations += w.iterations;
            trace.last_w_trace = std::move(w.trace);
            refine_q(state, trace.eval, yhat, config.q_max_iter, config.q_tol);

            const ElboBreakdown f = bound();
            trace.elbo.push_back({d, sweep, f, calls()});
            history.push_back(f.total);
            rec.sweeps = sweep;
            if (int(history.size()) > config.sweep_window) {
                const double old = history[history.size() - 1 - std::size_t(config.sweep_window)];
                if (std::abs(f.total - old) <= config.sweep_tol * std::max(1.0, std::abs(f.total))) break;
            }
        }

        const InfoGain gain = info_gain(state.lambda0, state.lambda, d);
        rec.info_gain = gain.value;
        rec.gain_degenerate = gain.degenerate;
        rec.elbo = history.back();
        rec.kl_sum = kl_terms(state.lambda0, state.lambda).sum();
        rec.forward_calls = calls();
        rec.mean_tau = state.mean_tau();
        rec.lambda0 = state.lambda0;
        rec.lambda = state.lambda;
        trace.bases.push_back(rec);
        if (config.on_basis) config.on_basis(rec);

        if (d >= cap) {
            trace.stop_reason = config.force_bases ? "forced basis count reached" : "max_bases reached";
            break;
        }
        if (!config.force_bases) {
            quiet = gain.value < config.info_gain_threshold ? quiet + 1 : 0;
            if (quiet >= config.info_gain_window) {
                trace.stop_reason = "information gain below threshold";
                break;
            }
        }
    }
    trace.forward_calls = calls();
    return trace;
}

}  // namespace elastovb
