#include "elastovb/commands.hpp"

#include "elastovb/error.hpp"
#include "elastovb/importance.hpp"

#include "json.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <ostream>
#include <random>

namespace elastovb {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string in_dir(const std::string& dir, const char* name) { return (fs::path(dir) / name).string(); }

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InvalidInput("cannot create output directory '" + dir + "': " + ec.message());
}

ObservationFile load_matching_observations(const Problem& p, const std::string& out_dir) {
    ObservationFile obs = ObservationFile::load(in_dir(out_dir, "observations.json"));
    if (obs.dofs != p.model->observed().dofs) {
        throw InvalidInput("observations.json was generated for a different mesh or boundary setup");
    }
    return obs;
}

}  // namespace

GeneratedData generate_data(const RunConfig& config) {
    const Problem p = build_problem(config);
    GeneratedData g;
    const MaterialField field = p.model->full_field(p.truth);
    g.u_true = assemble_and_solve(config.mesh, config.boundary(), field, config.poisson);
    g.y_clean = observe(g.u_true, p.model->observed());

    g.obs.dofs = p.model->observed().dofs;
    g.obs.seed = config.noise_seed;
    g.obs.snr_target = config.snr;
    g.obs.yhat = g.y_clean;
    if (config.snr) {
        const double signal = g.y_clean.squaredNorm() / double(std::max<Index>(1, g.y_clean.size()));
        const double var = signal / *config.snr;
        if (!(var > 0.0)) throw NumericalFailure("generate: zero signal power, SNR undefined");
        std::mt19937_64 rng(config.noise_seed);
        std::normal_distribution<double> normal(0.0, std::sqrt(var));
        Vec z(g.y_clean.size());
        for (Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
        g.obs.yhat += z;
        g.obs.tau_true = 1.0 / var;
        g.obs.snr_empirical = signal / (z.squaredNorm() / double(z.size()));
    }
    return g;
}

int cmd_generate(const RunConfig& config, const std::string& out_dir, std::ostream& log) {
    ensure_dir(out_dir);
    const GeneratedData g = generate_data(config);
    g.obs.save(in_dir(out_dir, "observations.json"));
    write_element_csv(in_dir(out_dir, "truth.csv"), config.mesh, config.phantom());
    write_node_csv(in_dir(out_dir, "displacement.csv"), config.mesh, g.u_true);
    config.save(in_dir(out_dir, "config.json"));
    log << "generate: d_y = " << g.obs.d_y();
    if (g.obs.tau_true) {
        log << ", tau_true = " << *g.obs.tau_true << ", empirical SNR = " << g.obs.snr_empirical;
    } else {
        log << ", noiseless";
    }
    log << "\n";
    return 0;
}

int cmd_invert(const RunConfig& config, const std::string& out_dir, std::ostream& log) {
    const Problem p = build_problem(config);
    const ObservationFile obs = load_matching_observations(p, out_dir);

    const auto t0 = std::chrono::steady_clock::now();
    const RunTrace trace = run(*p.model, obs.yhat, p.mu0, &p.prior, config.driver);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const PsiStats stats = posterior_psi_stats(trace.state);
    const Vec clamped = config.phantom();
    Vec mean_full = p.model->expand(stats.mean, 0.0);
    for (Index e = 0; e < mean_full.size(); ++e) {
        if (config.clamp_mask()[std::size_t(e)]) mean_full[e] = clamped[e];
    }
    write_element_csv(in_dir(out_dir, "posterior_mean.csv"), config.mesh, mean_full);
    write_element_csv(in_dir(out_dir, "posterior_std.csv"), config.mesh, p.model->expand(stats.std, 0.0));
    write_text(in_dir(out_dir, "state.json"), state_to_json(trace.state));
    write_text(in_dir(out_dir, "run.json"), run_summary_json(trace));
    write_elbo_csv(in_dir(out_dir, "elbo.csv"), trace.elbo);
    write_info_gain_csv(in_dir(out_dir, "info_gain.csv"), trace.bases);
    write_lambda_csv(in_dir(out_dir, "lambda.csv"), trace.state);
    write_mu_steps_csv(in_dir(out_dir, "mu_steps.csv"), trace.mu_steps);
    write_w_trace_csv(in_dir(out_dir, "w_trace.csv"), trace.last_w_trace);

    log << "invert: d_theta = " << trace.d_theta() << ", forward calls = " << trace.forward_calls
        << ", <tau> = " << trace.state.mean_tau() << ", " << trace.stop_reason << " (" << seconds << " s)\n";
    return 0;
}

int cmd_validate(const RunConfig& config, const std::string& out_dir, std::ostream& log) {
    const Problem p = build_problem(config);
    const ObservationFile obs = load_matching_observations(p, out_dir);
    const ReducedPosterior state = state_from_json(read_text(in_dir(out_dir, "state.json")));
    if (state.dim() != p.model->parameter_dim()) {
        throw InvalidInput("state.json does not match the configured model");
    }
    ISOptions opts;
    opts.samples = config.is_samples;
    opts.seed = config.is_seed;
    const ISReport rep = run_is(state, *p.model, obs.yhat, opts);
    const VbIsComparison cmp = compare_vb_is(state, rep);
    write_text(in_dir(out_dir, "is_report.json"), is_report_json(rep, cmp));
    write_weights_csv(in_dir(out_dir, "weights.csv"), rep);
    log << "validate: M = " << rep.M << ", ESS = " << rep.ess << ", median rel. mean diff = "
        << cmp.mean_rel_median << ", failed samples = " << rep.failed << "\n";
    return rep.degenerate ? 2 : 0;
}

int cmd_report(const std::string& out_dir, std::ostream& out) {
    int found = 0;
    std::vector<std::string> missing;
    auto load = [&](const char* name) -> std::optional<json> {
        const std::string path = in_dir(out_dir, name);
        if (!fs::exists(path)) {
            missing.emplace_back(name);
            return std::nullopt;
        }
        try {
            ++found;
            return json::parse(read_text(path));
        } catch (const std::exception& e) {
            missing.push_back(std::string(name) + " (unreadable: " + e.what() + ")");
            return std::nullopt;
        }
    };
    const auto run_j = load("run.json");
    const auto obs_j = load("observations.json");
    const auto is_j = load("is_report.json");

    out << "report for " << out_dir << "\n";
    std::optional<double> mean_tau;
    if (run_j) {
        out << "d_theta: " << run_j->value("d_theta", 0) << "\n";
        out << "forward_calls: " << run_j->value("forward_calls", 0) << "\n";
        if (run_j->contains("F") && !(*run_j)["F"].is_null()) out << "final_F: " << (*run_j)["F"].get<double>() << "\n";
        mean_tau = run_j->value("mean_tau", 0.0);
        out << "mean_tau: " << *mean_tau << "\n";
        out << "stop_reason: " << run_j->value("stop_reason", std::string()) << "\n";
    }
    if (obs_j && obs_j->contains("tau_true") && !(*obs_j)["tau_true"].is_null()) {
        const double tau_true = (*obs_j)["tau_true"].get<double>();
        out << "tau_true: " << tau_true << "\n";
        if (mean_tau) out << "tau_ratio: " << *mean_tau / tau_true << "\n";
    }
    if (is_j) {
        out << "ess: " << is_j->value("ess", 0.0) << "\n";
        if (is_j->contains("comparison")) {
            out << "is_mean_rel_median: " << (*is_j)["comparison"].value("mean_rel_median", 0.0) << "\n";
        }
    }
    for (const auto& m : missing) out << "missing: " << m << "\n";
    return found > 0 ? 0 : 1;
}

}  // namespace elastovb
