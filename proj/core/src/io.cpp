#include "elastovb/io.hpp"

#include "elastovb/error.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace elastovb {

using nlohmann::json;

namespace {

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vec json_vec(const json& j) {
    const auto x = j.get<std::vector<double>>();
    return Eigen::Map<const Vec>(x.data(), Index(x.size()));
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write '" + path + "'");
    out << std::setprecision(17);
    return out;
}

}  // namespace

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
}

void ObservationFile::validate() const {
    if (Index(dofs.size()) != yhat.size()) throw InvalidInput("observations: dof list and values differ in length");
    if (!yhat.allFinite()) throw InvalidInput("observations: non-finite values");
    if (tau_true && !(*tau_true > 0.0)) throw InvalidInput("observations: tau_true must be positive");
}

std::string ObservationFile::to_json() const {
    json j = {
        {"schema", kSchemaVersion},
        {"d_y", d_y()},
        {"dofs", dofs},
        {"yhat", vec_json(yhat)},
        {"seed", seed},
        {"tau_true", tau_true ? json(*tau_true) : json(nullptr)},
        {"snr_target", snr_target ? json(*snr_target) : json(nullptr)},
        {"snr_empirical", snr_empirical},
    };
    return j.dump(2) + "\n";
}

ObservationFile ObservationFile::from_json(const std::string& text) {
    ObservationFile o;
    try {
        const json j = json::parse(text);
        o.dofs = j.at("dofs").get<std::vector<Index>>();
        o.yhat = json_vec(j.at("yhat"));
        o.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("tau_true") && !j.at("tau_true").is_null()) o.tau_true = j.at("tau_true").get<double>();
        if (j.contains("snr_target") && !j.at("snr_target").is_null()) o.snr_target = j.at("snr_target").get<double>();
        o.snr_empirical = j.value("snr_empirical", 0.0);
        if (j.contains("d_y") && j.at("d_y").get<Index>() != o.yhat.size()) {
            throw InvalidInput("observations: d_y does not match the number of values");
        }
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("observations: ") + e.what());
    }
    o.validate();
    return o;
}

void ObservationFile::save(const std::string& path) const { write_text(path, to_json()); }

ObservationFile ObservationFile::load(const std::string& path) { return from_json(read_text(path)); }

void write_element_csv(const std::string& path, const Mesh2D& mesh, const Vec& values) {
    if (values.size() != mesh.element_count()) throw InvalidInput("element CSV: wrong number of values");
    auto out = open_out(path);
    out << "elem_ix,elem_iy,value\n";
    for (int iy = 0; iy < mesh.ny; ++iy) {
        for (int ix = 0; ix < mesh.nx; ++ix) out << ix << ',' << iy << ',' << values[mesh.element(ix, iy)] << '\n';
    }
}

Vec read_element_csv(const std::string& path, const Mesh2D& mesh) {
    std::istringstream in(read_text(path));
    std::string line;
    std::getline(in, line);
    if (line != "elem_ix,elem_iy,value") throw InvalidInput("element CSV: unexpected header in '" + path + "'");
    Vec v = Vec::Constant(mesh.element_count(), std::numeric_limits<double>::quiet_NaN());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        int ix = 0, iy = 0;
        double value = 0.0;
        char c1 = 0, c2 = 0;
        std::istringstream ls(line);
        if (!(ls >> ix >> c1 >> iy >> c2 >> value) || c1 != ',' || c2 != ',' || ix < 0 || iy < 0 ||
            ix >= mesh.nx || iy >= mesh.ny) {
            throw InvalidInput("element CSV: bad row '" + line + "'");
        }
        v[mesh.element(ix, iy)] = value;
    }
    if (!v.allFinite()) throw InvalidInput("element CSV: missing elements in '" + path + "'");
    return v;
}

void write_node_csv(const std::string& path, const Mesh2D& mesh, const Vec& u) {
    if (u.size() != mesh.dof_count()) throw InvalidInput("node CSV: wrong number of values");
    auto out = open_out(path);
    out << "node_ix,node_iy,ux,uy\n";
    for (int iy = 0; iy <= mesh.ny; ++iy) {
        for (int ix = 0; ix <= mesh.nx; ++ix) {
            out << ix << ',' << iy << ',' << u[mesh.dof(ix, iy, 0)] << ',' << u[mesh.dof(ix, iy, 1)] << '\n';
        }
    }
}

void write_elbo_csv(const std::string& path, const std::vector<ElboTraceRow>& rows) {
    auto out = open_out(path);
    out << "d_theta,sweep,F,likelihood,theta,tau,log_p_mu,phi,log_p_w,forward_calls\n";
    for (const auto& r : rows) {
        out << r.d_theta << ',' << r.sweep << ',' << r.f.total << ',' << r.f.likelihood << ',' << r.f.theta
            << ',' << r.f.tau << ',' << r.f.log_p_mu << ',' << r.f.phi << ',' << r.f.log_p_w << ','
            << r.forward_calls << '\n';
    }
}

void write_info_gain_csv(const std::string& path, const std::vector<BasisRecord>& rows) {
    auto out = open_out(path);
    out << "d_theta,info_gain,degenerate,F,kl_sum,forward_calls,sweeps,mean_tau\n";
    for (const auto& r : rows) {
        out << r.d_theta << ',' << r.info_gain << ',' << int(r.gain_degenerate) << ',' << r.elbo << ','
            << r.kl_sum << ',' << r.forward_calls << ',' << r.sweeps << ',' << r.mean_tau << '\n';
    }
}

void write_lambda_csv(const std::string& path, const ReducedPosterior& state) {
    auto out = open_out(path);
    out << "i,lambda0,lambda,variance\n";
    for (Index i = 0; i < state.bases(); ++i) {
        out << i + 1 << ',' << state.lambda0[i] << ',' << state.lambda[i] << ',' << 1.0 / state.lambda[i] << '\n';
    }
}

void write_mu_steps_csv(const std::string& path, const std::vector<MuUpdateReport>& rows) {
    auto out = open_out(path);
    out << "step,accepted,regularized,step_norm,f_before,f_after,bound,halvings,forward_calls,tikhonov\n";
    int i = 0;
    for (const auto& r : rows) {
        out << ++i << ',' << int(r.accepted) << ',' << int(r.regularized) << ',' << r.step_norm << ','
            << r.f_before << ',' << r.f_after << ',' << r.bound << ',' << r.halvings << ','
            << r.forward_calls << ',' << int(r.tikhonov) << '\n';
    }
}

void write_w_trace_csv(const std::string& path, const std::vector<StiefelTraceRow>& rows) {
    auto out = open_out(path);
    out << "iteration,F_W,alpha,defect\n";
    for (const auto& r : rows) out << r.iteration << ',' << r.fw << ',' << r.alpha << ',' << r.defect << '\n';
}

void write_weights_csv(const std::string& path, const ISReport& report) {
    auto out = open_out(path);
    out << "sample,log_weight,weight\n";
    for (Index s = 0; s < report.log_weights.size(); ++s) {
        out << s << ',' << report.log_weights[s] << ',' << report.weights[s] << '\n';
    }
}

std::string state_to_json(const ReducedPosterior& state) {
    json w = json::array();
    for (Index c = 0; c < state.bases(); ++c) w.push_back(vec_json(state.W.col(c)));
    json j = {
        {"schema", kSchemaVersion},
        {"mu", vec_json(state.mu)},
        {"W_columns", w},
        {"lambda0", vec_json(state.lambda0)},
        {"lambda", vec_json(state.lambda)},
        {"a0", state.a0},
        {"b0", state.b0},
        {"a", state.a},
        {"b", state.b},
    };
    return j.dump(1) + "\n";
}

ReducedPosterior state_from_json(const std::string& text) {
    ReducedPosterior s;
    try {
        const json j = json::parse(text);
        s.mu = json_vec(j.at("mu"));
        const auto& cols = j.at("W_columns");
        s.W.resize(s.mu.size(), Index(cols.size()));
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const Vec col = json_vec(cols[c]);
            if (col.size() != s.mu.size()) throw InvalidInput("state: W column has the wrong length");
            s.W.col(Index(c)) = col;
        }
        s.lambda0 = json_vec(j.at("lambda0"));
        s.lambda = json_vec(j.at("lambda"));
        s.a0 = j.at("a0").get<double>();
        s.b0 = j.at("b0").get<double>();
        s.a = j.at("a").get<double>();
        s.b = j.at("b").get<double>();
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("state: ") + e.what());
    }
    s.validate();
    return s;
}

std::string run_summary_json(const RunTrace& trace) {
    json bases = json::array();
    for (const auto& b : trace.bases) {
        bases.push_back({{"d_theta", b.d_theta}, {"info_gain", b.info_gain}, {"degenerate", b.gain_degenerate},
                         {"F", b.elbo}, {"kl_sum", b.kl_sum}, {"forward_calls", b.forward_calls},
                         {"sweeps", b.sweeps}});
    }
    const double f = trace.elbo.empty() ? std::numeric_limits<double>::quiet_NaN() : trace.elbo.back().f.total;
    json j = {
        {"schema", kSchemaVersion},
        {"d_theta", trace.d_theta()},
        {"forward_calls", trace.forward_calls},
        {"F", std::isfinite(f) ? json(f) : json(nullptr)},
        {"mean_tau", trace.state.mean_tau()},
        {"a", trace.state.a},
        {"b", trace.state.b},
        {"stop_reason", trace.stop_reason},
        {"mu_steps", trace.mu_steps.size()},
        {"floored_jumps", trace.floored_jumps},
        {"bases", bases},
    };
    return j.dump(2) + "\n";
}

std::string is_report_json(const ISReport& report, const VbIsComparison& cmp) {
    json j = {
        {"schema", kSchemaVersion},
        {"M", report.M},
        {"ess", report.ess},
        {"log_evidence", std::isfinite(report.log_evidence) ? json(report.log_evidence) : json(nullptr)},
        {"log_evidence_se", report.log_evidence_se},
        {"failed", report.failed},
        {"forward_calls", report.forward_calls},
        {"degenerate", report.degenerate},
        {"psi_mean", vec_json(report.psi_mean)},
        {"psi_std", vec_json(report.psi_std)},
        {"comparison",
         {{"mean_rel_max", cmp.mean_rel_max},
          {"mean_rel_median", cmp.mean_rel_median},
          {"std_rel_max", cmp.std_rel_max},
          {"std_rel_median", cmp.std_rel_median},
          {"mean_abs_max", cmp.mean_abs_max}}},
    };
    return j.dump(2) + "\n";
}

}  // namespace elastovb
