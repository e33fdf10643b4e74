#pragma once

#include "elastovb/driver.hpp"
#include "elastovb/importance.hpp"
#include "elastovb/mesh.hpp"
#include "elastovb/posterior.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace elastovb {

inline constexpr int kSchemaVersion = 1;

/// Noisy data y_hat = y(psi_true) + z. tau_true is kept for validation only and is
/// empty for noiseless data.
struct ObservationFile {
    std::vector<Index> dofs;
    Vec yhat;
    std::uint64_t seed = 0;
    std::optional<double> tau_true;
    std::optional<double> snr_target;
    double snr_empirical = 0.0;  // mean(y^2) / mean(z^2), 0 when noiseless

    Index d_y() const { return yhat.size(); }
    void validate() const;

    std::string to_json() const;
    static ObservationFile from_json(const std::string& text);
    void save(const std::string& path) const;
    static ObservationFile load(const std::string& path);
};

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

/// elem_ix,elem_iy,value
void write_element_csv(const std::string& path, const Mesh2D& mesh, const Vec& values);
Vec read_element_csv(const std::string& path, const Mesh2D& mesh);
/// node_ix,node_iy,ux,uy
void write_node_csv(const std::string& path, const Mesh2D& mesh, const Vec& u);

void write_elbo_csv(const std::string& path, const std::vector<ElboTraceRow>& rows);
void write_info_gain_csv(const std::string& path, const std::vector<BasisRecord>& rows);
void write_lambda_csv(const std::string& path, const ReducedPosterior& state);
void write_mu_steps_csv(const std::string& path, const std::vector<MuUpdateReport>& rows);
void write_w_trace_csv(const std::string& path, const std::vector<StiefelTraceRow>& rows);
void write_weights_csv(const std::string& path, const ISReport& report);

std::string state_to_json(const ReducedPosterior& state);
ReducedPosterior state_from_json(const std::string& text);

/// Summary document of a run (schema-versioned).
std::string run_summary_json(const RunTrace& trace);

std::string is_report_json(const ISReport& report, const VbIsComparison& cmp);

}  // namespace elastovb
