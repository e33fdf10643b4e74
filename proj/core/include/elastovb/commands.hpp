#pragma once

#include "elastovb/config.hpp"
#include "elastovb/io.hpp"

#include <iosfwd>
#include <string>

namespace elastovb {

struct GeneratedData {
    ObservationFile obs;
    Vec u_true;   // full nodal displacement of the phantom
    Vec y_clean;  // noise-free observations
};

/// Solves the phantom and adds i.i.d. noise with variance mean(y^2)/snr
/// (no noise when config.snr is empty).
GeneratedData generate_data(const RunConfig& config);

/// The CLI verbs. Each reads and writes files under `out_dir` and returns the process
/// exit code; InvalidInput and other Error exceptions propagate to the caller.
int cmd_generate(const RunConfig& config, const std::string& out_dir, std::ostream& log);
int cmd_invert(const RunConfig& config, const std::string& out_dir, std::ostream& log);
int cmd_validate(const RunConfig& config, const std::string& out_dir, std::ostream& log);
/// Prints a summary of whatever artifacts exist; returns 1 only if none do.
int cmd_report(const std::string& out_dir, std::ostream& out);

}  // namespace elastovb
