#pragma once

#include "elastovb/driver.hpp"
#include "elastovb/forward_model.hpp"
#include "elastovb/mesh.hpp"
#include "elastovb/smooth_prior.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace elastovb {

/// Region of constant log-modulus. Rectangles use [x0,x1] x [y0,y1]; ellipses use
/// center (x0,y0) and semi-axes (x1,y1). Membership is decided at element centers.
struct PhantomShape {
    enum class Kind { rect, ellipse };
    Kind kind = Kind::rect;
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
    double value = 0.0;

    bool contains(double x, double y) const;
    bool operator==(const PhantomShape&) const = default;
};

struct RunConfig {
    Mesh2D mesh{10, 10, 10.0, 10.0};
    double poisson = 0.0;

    double background = 2.302585092994046;  // log 10
    std::vector<PhantomShape> shapes;
    int clamp_top_rows = 1;

    double top_uy = -0.1;

    std::optional<double> snr = 1e5;  // empty: noiseless data
    std::uint64_t noise_seed = 7;

    DriverConfig driver;
    double a_phi = 0.0;
    double b_phi = 0.0;
    std::optional<double> initial_psi;  // default: mean of the clamped elements

    int is_samples = 1000;
    std::uint64_t is_seed = 11;

    std::string out_dir = "out";

    /// Throws InvalidInput on inconsistent values (shapes outside the domain, snr <= 0, ...).
    void validate() const;

    std::string to_json() const;
    static RunConfig from_json(const std::string& text);
    static RunConfig load(const std::string& path);
    void save(const std::string& path) const;

    /// Per-element ground-truth log-modulus.
    Vec phantom() const;
    std::vector<bool> clamp_mask() const;
    BoundarySpec boundary() const;

    /// Shape of the built-in reference problem: 10 x 10 mesh, one stiff square with
    /// modulus ratio 5, top row clamped, 1% compression.
    static RunConfig example1();

    bool operator==(const RunConfig& other) const { return to_json() == other.to_json(); }
};

/// Everything needed to invert data generated from a config.
struct Problem {
    std::unique_ptr<FemElastographyModel> model;
    Vec truth_full;  // per element
    Vec truth;       // reduced to the free parameters
    SmoothPrior prior;
    Vec mu0;
};

Problem build_problem(const RunConfig& config);

}  // namespace elastovb
