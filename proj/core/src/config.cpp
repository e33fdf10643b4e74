#include "elastovb/config.hpp"

#include "elastovb/error.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace elastovb {

using nlohmann::json;

bool PhantomShape::contains(double x, double y) const {
    if (kind == Kind::rect) return x >= x0 && x <= x1 && y >= y0 && y <= y1;
    const double u = (x - x0) / x1;
    const double v = (y - y0) / y1;
    return u * u + v * v <= 1.0;
}

void RunConfig::validate() const {
    mesh.validate();
    if (!(poisson > -1.0 && poisson < 0.5)) throw InvalidInput("config: poisson must lie in (-1, 0.5)");
    if (!std::isfinite(background)) throw InvalidInput("config: background must be finite");
    if (clamp_top_rows < 0 || clamp_top_rows >= mesh.ny) {
        throw InvalidInput("config: clamp_top_rows must leave at least one free row");
    }
    if (!std::isfinite(top_uy)) throw InvalidInput("config: top_uy must be finite");
    if (snr && !(*snr > 0.0)) throw InvalidInput("config: snr must be positive");
    if (is_samples < 2) throw InvalidInput("config: is_samples must be >= 2");
    if (a_phi < 0.0 || b_phi < 0.0) throw InvalidInput("config: a_phi, b_phi must be >= 0");
    for (const auto& s : shapes) {
        if (!std::isfinite(s.value)) throw InvalidInput("config: shape value must be finite");
        if (s.kind == PhantomShape::Kind::rect) {
            if (!(s.x0 < s.x1 && s.y0 < s.y1) || s.x0 < 0.0 || s.y0 < 0.0 || s.x1 > mesh.lx ||
                s.y1 > mesh.ly) {
                throw InvalidInput("config: rectangle outside the domain or empty");
            }
        } else {
            if (!(s.x1 > 0.0 && s.y1 > 0.0) || s.x0 - s.x1 < 0.0 || s.y0 - s.y1 < 0.0 ||
                s.x0 + s.x1 > mesh.lx || s.y0 + s.y1 > mesh.ly) {
                throw InvalidInput("config: ellipse outside the domain or empty");
            }
        }
    }
    driver.validate();
}

std::string RunConfig::to_json() const {
    json shapes_j = json::array();
    for (const auto& s : shapes) {
        if (s.kind == PhantomShape::Kind::rect) {
            shapes_j.push_back({{"type", "rect"}, {"x0", s.x0}, {"y0", s.y0}, {"x1", s.x1},
                                {"y1", s.y1}, {"value", s.value}});
        } else {
            shapes_j.push_back({{"type", "ellipse"}, {"cx", s.x0}, {"cy", s.y0}, {"rx", s.x1},
                                {"ry", s.y1}, {"value", s.value}});
        }
    }
    const auto& d = driver;
    json solver = {
        {"lambda0_1", d.lambda0_1},
        {"info_gain_threshold", d.info_gain_threshold},
        {"info_gain_window", d.info_gain_window},
        {"max_bases", d.max_bases},
        {"seed", d.seed},
        {"a0", d.a0},
        {"b0", d.b0},
        {"a_phi", a_phi},
        {"b_phi", b_phi},
        {"sweep_tol", d.sweep_tol},
        {"sweep_window", d.sweep_window},
        {"max_sweeps", d.max_sweeps},
        {"mu_max_outer", d.mu.max_outer},
        {"mu_warmup_steps", d.mu.warmup_steps},
        {"mu_tol", d.mu.tol},
        {"w_max_iters", d.stiefel.max_iters},
        {"w_tol", d.stiefel.tol},
        {"w_alpha_init", d.stiefel.alpha_init},
    };
    solver["force_bases"] = d.force_bases ? json(*d.force_bases) : json(nullptr);
    solver["initial_psi"] = initial_psi ? json(*initial_psi) : json(nullptr);

    json j = {
        {"mesh", {{"nx", mesh.nx}, {"ny", mesh.ny}, {"lx", mesh.lx}, {"ly", mesh.ly}, {"poisson", poisson}}},
        {"phantom", {{"background", background}, {"shapes", shapes_j}, {"clamp_top_rows", clamp_top_rows}}},
        {"bc", {{"top_uy", top_uy}}},
        {"noise", {{"snr", snr ? json(*snr) : json(nullptr)}, {"seed", noise_seed}}},
        {"solver", solver},
        {"validation", {{"samples", is_samples}, {"seed", is_seed}}},
        {"output", {{"dir", out_dir}}},
    };
    return j.dump(2) + "\n";
}

namespace {

template <class T>
void read(const json& obj, const char* key, T& out) {
    if (obj.contains(key) && !obj.at(key).is_null()) out = obj.at(key).get<T>();
}

template <class T>
void read_optional(const json& obj, const char* key, std::optional<T>& out) {
    if (!obj.contains(key)) return;
    if (obj.at(key).is_null()) {
        out.reset();
    } else {
        out = obj.at(key).get<T>();
    }
}

const json& block(const json& j, const char* key) {
    static const json empty = json::object();
    if (!j.contains(key)) return empty;
    if (!j.at(key).is_object()) throw InvalidInput(std::string("config: '") + key + "' must be an object");
    return j.at(key);
}

}  // namespace

RunConfig RunConfig::from_json(const std::string& text) {
    RunConfig c;
    try {
        const json j = json::parse(text);
        if (!j.is_object()) throw InvalidInput("config: top level must be an object");

        const json& m = block(j, "mesh");
        read(m, "nx", c.mesh.nx);
        read(m, "ny", c.mesh.ny);
        read(m, "lx", c.mesh.lx);
        read(m, "ly", c.mesh.ly);
        read(m, "poisson", c.poisson);

        const json& p = block(j, "phantom");
        read(p, "background", c.background);
        read(p, "clamp_top_rows", c.clamp_top_rows);
        if (p.contains("shapes")) {
            c.shapes.clear();
            for (const auto& s : p.at("shapes")) {
                PhantomShape shape;
                const std::string type = s.at("type").get<std::string>();
                if (type == "rect") {
                    shape.kind = PhantomShape::Kind::rect;
                    shape.x0 = s.at("x0").get<double>();
                    shape.y0 = s.at("y0").get<double>();
                    shape.x1 = s.at("x1").get<double>();
                    shape.y1 = s.at("y1").get<double>();
                } else if (type == "ellipse") {
                    shape.kind = PhantomShape::Kind::ellipse;
                    shape.x0 = s.at("cx").get<double>();
                    shape.y0 = s.at("cy").get<double>();
                    shape.x1 = s.at("rx").get<double>();
                    shape.y1 = s.at("ry").get<double>();
                } else {
                    throw InvalidInput("config: unknown shape type '" + type + "'");
                }
                shape.value = s.at("value").get<double>();
                c.shapes.push_back(shape);
            }
        }

        read(block(j, "bc"), "top_uy", c.top_uy);

        const json& n = block(j, "noise");
        read_optional(n, "snr", c.snr);
        read(n, "seed", c.noise_seed);

        const json& s = block(j, "solver");
        auto& d = c.driver;
        read(s, "lambda0_1", d.lambda0_1);
        read(s, "info_gain_threshold", d.info_gain_threshold);
        read(s, "info_gain_window", d.info_gain_window);
        read(s, "max_bases", d.max_bases);
        read_optional(s, "force_bases", d.force_bases);
        read(s, "seed", d.seed);
        read(s, "a0", d.a0);
        read(s, "b0", d.b0);
        read(s, "a_phi", c.a_phi);
        read(s, "b_phi", c.b_phi);
        read(s, "sweep_tol", d.sweep_tol);
        read(s, "sweep_window", d.sweep_window);
        read(s, "max_sweeps", d.max_sweeps);
        read(s, "mu_max_outer", d.mu.max_outer);
        read(s, "mu_warmup_steps", d.mu.warmup_steps);
        read(s, "mu_tol", d.mu.tol);
        read(s, "w_max_iters", d.stiefel.max_iters);
        read(s, "w_tol", d.stiefel.tol);
        read(s, "w_alpha_init", d.stiefel.alpha_init);
        read_optional(s, "initial_psi", c.initial_psi);

        const json& v = block(j, "validation");
        read(v, "samples", c.is_samples);
        read(v, "seed", c.is_seed);

        read(block(j, "output"), "dir", c.out_dir);
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

void RunConfig::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InvalidInput("config: cannot write '" + path + "'");
    out << to_json();
}

Vec RunConfig::phantom() const {
    Vec psi = Vec::Constant(mesh.element_count(), background);
    for (Index e = 0; e < mesh.element_count(); ++e) {
        const auto [x, y] = mesh.element_center(e);
        for (const auto& s : shapes) {
            if (s.contains(x, y)) psi[e] = s.value;  // later shapes win
        }
    }
    return psi;
}

std::vector<bool> RunConfig::clamp_mask() const {
    std::vector<bool> mask(std::size_t(mesh.element_count()), false);
    for (int iy = mesh.ny - clamp_top_rows; iy < mesh.ny; ++iy) {
        for (int ix = 0; ix < mesh.nx; ++ix) mask[std::size_t(mesh.element(ix, iy))] = true;
    }
    return mask;
}

BoundarySpec RunConfig::boundary() const { return BoundarySpec::compression(mesh, top_uy); }

RunConfig RunConfig::example1() {
    RunConfig c;
    PhantomShape inclusion;
    inclusion.kind = PhantomShape::Kind::rect;
    inclusion.x0 = 3.0;
    inclusion.y0 = 3.0;
    inclusion.x1 = 7.0;
    inclusion.y1 = 7.0;
    inclusion.value = c.background + std::log(5.0);
    c.shapes.push_back(inclusion);
    return c;
}

Problem build_problem(const RunConfig& config) {
    config.validate();
    Problem p;
    p.truth_full = config.phantom();
    MaterialField base(p.truth_full, config.clamp_mask());
    const BoundarySpec bc = config.boundary();
    ObservationMap q = ObservationMap::free_dofs(config.mesh, bc);
    p.model = std::make_unique<FemElastographyModel>(config.mesh, bc, base, config.poisson, std::move(q));
    p.truth = p.model->reduce(p.truth_full);
    p.prior = SmoothPrior::grid(config.mesh, p.model->free_elements(), p.truth_full, config.a_phi,
                                config.b_phi);

    double start = config.background;
    if (config.initial_psi) {
        start = *config.initial_psi;
    } else if (config.clamp_top_rows > 0) {
        double sum = 0.0;
        Index n = 0;
        for (Index e = 0; e < config.mesh.element_count(); ++e) {
            if (base.is_fixed(e)) {
                sum += p.truth_full[e];
                ++n;
            }
        }
        start = sum / double(n);
    }
    p.mu0 = Vec::Constant(p.model->parameter_dim(), start);
    return p;
}

}  // namespace elastovb
