#include "elastovb/commands.hpp"
#include "elastovb/error.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <optional>

namespace {

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> max_bases;
    std::optional<double> snr;
};

elastovb::RunConfig load_config(const Options& o) {
    elastovb::RunConfig c = o.config.empty() ? elastovb::RunConfig::example1() : elastovb::RunConfig::load(o.config);
    if (o.seed) {
        c.noise_seed = *o.seed;
        c.driver.seed = *o.seed;
        c.is_seed = *o.seed;
    }
    if (o.max_bases) c.driver.max_bases = *o.max_bases;
    if (o.snr) c.snr = *o.snr;
    if (!o.out.empty()) c.out_dir = o.out;
    c.validate();
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Variational Bayes identification of elastic moduli from displacement data"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", o.config, "JSON run configuration (default: built-in example)");
        cmd->add_option("--out", o.out, "output directory (overrides output.dir)");
        cmd->add_option("--seed", o.seed, "override every seed in the config");
        cmd->add_option("--max-bases", o.max_bases, "cap on the number of reduced coordinates")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--snr", o.snr, "override the noise SNR")->check(CLI::PositiveNumber);
    };
    auto* gen = app.add_subcommand("generate", "solve the phantom and write noisy observations");
    auto* inv = app.add_subcommand("invert", "run the adaptive variational inversion");
    auto* val = app.add_subcommand("validate", "importance-sampling check of a finished run");
    auto* rep = app.add_subcommand("report", "summarize the artifacts in an output directory");
    for (auto* c : {gen, inv, val}) add_common(c);
    rep->add_option("--out", o.out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (rep->parsed()) return elastovb::cmd_report(o.out, std::cout);
        const elastovb::RunConfig config = load_config(o);
        if (gen->parsed()) return elastovb::cmd_generate(config, config.out_dir, std::cout);
        if (inv->parsed()) return elastovb::cmd_invert(config, config.out_dir, std::cout);
        if (val->parsed()) return elastovb::cmd_validate(config, config.out_dir, std::cout);
    } catch (const elastovb::InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
