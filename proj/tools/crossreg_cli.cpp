#include "crossreg/errors.hpp"
#include "crossreg/experiment.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace {

struct Overrides {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<Eigen::Index> replications;
};

crossreg::ExperimentConfig resolve(const Overrides& o) {
    crossreg::ExperimentConfig cfg =
        o.config.empty() ? crossreg::ExperimentConfig{} : crossreg::ExperimentConfig::load(o.config);
    if (!o.out.empty()) cfg.output = o.out;
    if (o.seed) cfg.seed = *o.seed;
    if (o.replications) cfg.replications = *o.replications;
    cfg.validate();
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Regularized reconstruction of cross-spectra from linear sensor data"};
    app.require_subcommand(1);

    Overrides o;
    using Command = int (*)(const crossreg::ExperimentConfig&);
    Command command = nullptr;

    auto add = [&](const char* name, const char* help, Command fn) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("-c,--config", o.config, "JSON experiment config")->check(CLI::ExistingFile);
        sub->add_option("-o,--out", o.out, "output directory");
        sub->add_option("--seed", o.seed, "master seed");
        sub->add_option("--replications", o.replications, "Monte Carlo replications");
        sub->callback([&command, fn] { command = fn; });
    };
    add("simulate", "simulate x, n and y for one realization", crossreg::cmd_simulate);
    add("error-curves", "empirical and closed-form error curves", crossreg::cmd_error_curves);
    add("verify-theorems", "check the white-noise optimality results", crossreg::cmd_verify_theorems);
    add("filter-factors", "pair filter-factor tables for both approaches", crossreg::cmd_filter_factors);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? crossreg::exit_ok : crossreg::exit_config_error;
    }

    try {
        return command(resolve(o));
    } catch (const crossreg::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
    } catch (const crossreg::IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
    } catch (const crossreg::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
    }
    return crossreg::exit_config_error;
}
