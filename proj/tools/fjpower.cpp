// fjpower: social-power experiments for an influencer in FJ opinion dynamics.

#include "fjpower/harness.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<unsigned> threads;
};

fjpower::ExperimentConfig load(const Options& o) {
    auto c = fjpower::load_experiment(o.config);
    if (o.seed) c.seed = *o.seed;
    if (!o.out.empty()) c.output = o.out;
    if (o.threads) c.threads = std::max(1u, *o.threads);
    return c;
}

/// Writes to the configured output path, or stdout when none is set.
void emit(const fjpower::ExperimentConfig& c, const std::function<void(std::ostream&)>& write) {
    if (c.output.empty()) {
        write(std::cout);
        return;
    }
    std::ofstream f(c.output);
    if (!f) throw fjpower::ConfigError("cannot write " + c.output);
    write(f);
    std::cout << "wrote " << c.output << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Social power of an influencer in Friedkin-Johnsen opinion dynamics"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "Experiment config file")->required();
        sub->add_option("--seed", opt.seed, "Override the master seed");
        sub->add_option("--out", opt.out, "Override the output path");
        sub->add_option("--threads", opt.threads, "Worker threads for sampling");
    };

    auto* validate = app.add_subcommand("validate", "Check a config and its instance");
    auto* sp = app.add_subcommand("sp", "Influencer social power of a fixed link set");
    auto* optimize = app.add_subcommand("optimize", "Run the configured solvers");
    auto* phase = app.add_subcommand("phase-map", "K=1 winners over theta and omega grids");
    auto* dispersion = app.add_subcommand("dispersion", "Circular variance against social power");
    auto* budget = app.add_subcommand("budget", "Monte-Carlo walk count and length");
    for (auto* s : {validate, sp, optimize, phase, dispersion, budget}) add_common(s);

    CLI11_PARSE(app, argc, argv);

    try {
        const auto c = load(opt);
        if (*validate) {
            fjpower::write_validation(std::cout, fjpower::cmd_validate(c));
        } else if (*sp) {
            const auto r = fjpower::cmd_sp(c);
            emit(c, [&](std::ostream& os) { fjpower::write_sp(os, r); });
        } else if (*optimize) {
            const auto rows = fjpower::cmd_optimize(c);
            emit(c, [&](std::ostream& os) { fjpower::write_report(os, rows); });
        } else if (*phase) {
            const auto pm = fjpower::cmd_phase_map(c);
            emit(c, [&](std::ostream& os) { fjpower::write_phase_map(os, pm); });
        } else if (*dispersion) {
            const auto r = fjpower::cmd_dispersion(c);
            emit(c, [&](std::ostream& os) { fjpower::write_dispersion(os, r); });
        } else if (*budget) {
            fjpower::write_budget(std::cout, fjpower::cmd_budget(c));
        }
    } catch (const fjpower::Error& e) {
        std::cerr << "error [" << e.code() << "]: " << e.what() << '\n';
        return fjpower::exit_code(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
