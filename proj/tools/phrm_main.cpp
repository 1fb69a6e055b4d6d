// phrm: command-line runner for the ensemble / flow / entropy experiments.
#include "phrm/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheck = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

struct Settings {
    std::optional<std::string> config_file;
    std::map<std::string, std::optional<std::string>> values;
    bool deterministic = false;
};

const char* const kKeys[][2] = {
    {"n", "full dimension N"},
    {"m", "block dimension M"},
    {"seed", "RNG seed"},
    {"scalar-class", "complex or real"},
    {"b", "coupling b"},
    {"c", "coupling c"},
    {"c1", "integration constant C1"},
    {"c2", "integration constant C2 (time origin)"},
    {"hamiltonian-kind", "A1 or A2"},
    {"m-index", "first Bell-pair mode (1-based)"},
    {"n-index", "second Bell-pair mode (1-based)"},
    {"theta", "Bloch polar angle (radians)"},
    {"phi", "Bloch azimuth (radians)"},
    {"t-start", "first time sample"},
    {"t-end", "last time sample"},
    {"t-steps", "number of time samples"},
    {"output", "output file (figure: directory)"},
};

void add_settings(CLI::App* sub, Settings& s) {
    sub->add_option("--config", s.config_file, "key=value config file; flags override it");
    for (const auto& [key, help] : kKeys) {
        sub->add_option(std::string("--") + key, s.values[key], help);
    }
    sub->add_flag("--deterministic", s.deterministic, "omit the timestamp metadata line");
}

phrm::ExperimentConfig resolve(const Settings& s, phrm::Mode mode) {
    phrm::ExperimentConfig config;
    config.mode = mode;
    if (s.config_file) phrm::apply_config_file(config, *s.config_file);
    for (const auto& [key, value] : s.values) {
        if (value) phrm::apply_setting(config, key, *value);
    }
    if (s.deterministic) config.deterministic = true;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pseudo-Hermitian random-matrix flows and Bell-state entropy"};
    app.require_subcommand(1);

    Settings run_s, verify_s, single_s;
    auto* run_cmd = app.add_subcommand("run", "write the entropy trace CSV");
    add_settings(run_cmd, run_s);
    auto* verify_cmd = app.add_subcommand("verify", "run the invariant suite; exit 1 on any failure");
    add_settings(verify_cmd, verify_s);
    auto* single_cmd = app.add_subcommand("single-state", "evolve one Bloch state of mode m-index");
    add_settings(single_cmd, single_s);

    int figure_id = 0;
    std::uint64_t figure_seed = 1;
    std::string figure_dir = ".";
    bool figure_det = false;
    auto* figure_cmd = app.add_subcommand("figure", "write the two-seed figure CSVs");
    figure_cmd->add_option("--id", figure_id, "figure preset")->required()->check(CLI::IsMember({1, 2}));
    figure_cmd->add_option("--seed", figure_seed, "first seed; the second is seed + 1");
    figure_cmd->add_option("--output", figure_dir, "output directory");
    figure_cmd->add_flag("--deterministic", figure_det, "omit the timestamp metadata line");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        std::vector<phrm::RunReport> reports;
        if (*figure_cmd) {
            phrm::ExperimentConfig config = phrm::figure_preset(figure_id, figure_seed);
            config.output_path = figure_dir;
            config.deterministic = figure_det;
            reports = phrm::run(config, std::cout);
        } else if (*verify_cmd) {
            reports = phrm::run(resolve(verify_s, phrm::Mode::verify), std::cout);
        } else {
            const bool trace = static_cast<bool>(*run_cmd);
            const auto& s = trace ? run_s : single_s;
            const auto config = resolve(s, trace ? phrm::Mode::trace : phrm::Mode::single_state);
            reports = phrm::run(config, std::cout);
        }
        bool ok = true;
        // Reports go to stderr when the CSV itself is on stdout.
        for (const auto& r : reports) {
            const bool csv_on_stdout = r.outputs.empty() && r.config.mode != phrm::Mode::verify;
            phrm::write_report(csv_on_stdout ? std::cerr : std::cout, r);
            ok = ok && r.passed();
        }
        return ok ? kExitOk : kExitCheck;
    } catch (const phrm::ConfigError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const phrm::ArgumentError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const phrm::UnsupportedParameterError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const phrm::IoError& e) {
        std::cerr << "file error: " << e.what() << '\n';
        return kExitIo;
    } catch (const phrm::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitCheck;
    }
}
