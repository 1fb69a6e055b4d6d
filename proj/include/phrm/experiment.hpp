// experiment.hpp: experiment configuration, the CSV writers behind the CLI
// modes, and the self-verification suite.
#pragma once

#include "phrm/dynamics.hpp"
#include "phrm/ensemble.hpp"
#include "phrm/entanglement.hpp"
#include "phrm/spectral.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace phrm {

enum class Mode { trace, single_state, verify, figure };

std::string_view to_string(Mode m);

struct ExperimentConfig {
    EnsembleConfig ensemble;
    CouplingParams coupling;
    HamiltonianKind kind = HamiltonianKind::A1;
    int m_index = 1;
    int n_index = 2;
    double theta = 1.5707963267948966;
    double phi = 0.0;
    double t_start = 0.0;
    double t_end = 10.0;
    int t_steps = 2001;
    Mode mode = Mode::trace;
    std::optional<int> figure_id;
    std::string output_path;
    bool deterministic = false;

    // Throws ConfigError naming the offending field.
    void validate() const;
};

// Keys are the kebab-case flag names (n, m, seed, scalar-class, b, c, c1, c2,
// hamiltonian-kind, m-index, n-index, theta, phi, t-start, t-end, t-steps,
// output, deterministic). Underscores are accepted in place of dashes.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

// key=value lines; '#' starts a comment. Throws IoError if the file cannot
// be read and ConfigError on a malformed line or unknown key.
void apply_config_file(ExperimentConfig& config, const std::filesystem::path& path);

// Caption parameters: N=6, M=2, C₁=2, C₂=0, θ=π/2, pair (1,2), t ∈ [0,10]
// with 2001 samples; (b, c) = (1.2, 1.0) for id 1 and (1.0, 1.2) for id 2.
ExperimentConfig figure_preset(int id, std::uint64_t seed);

std::vector<double> time_grid(const ExperimentConfig& config);

struct CheckResult {
    std::string name;
    double residual = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

struct RunReport {
    ExperimentConfig config;  // as run, after any resampling
    int resamples = 0;
    RealVector x;
    Regime regime = Regime::unbroken;
    std::vector<CheckResult> checks;
    std::vector<std::string> findings;
    std::vector<std::string> outputs;
    double duration_seconds = 0.0;

    bool passed() const;
};

// Mode runners. Each writes its CSV (if any) to `out` and returns the report.
RunReport run_trace(const ExperimentConfig& config, std::ostream& out);
RunReport run_single_state(const ExperimentConfig& config, std::ostream& out);
RunReport run_verify(const ExperimentConfig& config);

// Writes figure<id>_seed<s>.csv into `dir` for s = seed and seed + 1.
// Throws IoError if a file cannot be written.
std::vector<RunReport> run_figure(int id, std::uint64_t seed, const std::filesystem::path& dir,
                                  bool deterministic);

// Dispatches on config.mode. trace/single_state write to config.output_path
// or to `fallback` when it is empty.
std::vector<RunReport> run(const ExperimentConfig& config, std::ostream& fallback);

void write_report(std::ostream& os, const RunReport& report);

}  // namespace phrm
