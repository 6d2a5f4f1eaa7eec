#pragma once

#include "nlflow/characteristics.hpp"
#include "nlflow/signals.hpp"
#include "nlflow/speed_law.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlflow::cli {

/// Configuration problem, with the 1-based line of the offending node when known.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line(line) {}
    int line;
};

/// Signal as written in a config: explicit cells, uniform cells or a constant.
struct SignalSpec {
    std::vector<double> breakpoints;
    std::vector<double> values;
};

struct LawSpec {
    std::string kind = "reciprocal";  // reciprocal | tabulated | constant
    double w_step = 0.0;
    std::vector<double> values;
    std::vector<double> derivatives;
    double constant = 1.0;
};

struct OptimizeSpec {
    std::size_t cells = 16;
    double weight = 1.0;
    int max_iters = 60;
    int restarts = 0;
    double step = 1.0;
    int knots_per_window = 64;
};

struct TransferSpec {
    double rho0 = 0.0;
    double rho1 = 1.0;
};

struct VerifySpec {
    double rho0 = 0.0;
    double rho1 = 1.0;
    std::optional<double> T;  // default: first time the target is reached
    SignalSpec control;       // boundary density
};

struct CrosscheckSpec {
    std::vector<std::size_t> cells{250, 500, 1000, 2000, 4000};
    double cfl = 0.9;
};

struct ScenarioConfig {
    LawSpec law;
    std::optional<SignalSpec> rho0;
    std::optional<SignalSpec> control;
    std::optional<SignalSpec> boundary_density;
    std::optional<SignalSpec> demand;
    std::optional<double> horizon;
    SolveOptions solver{};
    std::size_t samples = 400;
    std::vector<double> slice_times;
    std::size_t slice_points = 200;
    std::uint64_t seed = 0;
    OptimizeSpec optimize;
    TransferSpec transfer;
    std::optional<VerifySpec> verify;
    CrosscheckSpec crosscheck;
};

/// Parses YAML text.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Resolved configuration, defaults included, as JSON text.
std::string config_echo(const ScenarioConfig& config);

SpeedLaw build_law(const ScenarioConfig& config);
DensityProfile build_rho0(const ScenarioConfig& config);
/// Flux or boundary-density problem for simulate / crosscheck.
CharacteristicProblem build_problem(const ScenarioConfig& config);

enum class Command { Simulate, Optimize, Transfer, Verify, Crosscheck };
Command parse_command(const std::string& name);

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> cells;
    std::optional<double> tol;
};

void apply_overrides(ScenarioConfig& config, const Overrides& overrides);

/// Exit codes of run().
constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitSolver = 2;
constexpr int kExitUnsatisfied = 3;

/**
 * Runs one subcommand and writes its artifacts under `out_dir`. Config
 * errors return kExitConfig; solver failures write error.json and return
 * kExitSolver; an unsatisfied certificate returns kExitUnsatisfied. Messages
 * go to `log`.
 */
int run(Command command, const std::filesystem::path& config_path,
        const std::filesystem::path& out_dir, const Overrides& overrides, std::ostream& log);

}  // namespace nlflow::cli
