#pragma once

#include <json.hpp>

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "floquet/cholera.hpp"
#include "floquet/ode.hpp"

namespace floquet::app {

using json = nlohmann::json;

inline constexpr const char* tool_name = "floquet";
inline constexpr const char* tool_version = "1.0.0";

/// Invalid or unreadable configuration; maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Kind { planar, riccati, cholera, example41 };
enum class Method { monodromy, thm_T1, thm_T3, all };

std::string to_string(Kind k);
std::string to_string(Method m);

struct Example41Params {
    double A = 1.0;
    double B = 0.5;
    double alpha = 0.0;
    double beta = 2.0;
    std::string m = "0.1+0.2*cos(t)";
};

struct ShootingSpec {
    std::optional<double> lo, hi;
    std::size_t grid = 64;
};

struct SimulationSpec {
    std::optional<std::array<double, 4>> initial;  // default: 1% perturbation of the DFE
    std::optional<double> horizon;                 // default: 60 / min(n, gamma, nu, min m)
    std::size_t output_points = 1001;
};

struct AnalysisConfig {
    Kind kind = Kind::planar;
    double period = 0.0;
    /// planar: p11 p12 p21 p22; riccati: a b c; cholera: d e m.
    std::map<std::string, std::string> coefficients;
    Method method = Method::all;
    OdeTolerances tol{1e-10, 1e-12};
    double tau = 1e-7;
    std::optional<Example41Params> example41;
    CholeraConstants cholera;
    ShootingSpec shooting;
    SimulationSpec simulation;
    std::optional<std::string> report_path;
    std::optional<std::string> trajectory_path;
    /// The configuration as read, echoed into the report.
    json source;
};

/// Validates against the schema documented in docs/config.md.
AnalysisConfig parse_config(const json& j);
AnalysisConfig load_config(const std::filesystem::path& path);

/// A planar config for the example41 family:
///   u' = (m - A) u + sin(t) v,   v' = (alpha+1) sin(t)/(beta + cos(t)) u + (m - B) v.
/// Rejects beta <= 1 and A - B <= 0 with ConfigError.
AnalysisConfig emit_example41(double A, double B, double alpha, double beta, const std::string& m);

struct RunOptions {
    bool reproducible = false;
    bool simulate = false;
    std::optional<std::string> csv_path;
    bool gnuplot_script = false;
};

struct RunOutcome {
    json report;
    /// Columns for the trajectory CSV, first one named "t".
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

/// Runs the analysis. Throws ConfigError for problems with the input and lets
/// numeric failures propagate.
RunOutcome run_analysis(const AnalysisConfig& cfg, const RunOptions& opts);

/// Sorted keys, two-space indent, every number as %.17g, non-finite numbers as
/// the strings "inf", "-inf", "nan". Ends with a newline.
std::string serialize(const json& j);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);
/// gnuplot script plotting every column against t; written next to the CSV.
std::filesystem::path write_gnuplot_script(const std::filesystem::path& csv, const std::vector<std::string>& columns);

/// Full command for one config file: load, run, write outputs. Returns the
/// exit code (0 ok, 2 config error, 3 numeric failure) and writes diagnostics
/// to `err`.
struct CommandResult {
    int exit_code = 0;
    json report;  // null when nothing was produced
    std::string error;
};
CommandResult run_config_file(const std::filesystem::path& config, const RunOptions& opts,
                              const std::optional<std::string>& report_override);

/// Runs several configs concurrently; the aggregate keeps input order.
CommandResult run_sweep(const std::vector<std::filesystem::path>& configs, const RunOptions& opts);

}  // namespace floquet::app
