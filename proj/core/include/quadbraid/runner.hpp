#pragma once

#include "quadbraid/hamiltonians.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>

namespace quadbraid {

/// Everything a command run depends on; the seed fully determines every
/// sampled point, so identical configs produce identical reports.
struct RunConfig {
    std::string command;       // verify | commute | hamiltonian | spectrum | example
    std::string model_path;    // JSON model file
    std::string model_inline;  // JSON text; takes precedence over model_path
    int N = 2;
    int samples = 20;  // identity-check samples
    int u_samples = 3;
    int v_samples = 3;
    int lambda_samples = 3;
    std::optional<double> gamma_override;
    std::optional<double> xi_override;
    double tolerance = 0.0;  // 0 = per-command default
    double fd_step = 1e-4;
    std::uint64_t seed = 20240817;
    double perturb = 0.0;
    std::string output_path;
    std::string format = "json";  // json | csv (spectrum)
    bool emit_timestamp = true;
};

struct RunResult {
    int exit_code = 0;  // 0 pass, 1 checked failure, 2 usage/config error
    nlohmann::ordered_json report;
    std::string summary;  // one line for stdout
    std::string csv;      // spectrum payload in csv format
};

RunResult run_command(const RunConfig& cfg);

/// Serialize and write the result per config (report file, format).
void write_result(const RunConfig& cfg, const RunResult& result);

}  // namespace quadbraid
