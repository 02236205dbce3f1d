#include "quadbraid/runner.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

using quadbraid::RunConfig;

namespace {

void add_common(CLI::App* cmd, RunConfig& cfg, bool needs_model) {
    if (needs_model)
        cmd->add_option("--model", cfg.model_path, "model configuration file (JSON)")->required();
    cmd->add_option("-N,--sites", cfg.N, "number of chain sites");
    cmd->add_option("--seed", cfg.seed, "sampling seed (QUADBRAID_SEED as fallback)");
    cmd->add_option("--tolerance", cfg.tolerance, "override the command's pass tolerance");
    cmd->add_option("--fd-step", cfg.fd_step, "finite-difference step");
    cmd->add_option("--samples", cfg.samples, "identity-check samples");
    cmd->add_option("--u-samples", cfg.u_samples, "grid points in u");
    cmd->add_option("--v-samples", cfg.v_samples, "grid points in v");
    cmd->add_option("--lambda-samples", cfg.lambda_samples, "sampled dynamical parameters");
    cmd->add_option("--gamma", cfg.gamma_override, "override the deformation parameter");
    cmd->add_option("--xi", cfg.xi_override, "override the boundary parameter");
    cmd->add_option("--perturb", cfg.perturb, "inject noise of this size into A (control)");
    cmd->add_option("-o,--output", cfg.output_path, "report file path");
    cmd->add_option("--format", cfg.format, "output format: json or csv (spectrum)");
    cmd->add_flag("--no-timestamp", [&cfg](size_t) { cfg.emit_timestamp = false; },
                  "omit the generated_at field");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quadbraid: exchange-algebra verification and open-chain construction"};
    app.require_subcommand(1);

    RunConfig cfg;
    if (const char* env = std::getenv("QUADBRAID_SEED")) cfg.seed = std::strtoull(env, nullptr, 10);

    auto* verify = app.add_subcommand("verify", "run the identity suite for a model");
    add_common(verify, cfg, true);
    auto* commute = app.add_subcommand("commute", "scan [t(u), t(v)] over a seeded grid");
    add_common(commute, cfg, true);
    auto* hamiltonian =
        app.add_subcommand("hamiltonian", "extract H and compare with the closed form");
    add_common(hamiltonian, cfg, true);
    auto* spectrum = app.add_subcommand("spectrum", "diagonalize H at sampled lambda");
    add_common(spectrum, cfg, true);
    auto* transferc =
        app.add_subcommand("transfer", "dump t(u) coefficients keyed by shift vector");
    add_common(transferc, cfg, true);
    auto* example = app.add_subcommand("example", "end-to-end reproduction of the explicit model");
    add_common(example, cfg, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_name() == "CallForHelp" ? 0 : 2;
    }

    if (verify->parsed()) cfg.command = "verify";
    if (commute->parsed()) cfg.command = "commute";
    if (hamiltonian->parsed()) cfg.command = "hamiltonian";
    if (spectrum->parsed()) cfg.command = "spectrum";
    if (transferc->parsed()) cfg.command = "transfer";
    if (example->parsed()) cfg.command = "example";

    try {
        const quadbraid::RunResult result = quadbraid::run_command(cfg);
        quadbraid::write_result(cfg, result);
        std::cout << result.summary << "\n";
        return result.exit_code;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
