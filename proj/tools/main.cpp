// salab command line harness: batch experiments over the stochastic
// approximation models, with deterministic seeded outputs.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>

#include "salab/harness.hpp"
#include "salab/version.hpp"

namespace {

using salab::Error;
using salab::ErrorKind;

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Config:
        case ErrorKind::Argument:
        case ErrorKind::Domain: return 2;
        case ErrorKind::Capability: return 3;
        case ErrorKind::Divergence: return 4;
        default: return 1;
    }
}

struct CommonOpts {
    std::string config_path;
    std::string preset;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_threads) {
    cmd->add_option("--config", opts.config_path, "Path to a JSON experiment config");
    cmd->add_option("--preset", opts.preset, "Name of a bundled preset (see: salab presets list)");
    cmd->add_option("--out", opts.out_dir, "Output directory")->capture_default_str();
    cmd->add_option("--seed", opts.seed, "Override run.master_seed");
    if (with_threads) cmd->add_option("--threads", opts.threads, "Worker threads (0 = hardware)");
}

salab::config::ExperimentConfig resolve_config(const CommonOpts& opts) {
    if (opts.config_path.empty() == opts.preset.empty())
        throw Error(ErrorKind::Config, "give exactly one of --config or --preset");
    auto cfg = opts.config_path.empty() ? salab::config::preset_config(opts.preset)
                                        : salab::config::load_config(opts.config_path);
    if (opts.seed) cfg.run.master_seed = *opts.seed;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic approximation experiment harness"};
    app.set_version_flag("--version", salab::kVersion);
    app.require_subcommand(1);

    CommonOpts run_opts, sweep_opts, dec_opts;
    auto* run_cmd = app.add_subcommand("run", "Monte Carlo ensemble for one configuration");
    add_common(run_cmd, run_opts, true);
    auto* sweep_cmd = app.add_subcommand("sweep", "Ensemble per grid point of an alpha or rho grid");
    add_common(sweep_cmd, sweep_opts, true);
    auto* dec_cmd = app.add_subcommand("decompose", "Disturbance decomposition check on one trajectory");
    add_common(dec_cmd, dec_opts, false);

    auto* oracle_cmd = app.add_subcommand("oracle", "Closed-form quantities for a model");
    std::string oracle_model, oracle_out = "out";
    double beta = 0.9, b = -10.0, gamma = 0.7, f_coeff = 0.5, sigma_w = 1.0, lambda = 0.0, xi = 50.0;
    std::optional<double> oracle_alpha;
    oracle_cmd->add_option("--model", oracle_model, "scalar-linear | td | styblinski | camel")->required();
    oracle_cmd->add_option("--beta", beta, "AR(1) correlation (scalar-linear)")->capture_default_str();
    oracle_cmd->add_option("--b", b, "offset, theta* = -b (scalar-linear)")->capture_default_str();
    oracle_cmd->add_option("--gamma", gamma, "discount (td)")->capture_default_str();
    oracle_cmd->add_option("--F", f_coeff, "state contraction (td)")->capture_default_str();
    oracle_cmd->add_option("--sigma-w", sigma_w, "noise std-dev")->capture_default_str();
    oracle_cmd->add_option("--lambda", lambda, "trace parameter (td)")->capture_default_str();
    oracle_cmd->add_option("--xi", xi, "linear term (styblinski)")->capture_default_str();
    oracle_cmd->add_option("--alpha", oracle_alpha, "step size for the first-order bias prediction");
    oracle_cmd->add_option("--out", oracle_out, "Output directory")->capture_default_str();

    auto* presets_cmd = app.add_subcommand("presets", "Bundled experiment presets");
    std::string presets_action = "list";
    presets_cmd->add_option("action", presets_action, "list")->check(CLI::IsMember({"list"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            const auto cfg = resolve_config(run_opts);
            const auto summary = salab::harness::cmd_run(cfg, run_opts.out_dir, run_opts.threads);
            if (summary.m_excluded > 0) {
                std::fprintf(stderr, "divergence error: %zu of %zu runs diverged\n",
                             summary.m_excluded, summary.m_total);
                return exit_code_for(ErrorKind::Divergence);
            }
            std::printf("wrote %s/{summary.json,runs.csv,histogram.json}\n", run_opts.out_dir.c_str());
        } else if (*sweep_cmd) {
            const auto cfg = resolve_config(sweep_opts);
            const auto rows = salab::harness::cmd_sweep(cfg, sweep_opts.out_dir, sweep_opts.threads);
            std::size_t excluded = 0;
            for (const auto& row : rows) excluded += row.summary.m_excluded;
            if (excluded > 0) {
                std::fprintf(stderr, "divergence error: %zu runs diverged across the grid\n", excluded);
                return exit_code_for(ErrorKind::Divergence);
            }
            std::printf("wrote %s/sweep.csv (%zu grid points)\n", sweep_opts.out_dir.c_str(), rows.size());
        } else if (*dec_cmd) {
            const auto cfg = resolve_config(dec_opts);
            const auto outcome = salab::harness::cmd_decompose(cfg, dec_opts.out_dir);
            std::printf("max identity residual %.3e, upsilon mean %.6g\n",
                        outcome.trace.max_abs_residual, outcome.trace.upsilon_mean);
        } else if (*oracle_cmd) {
            salab::config::ExperimentConfig cfg;
            cfg.model_id = oracle_model;
            if (oracle_model == "scalar-linear") {
                cfg.model = salab::config::ScalarLinearConfig{beta, b};
            } else if (oracle_model == "td") {
                cfg.model = salab::config::TdConfig{gamma, f_coeff, sigma_w, lambda};
            } else if (oracle_model == "styblinski") {
                cfg.model = salab::config::SgdConfig{salab::models::SgdObjective::StyblinskiMod, xi,
                                                     salab::models::Exploration::Iid, sigma_w};
            } else if (oracle_model == "camel") {
                cfg.model = salab::config::SgdConfig{salab::models::SgdObjective::CamelBack, xi,
                                                     salab::models::Exploration::Iid, sigma_w};
            } else {
                throw Error(ErrorKind::Config, "oracle: unknown model \"" + oracle_model + "\"");
            }
            if (oracle_alpha) {
                cfg.schedule.kind = salab::config::ScheduleConfig::Kind::Constant;
                cfg.schedule.alpha = *oracle_alpha;
            } else {
                cfg.schedule.kind = salab::config::ScheduleConfig::Kind::Polynomial;
            }
            salab::harness::cmd_oracle(cfg, oracle_out);
            std::printf("wrote %s/oracle.json\n", oracle_out.c_str());
        } else if (*presets_cmd) {
            for (const auto& name : salab::config::preset_names()) std::printf("%s\n", name.c_str());
        }
    } catch (const Error& err) {
        std::fprintf(stderr, "%s\n", err.what());
        return exit_code_for(err.kind());
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 1;
    }
    return 0;
}
