#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "salab/analysis.hpp"
#include "salab/engine.hpp"
#include "salab/models.hpp"

namespace salab::config {

// ---------------------------------------------------------------------------
// Experiment configuration: a single JSON document with a strict schema.
// Unknown keys anywhere in the document are rejected with the field path.
// ---------------------------------------------------------------------------

struct ScalarLinearConfig {
    double beta = 0.9;
    double b = -10.0;
};

struct SgdConfig {
    models::SgdObjective objective = models::SgdObjective::CamelBack;
    double xi = 50.0;
    models::Exploration exploration = models::Exploration::Iid;
    double sigma_w = 1.0;
};

struct TdConfig {
    double gamma = 0.7;
    double f_coeff = 0.5;
    double sigma_w = 1.0;
    double lambda = 0.0;
};

struct FiniteLinearConfig {
    std::vector<std::vector<double>> p;
    std::vector<double> a;
    std::vector<double> b;
};

using ModelConfig = std::variant<ScalarLinearConfig, SgdConfig, TdConfig, FiniteLinearConfig>;

struct ScheduleConfig {
    enum class Kind { Constant, Polynomial, Clipped };
    Kind kind = Kind::Constant;
    double alpha = 0.01;  // Constant / Clipped
    double a = 0.5;       // Polynomial
    double rho = 0.8;     // Polynomial / Clipped
};

struct Theta0Config {
    enum class Kind { Fixed, Gaussian };
    Kind kind = Kind::Fixed;
    std::vector<double> value;  // Fixed
    std::vector<double> mean;   // Gaussian (empty -> zero)
    double stddev = 1.0;
};

struct RunConfig {
    std::size_t n_steps = 10000;
    std::optional<std::size_t> burn_in;  // default floor(0.2 N)
    std::size_t m_runs = 100;
    std::uint64_t master_seed = 0;
    Theta0Config theta0;
};

struct OutputConfig {
    int histogram_bins = 40;
    std::optional<double> histogram_lo;
    std::optional<double> histogram_hi;
    bool store_paths = false;
};

struct SweepConfig {
    enum class Parameter { Alpha, Rho };
    Parameter parameter = Parameter::Alpha;
    std::vector<double> values;
};

struct ExperimentConfig {
    std::string model_id;  // scalar-linear | camel | styblinski | td | finite-linear
    ModelConfig model;
    ScheduleConfig schedule;
    RunConfig run;
    OutputConfig output;
    std::optional<SweepConfig> sweep;

    std::size_t burn_in() const {
        return run.burn_in ? *run.burn_in : run.n_steps / 5;
    }
};

/// Parses and validates a configuration document. Throws Error(Config) with a
/// field path on any violation, including unknown keys.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& file);

/// Serializes the fully resolved configuration (all defaults materialized);
/// parse_config(resolved_json_text(c)) reproduces c.
std::string resolved_json_text(const ExperimentConfig& cfg);

// Bundled presets (also shipped as files under presets/ in the source tree).
const std::vector<std::string>& preset_names();
const std::string& preset_text(const std::string& name);
ExperimentConfig preset_config(const std::string& name);

// Construction of domain objects from a configuration.
SAProblem make_problem(const ExperimentConfig& cfg);
NoiseChain make_chain(const ExperimentConfig& cfg);
StepSchedule make_schedule(const ScheduleConfig& cfg);
analysis::Theta0Spec make_theta0(const Theta0Config& cfg, int dim);
models::FiniteLinearModel finite_linear_model(const FiniteLinearConfig& cfg);

}  // namespace salab::config
