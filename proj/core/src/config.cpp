#include "salab/config.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

#include "salab/error.hpp"

namespace salab::config {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw Error(ErrorKind::Config, path + ": " + msg);
}

const json& require(const json& obj, const std::string& path, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end()) fail(path + "." + key, "missing required key");
    return *it;
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) {
                ok = true;
                break;
            }
        if (!ok) fail(path + "." + key, "unknown key");
    }
}

double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    return v.get<double>();
}

std::size_t as_count(const json& v, const std::string& path) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        fail(path, "expected a non-negative integer");
    return v.get<std::size_t>();
}

std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
}

std::vector<double> as_double_vector(const json& v, const std::string& path) {
    if (!v.is_array()) fail(path, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(as_number(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

ModelConfig parse_model(const json& m, std::string& model_id) {
    const std::string path = "model";
    model_id = as_string(require(m, path, "id"), path + ".id");

    if (model_id == "scalar-linear") {
        check_keys(m, path, {"id", "beta", "b"});
        ScalarLinearConfig cfg;
        if (m.contains("beta")) cfg.beta = as_number(m["beta"], path + ".beta");
        if (m.contains("b")) cfg.b = as_number(m["b"], path + ".b");
        return cfg;
    }
    if (model_id == "camel" || model_id == "styblinski") {
        check_keys(m, path, {"id", "xi", "exploration", "sigma_w"});
        SgdConfig cfg;
        cfg.objective = model_id == "camel" ? models::SgdObjective::CamelBack
                                            : models::SgdObjective::StyblinskiMod;
        if (m.contains("xi")) {
            if (model_id == "camel") fail(path + ".xi", "not a camel parameter");
            cfg.xi = as_number(m["xi"], path + ".xi");
        }
        if (m.contains("exploration")) {
            const std::string e = as_string(m["exploration"], path + ".exploration");
            if (e == "iid")
                cfg.exploration = models::Exploration::Iid;
            else if (e == "zigzag")
                cfg.exploration = models::Exploration::ZigZag;
            else
                fail(path + ".exploration", "expected \"iid\" or \"zigzag\"");
        }
        if (m.contains("sigma_w")) cfg.sigma_w = as_number(m["sigma_w"], path + ".sigma_w");
        return cfg;
    }
    if (model_id == "td") {
        check_keys(m, path, {"id", "gamma", "F", "sigma_w", "lambda"});
        TdConfig cfg;
        if (m.contains("gamma")) cfg.gamma = as_number(m["gamma"], path + ".gamma");
        if (m.contains("F")) cfg.f_coeff = as_number(m["F"], path + ".F");
        if (m.contains("sigma_w")) cfg.sigma_w = as_number(m["sigma_w"], path + ".sigma_w");
        if (m.contains("lambda")) cfg.lambda = as_number(m["lambda"], path + ".lambda");
        return cfg;
    }
    if (model_id == "finite-linear") {
        check_keys(m, path, {"id", "P", "a", "b"});
        FiniteLinearConfig cfg;
        const json& p = require(m, path, "P");
        if (!p.is_array() || p.empty()) fail(path + ".P", "expected a non-empty array of rows");
        for (std::size_t i = 0; i < p.size(); ++i)
            cfg.p.push_back(as_double_vector(p[i], path + ".P[" + std::to_string(i) + "]"));
        cfg.a = as_double_vector(require(m, path, "a"), path + ".a");
        cfg.b = as_double_vector(require(m, path, "b"), path + ".b");
        return cfg;
    }
    fail(path + ".id", "unknown model \"" + model_id + "\"");
}

ScheduleConfig parse_schedule(const json& s) {
    const std::string path = "schedule";
    ScheduleConfig cfg;
    const std::string kind = as_string(require(s, path, "kind"), path + ".kind");
    if (kind == "constant") {
        check_keys(s, path, {"kind", "alpha"});
        cfg.kind = ScheduleConfig::Kind::Constant;
        cfg.alpha = as_number(require(s, path, "alpha"), path + ".alpha");
    } else if (kind == "polynomial") {
        check_keys(s, path, {"kind", "a", "rho"});
        cfg.kind = ScheduleConfig::Kind::Polynomial;
        cfg.a = as_number(require(s, path, "a"), path + ".a");
        cfg.rho = as_number(require(s, path, "rho"), path + ".rho");
    } else if (kind == "clipped") {
        check_keys(s, path, {"kind", "alpha", "rho"});
        cfg.kind = ScheduleConfig::Kind::Clipped;
        cfg.alpha = as_number(require(s, path, "alpha"), path + ".alpha");
        cfg.rho = as_number(require(s, path, "rho"), path + ".rho");
    } else {
        fail(path + ".kind", "expected \"constant\", \"polynomial\" or \"clipped\"");
    }
    return cfg;
}

Theta0Config parse_theta0(const json& t) {
    const std::string path = "run.theta0";
    Theta0Config cfg;
    const std::string kind = as_string(require(t, path, "kind"), path + ".kind");
    if (kind == "fixed") {
        check_keys(t, path, {"kind", "value"});
        cfg.kind = Theta0Config::Kind::Fixed;
        cfg.value = as_double_vector(require(t, path, "value"), path + ".value");
    } else if (kind == "gaussian") {
        check_keys(t, path, {"kind", "mean", "stddev"});
        cfg.kind = Theta0Config::Kind::Gaussian;
        if (t.contains("mean")) cfg.mean = as_double_vector(t["mean"], path + ".mean");
        cfg.stddev = as_number(require(t, path, "stddev"), path + ".stddev");
        if (!(cfg.stddev >= 0.0)) fail(path + ".stddev", "must be >= 0");
    } else {
        fail(path + ".kind", "expected \"fixed\" or \"gaussian\"");
    }
    return cfg;
}

RunConfig parse_run(const json& r) {
    const std::string path = "run";
    check_keys(r, path, {"N", "N0", "M", "master_seed", "theta0"});
    RunConfig cfg;
    cfg.n_steps = as_count(require(r, path, "N"), path + ".N");
    if (cfg.n_steps == 0) fail(path + ".N", "must be >= 1");
    if (r.contains("N0")) {
        cfg.burn_in = as_count(r["N0"], path + ".N0");
        if (*cfg.burn_in >= cfg.n_steps) fail(path + ".N0", "must be < N");
    }
    if (r.contains("M")) {
        cfg.m_runs = as_count(r["M"], path + ".M");
        if (cfg.m_runs < 2) fail(path + ".M", "must be >= 2");
    }
    if (r.contains("master_seed")) {
        if (!r["master_seed"].is_number_integer() && !r["master_seed"].is_number_unsigned())
            fail(path + ".master_seed", "expected an integer");
        cfg.master_seed = r["master_seed"].get<std::uint64_t>();
    }
    cfg.theta0 = parse_theta0(require(r, path, "theta0"));
    return cfg;
}

OutputConfig parse_output(const json& o) {
    const std::string path = "output";
    check_keys(o, path, {"histogram_bins", "histogram_lo", "histogram_hi", "store_paths"});
    OutputConfig cfg;
    if (o.contains("histogram_bins")) {
        const std::size_t bins = as_count(o["histogram_bins"], path + ".histogram_bins");
        if (bins < 1) fail(path + ".histogram_bins", "must be >= 1");
        cfg.histogram_bins = static_cast<int>(bins);
    }
    if (o.contains("histogram_lo")) cfg.histogram_lo = as_number(o["histogram_lo"], path + ".histogram_lo");
    if (o.contains("histogram_hi")) cfg.histogram_hi = as_number(o["histogram_hi"], path + ".histogram_hi");
    if (cfg.histogram_lo.has_value() != cfg.histogram_hi.has_value())
        fail(path, "histogram_lo and histogram_hi must be given together");
    if (o.contains("store_paths")) {
        if (!o["store_paths"].is_boolean()) fail(path + ".store_paths", "expected a boolean");
        cfg.store_paths = o["store_paths"].get<bool>();
    }
    return cfg;
}

SweepConfig parse_sweep(const json& s) {
    const std::string path = "sweep";
    check_keys(s, path, {"parameter", "values"});
    SweepConfig cfg;
    const std::string p = as_string(require(s, path, "parameter"), path + ".parameter");
    if (p == "alpha")
        cfg.parameter = SweepConfig::Parameter::Alpha;
    else if (p == "rho")
        cfg.parameter = SweepConfig::Parameter::Rho;
    else
        fail(path + ".parameter", "expected \"alpha\" or \"rho\"");
    cfg.values = as_double_vector(require(s, path, "values"), path + ".values");
    if (cfg.values.empty()) fail(path + ".values", "grid must be non-empty");
    return cfg;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& err) {
        throw Error(ErrorKind::Config, std::string("invalid JSON: ") + err.what());
    }
    check_keys(doc, "$", {"model", "schedule", "run", "output", "sweep"});

    ExperimentConfig cfg;
    cfg.model = parse_model(require(doc, "$", "model"), cfg.model_id);
    cfg.schedule = parse_schedule(require(doc, "$", "schedule"));
    cfg.run = parse_run(require(doc, "$", "run"));
    if (doc.contains("output")) cfg.output = parse_output(doc["output"]);
    if (doc.contains("sweep")) cfg.sweep = parse_sweep(doc["sweep"]);

    // cross-field checks: theta0 dimension must match the model
    const std::size_t dim = cfg.model_id == "scalar-linear" || cfg.model_id == "finite-linear" ? 1 : 2;
    const Theta0Config& t0 = cfg.run.theta0;
    if (t0.kind == Theta0Config::Kind::Fixed && t0.value.size() != dim)
        fail("run.theta0.value", "expected " + std::to_string(dim) + " entries for model \"" +
                                     cfg.model_id + "\"");
    if (t0.kind == Theta0Config::Kind::Gaussian && !t0.mean.empty() && t0.mean.size() != dim)
        fail("run.theta0.mean", "expected " + std::to_string(dim) + " entries for model \"" +
                                    cfg.model_id + "\"");
    return cfg;
}

models::FiniteLinearModel finite_linear_model(const FiniteLinearConfig& mc) {
    const std::size_t n = mc.p.size();
    Eigen::MatrixXd p(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (mc.p[i].size() != n) throw Error(ErrorKind::Config, "model.P: rows must form a square matrix");
        for (std::size_t j = 0; j < n; ++j) p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = mc.p[i][j];
    }
    const Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(mc.a.data(), static_cast<Eigen::Index>(mc.a.size()));
    const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(mc.b.data(), static_cast<Eigen::Index>(mc.b.size()));
    return models::FiniteLinearModel(p, a, b);
}

ExperimentConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorKind::Config, "cannot open config file " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string resolved_json_text(const ExperimentConfig& cfg) {
    json m;
    std::visit(
        [&](const auto& mc) {
            using T = std::decay_t<decltype(mc)>;
            m["id"] = cfg.model_id;
            if constexpr (std::is_same_v<T, ScalarLinearConfig>) {
                m["beta"] = mc.beta;
                m["b"] = mc.b;
            } else if constexpr (std::is_same_v<T, SgdConfig>) {
                if (mc.objective == models::SgdObjective::StyblinskiMod) m["xi"] = mc.xi;
                m["exploration"] = mc.exploration == models::Exploration::Iid ? "iid" : "zigzag";
                m["sigma_w"] = mc.sigma_w;
            } else if constexpr (std::is_same_v<T, TdConfig>) {
                m["gamma"] = mc.gamma;
                m["F"] = mc.f_coeff;
                m["sigma_w"] = mc.sigma_w;
                m["lambda"] = mc.lambda;
            } else {
                m["P"] = mc.p;
                m["a"] = mc.a;
                m["b"] = mc.b;
            }
        },
        cfg.model);

    json s;
    switch (cfg.schedule.kind) {
        case ScheduleConfig::Kind::Constant:
            s = {{"kind", "constant"}, {"alpha", cfg.schedule.alpha}};
            break;
        case ScheduleConfig::Kind::Polynomial:
            s = {{"kind", "polynomial"}, {"a", cfg.schedule.a}, {"rho", cfg.schedule.rho}};
            break;
        case ScheduleConfig::Kind::Clipped:
            s = {{"kind", "clipped"}, {"alpha", cfg.schedule.alpha}, {"rho", cfg.schedule.rho}};
            break;
    }

    json t0;
    if (cfg.run.theta0.kind == Theta0Config::Kind::Fixed) {
        t0 = {{"kind", "fixed"}, {"value", cfg.run.theta0.value}};
    } else {
        t0 = {{"kind", "gaussian"}, {"mean", cfg.run.theta0.mean}, {"stddev", cfg.run.theta0.stddev}};
    }

    json doc;
    doc["model"] = m;
    doc["schedule"] = s;
    doc["run"] = {{"N", cfg.run.n_steps},
                  {"N0", cfg.burn_in()},
                  {"M", cfg.run.m_runs},
                  {"master_seed", cfg.run.master_seed},
                  {"theta0", t0}};
    doc["output"] = {{"histogram_bins", cfg.output.histogram_bins},
                     {"store_paths", cfg.output.store_paths}};
    if (cfg.output.histogram_lo) {
        doc["output"]["histogram_lo"] = *cfg.output.histogram_lo;
        doc["output"]["histogram_hi"] = *cfg.output.histogram_hi;
    }
    if (cfg.sweep) {
        doc["sweep"] = {
            {"parameter", cfg.sweep->parameter == SweepConfig::Parameter::Alpha ? "alpha" : "rho"},
            {"values", cfg.sweep->values}};
    }
    return doc.dump(2) + "\n";
}

SAProblem make_problem(const ExperimentConfig& cfg) {
    return std::visit(
        [&](const auto& mc) -> SAProblem {
            using T = std::decay_t<decltype(mc)>;
            if constexpr (std::is_same_v<T, ScalarLinearConfig>) {
                return models::ScalarLinearModel{mc.beta, mc.b}.problem();
            } else if constexpr (std::is_same_v<T, SgdConfig>) {
                return models::SgdModel{mc.objective, mc.xi, mc.exploration, mc.sigma_w}.problem();
            } else if constexpr (std::is_same_v<T, TdConfig>) {
                return models::TdModel{mc.gamma, mc.f_coeff, mc.sigma_w, mc.lambda}.problem();
            } else {
                return finite_linear_model(mc).problem();
            }
        },
        cfg.model);
}

NoiseChain make_chain(const ExperimentConfig& cfg) {
    return std::visit(
        [&](const auto& mc) -> NoiseChain {
            using T = std::decay_t<decltype(mc)>;
            if constexpr (std::is_same_v<T, ScalarLinearConfig>) {
                return models::ScalarLinearModel{mc.beta, mc.b}.chain();
            } else if constexpr (std::is_same_v<T, SgdConfig>) {
                return models::SgdModel{mc.objective, mc.xi, mc.exploration, mc.sigma_w}.chain();
            } else if constexpr (std::is_same_v<T, TdConfig>) {
                return models::TdModel{mc.gamma, mc.f_coeff, mc.sigma_w, mc.lambda}.chain();
            } else {
                return finite_linear_model(mc).chain();
            }
        },
        cfg.model);
}

StepSchedule make_schedule(const ScheduleConfig& cfg) {
    switch (cfg.kind) {
        case ScheduleConfig::Kind::Constant: return make_constant(cfg.alpha);
        case ScheduleConfig::Kind::Polynomial: return make_polynomial(cfg.a, cfg.rho);
        case ScheduleConfig::Kind::Clipped: return make_clipped(cfg.alpha, cfg.rho);
    }
    throw Error(ErrorKind::Config, "schedule.kind: invalid");
}

analysis::Theta0Spec make_theta0(const Theta0Config& cfg, int dim) {
    if (cfg.kind == Theta0Config::Kind::Fixed) {
        return analysis::FixedTheta0{
            Eigen::Map<const Eigen::VectorXd>(cfg.value.data(), static_cast<Eigen::Index>(cfg.value.size()))};
    }
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
    if (!cfg.mean.empty())
        mean = Eigen::Map<const Eigen::VectorXd>(cfg.mean.data(), static_cast<Eigen::Index>(cfg.mean.size()));
    return analysis::GaussianTheta0{mean, cfg.stddev};
}

// ---------------------------------------------------------------------------
// Bundled presets (copies live under presets/ in the source tree)
// ---------------------------------------------------------------------------

namespace {

const std::map<std::string, std::string>& preset_table() {
    static const std::map<std::string, std::string> presets = {
        {"scalar-linear", R"json({
  "model": {"id": "scalar-linear", "beta": 0.9, "b": -10.0},
  "schedule": {"kind": "constant", "alpha": 0.0028},
  "run": {
    "N": 200000, "N0": 40000, "M": 500, "master_seed": 1,
    "theta0": {"kind": "gaussian", "mean": [0.0], "stddev": 5.0}
  },
  "output": {"histogram_bins": 40, "store_paths": false}
}
)json"},
        {"td", R"json({
  "model": {"id": "td", "gamma": 0.7, "F": 0.5, "sigma_w": 1.0, "lambda": 0.0},
  "schedule": {"kind": "clipped", "alpha": 0.01, "rho": 0.8},
  "run": {
    "N": 500000, "N0": 100000, "M": 200, "master_seed": 1,
    "theta0": {"kind": "fixed", "value": [0.0, 0.0]}
  },
  "output": {"histogram_bins": 40, "store_paths": false}
}
)json"},
        {"camel", R"json({
  "model": {"id": "camel", "exploration": "iid", "sigma_w": 20.0},
  "schedule": {"kind": "constant", "alpha": 0.02},
  "run": {
    "N": 10000, "N0": 2000, "M": 200, "master_seed": 1,
    "theta0": {"kind": "fixed", "value": [0.0, 0.0]}
  },
  "output": {"histogram_bins": 40, "store_paths": false}
}
)json"},
        {"styblinski", R"json({
  "model": {"id": "styblinski", "xi": 50.0, "exploration": "zigzag", "sigma_w": 1.0},
  "schedule": {"kind": "constant", "alpha": 0.1},
  "run": {
    "N": 10000, "N0": 2000, "M": 200, "master_seed": 1,
    "theta0": {"kind": "fixed", "value": [0.0, 0.0]}
  },
  "output": {"histogram_bins": 40, "store_paths": false}
}
)json"},
        {"scalar-linear-alpha-sweep", R"json({
  "model": {"id": "scalar-linear", "beta": 0.9, "b": -10.0},
  "schedule": {"kind": "constant", "alpha": 0.0028},
  "run": {
    "N": 100000, "N0": 20000, "M": 500, "master_seed": 1,
    "theta0": {"kind": "gaussian", "mean": [0.0], "stddev": 5.0}
  },
  "output": {"histogram_bins": 40, "store_paths": false},
  "sweep": {"parameter": "alpha", "values": [5e-4, 2.8e-3, 1.58e-2, 8.89e-2, 0.5]}
}
)json"},
        {"scalar-linear-rho-sweep", R"json({
  "model": {"id": "scalar-linear", "beta": 0.9, "b": -10.0},
  "schedule": {"kind": "polynomial", "a": 0.5, "rho": 0.8},
  "run": {
    "N": 100000, "N0": 20000, "M": 500, "master_seed": 1,
    "theta0": {"kind": "gaussian", "mean": [0.0], "stddev": 5.0}
  },
  "output": {"histogram_bins": 40, "store_paths": false},
  "sweep": {"parameter": "rho", "values": [0.4, 0.5375, 0.675, 0.8125, 0.9]}
}
)json"},
    };
    return presets;
}

}  // namespace

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& [name, text] : preset_table()) out.push_back(name);
        return out;
    }();
    return names;
}

const std::string& preset_text(const std::string& name) {
    const auto it = preset_table().find(name);
    if (it == preset_table().end())
        throw Error(ErrorKind::Argument, "unknown preset \"" + name + "\"");
    return it->second;
}

ExperimentConfig preset_config(const std::string& name) { return parse_config(preset_text(name)); }

}  // namespace salab::config
