#include "salab/harness.hpp"

#include <nlohmann/json.hpp>

#include <cinttypes>
#include <cstdio>
#include <fstream>

#include "salab/version.hpp"

namespace salab::harness {

using nlohmann::json;

namespace {

// RFC 4180 line ending for CSV; floats at 17 significant digits, '.' decimal
// separator (printf "%.17g" is locale-independent for the C locale).
constexpr const char* kCrlf = "\r\n";

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%" PRIu64, v);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Argument, "cannot write " + path.string());
    out << content;
}

void write_json(const std::filesystem::path& path, const json& doc) {
    write_file(path, doc.dump(2) + "\n");
}

json vec_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

json mat_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

/// 1x1 matrices and 1-vectors are emitted as plain numbers.
json mat_or_scalar(const Eigen::MatrixXd& m) {
    if (m.rows() == 1 && m.cols() == 1) return m(0, 0);
    return mat_json(m);
}

json vec_or_scalar(const Eigen::VectorXd& v) {
    if (v.size() == 1) return v[0];
    return vec_json(v);
}

json summary_results_json(const analysis::EnsembleSummary& s, const SAProblem& problem) {
    json res;
    res["m_total"] = s.m_total;
    res["m_excluded"] = s.m_excluded;
    res["n_steps"] = s.n_steps;
    res["burn_in"] = s.burn_in;
    res["mean_final"] = vec_json(s.mean_final);
    res["mean_pr"] = vec_json(s.mean_pr);
    res["cov_pr"] = mat_json(s.cov_pr);
    res["scaled_cov_pr"] = mat_json(s.scaled_cov_pr);
    if (problem.theta_star) {
        res["theta_star"] = vec_json(*problem.theta_star);
        res["bias_pr"] = vec_json((s.mean_pr - *problem.theta_star).eval());
    }
    if (s.mse_final) res["mse_final"] = *s.mse_final;
    if (s.mean_tail_sq_err) res["mean_tail_sq_err"] = *s.mean_tail_sq_err;
    if (s.mean_target_bias_sq_norm) res["mean_target_bias_sq_norm"] = *s.mean_target_bias_sq_norm;
    return res;
}

std::string runs_csv(const analysis::EnsembleSummary& s, const SAProblem& problem) {
    const int d = static_cast<int>(s.mean_pr.size());
    const bool has_star = problem.theta_star.has_value();
    // column presence must not depend on which runs diverged
    bool has_bias = false, has_tail = false;
    for (const auto& run : s.runs) {
        if (run.diverged) continue;
        has_bias = run.target_bias_sq_norm.has_value();
        has_tail = run.tail_sq_err.has_value();
        break;
    }

    std::string out = "run_index,seed,diverged,diverged_step";
    for (int i = 0; i < d; ++i) out += ",theta_final_" + std::to_string(i);
    for (int i = 0; i < d; ++i) out += ",theta_pr_" + std::to_string(i);
    if (has_star) out += ",sq_err_final";
    if (has_bias) out += ",target_bias_sq_norm";
    if (has_tail) out += ",tail_sq_err";
    out += kCrlf;

    for (std::size_t r = 0; r < s.runs.size(); ++r) {
        const auto& run = s.runs[r];
        out += std::to_string(r) + "," + fmt(run.seed) + "," + (run.diverged ? "1" : "0") + "," +
               std::to_string(run.diverged_step);
        for (int i = 0; i < d; ++i) out += "," + fmt(run.diverged ? 0.0 : run.theta_final[i]);
        for (int i = 0; i < d; ++i) out += "," + fmt(run.diverged ? 0.0 : run.theta_pr[i]);
        if (has_star)
            out += "," + fmt(run.diverged ? 0.0
                                          : (run.theta_final - *problem.theta_star).squaredNorm());
        if (has_bias) out += "," + fmt(run.diverged ? 0.0 : run.target_bias_sq_norm.value_or(0.0));
        if (has_tail) out += "," + fmt(run.diverged ? 0.0 : run.tail_sq_err.value_or(0.0));
        out += kCrlf;
    }
    return out;
}

json histogram_json_entry(const std::string& name, const analysis::HistogramSpec& h) {
    json e;
    e["name"] = name;
    e["bin_count"] = h.bin_count;
    e["lo"] = *h.lo;
    e["hi"] = *h.hi;
    e["edges"] = h.edges;
    e["counts"] = h.counts;
    e["clipped_low"] = h.clipped_low;
    e["clipped_high"] = h.clipped_high;
    return e;
}

json histograms_json(const analysis::EnsembleSummary& s, const config::OutputConfig& out_cfg) {
    const int d = static_cast<int>(s.mean_pr.size());
    json series = json::array();
    for (int comp = 0; comp < d; ++comp) {
        for (const bool pr : {true, false}) {
            std::vector<double> values;
            values.reserve(s.runs.size());
            for (const auto& run : s.runs) {
                if (run.diverged) continue;
                values.push_back(pr ? run.theta_pr[comp] : run.theta_final[comp]);
            }
            analysis::HistogramSpec spec;
            spec.bin_count = out_cfg.histogram_bins;
            spec.lo = out_cfg.histogram_lo;
            spec.hi = out_cfg.histogram_hi;
            const auto filled = analysis::histogram(values, spec);
            const std::string name =
                (pr ? "theta_pr_" : "theta_final_") + std::to_string(comp);
            series.push_back(histogram_json_entry(name, filled));
        }
    }
    json doc;
    doc["series"] = series;
    return doc;
}

analysis::EnsembleSummary run_block(const config::ExperimentConfig& cfg, const SAProblem& problem,
                                    const NoiseChain& chain, const StepSchedule& schedule,
                                    std::size_t block, int threads) {
    analysis::EnsembleOptions opts;
    opts.m_runs = cfg.run.m_runs;
    opts.n_steps = cfg.run.n_steps;
    opts.burn_in = cfg.burn_in();
    opts.master_seed = Rng::derive_block(cfg.run.master_seed, block);
    opts.theta0 = config::make_theta0(cfg.run.theta0, problem.dim);
    opts.threads = threads;
    return analysis::ensemble_run(problem, chain, schedule, opts);
}

}  // namespace

analysis::EnsembleSummary cmd_run(const config::ExperimentConfig& cfg,
                                  const std::filesystem::path& out_dir, int threads) {
    std::filesystem::create_directories(out_dir);
    const SAProblem problem = config::make_problem(cfg);
    const NoiseChain chain = config::make_chain(cfg);
    const StepSchedule schedule = config::make_schedule(cfg.schedule);

    const auto summary = run_block(cfg, problem, chain, schedule, 0, threads);

    json doc;
    doc["artifact_version"] = kVersion;
    doc["command"] = "run";
    doc["config"] = json::parse(config::resolved_json_text(cfg));
    doc["results"] = summary_results_json(summary, problem);
    write_json(out_dir / "summary.json", doc);
    write_file(out_dir / "runs.csv", runs_csv(summary, problem));
    write_json(out_dir / "histogram.json", histograms_json(summary, cfg.output));
    return summary;
}

std::vector<SweepRow> cmd_sweep(const config::ExperimentConfig& cfg,
                                const std::filesystem::path& out_dir, int threads) {
    if (!cfg.sweep) throw Error(ErrorKind::Config, "sweep: missing sweep block");
    std::filesystem::create_directories(out_dir);
    const SAProblem problem = config::make_problem(cfg);
    const NoiseChain chain = config::make_chain(cfg);
    const bool over_alpha = cfg.sweep->parameter == config::SweepConfig::Parameter::Alpha;

    std::vector<SweepRow> rows;
    rows.reserve(cfg.sweep->values.size());
    for (std::size_t g = 0; g < cfg.sweep->values.size(); ++g) {
        const double value = cfg.sweep->values[g];
        config::ScheduleConfig sched_cfg = cfg.schedule;
        if (over_alpha) {
            sched_cfg.alpha = value;
            if (sched_cfg.kind == config::ScheduleConfig::Kind::Polynomial)
                throw Error(ErrorKind::Config, "sweep: alpha grid needs a constant or clipped schedule");
        } else {
            sched_cfg.rho = value;
            if (sched_cfg.kind == config::ScheduleConfig::Kind::Constant)
                throw Error(ErrorKind::Config, "sweep: rho grid needs a polynomial or clipped schedule");
        }
        const StepSchedule schedule = config::make_schedule(sched_cfg);
        SweepRow row;
        row.parameter = over_alpha ? "alpha" : "rho";
        row.value = value;
        row.summary = run_block(cfg, problem, chain, schedule, g, threads);
        rows.push_back(std::move(row));
    }

    const int d = problem.dim;
    std::string csv = "parameter,value,m_total,m_excluded";
    for (int i = 0; i < d; ++i) csv += ",mean_pr_" + std::to_string(i);
    if (problem.theta_star) {
        for (int i = 0; i < d; ++i) csv += ",bias_pr_" + std::to_string(i);
        csv += ",bias_pr_norm";
    }
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) csv += ",scaled_cov_pr_" + std::to_string(i) + "_" + std::to_string(j);
    for (int i = 0; i < d; ++i) csv += ",se_pr_" + std::to_string(i);
    if (problem.theta_star) csv += ",mse_final";
    csv += kCrlf;

    for (const auto& row : rows) {
        const auto& s = row.summary;
        csv += row.parameter + "," + fmt(row.value) + "," + std::to_string(s.m_total) + "," +
               std::to_string(s.m_excluded);
        for (int i = 0; i < d; ++i) csv += "," + fmt(s.mean_pr[i]);
        if (problem.theta_star) {
            const Eigen::VectorXd bias = s.mean_pr - *problem.theta_star;
            for (int i = 0; i < d; ++i) csv += "," + fmt(bias[i]);
            csv += "," + fmt(bias.norm());
        }
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) csv += "," + fmt(s.scaled_cov_pr(i, j));
        const double m_inc = static_cast<double>(s.m_total - s.m_excluded);
        for (int i = 0; i < d; ++i) csv += "," + fmt(std::sqrt(s.cov_pr(i, i) / m_inc));
        if (problem.theta_star) csv += "," + fmt(s.mse_final.value_or(0.0));
        csv += kCrlf;
    }
    write_file(out_dir / "sweep.csv", csv);
    return rows;
}

oracles::OracleReport cmd_oracle(const config::ExperimentConfig& cfg,
                                 const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    oracles::OracleReport rep;
    json doc;
    doc["artifact_version"] = kVersion;
    doc["command"] = "oracle";
    doc["model"] = cfg.model_id;

    if (const auto* sl = std::get_if<config::ScalarLinearConfig>(&cfg.model)) {
        const bool constant = cfg.schedule.kind == config::ScheduleConfig::Kind::Constant;
        const double alpha = constant ? cfg.schedule.alpha : std::numeric_limits<double>::quiet_NaN();
        const auto orc = models::scalar_linear_oracles(sl->beta, sl->b, alpha);
        rep.theta_star = Eigen::VectorXd::Constant(1, orc.theta_star);
        rep.astar = Eigen::MatrixXd::Constant(1, 1, -1.0);
        rep.sigma_clt_noise = Eigen::MatrixXd::Constant(1, 1, orc.sigma_clt_noise);
        rep.sigma_theta_star = Eigen::MatrixXd::Constant(1, 1, orc.sigma_theta_star);
        rep.z_theta_star = Eigen::MatrixXd::Constant(1, 1, orc.z_theta_star);
        rep.upsilon_bar_star = Eigen::VectorXd::Constant(1, orc.upsilon_bar_star);
        rep.zeta_theta_star = Eigen::VectorXd::Constant(1, orc.zeta_theta_star);
        doc["params"] = {{"beta", sl->beta}, {"b", sl->b}};
        if (constant) {
            rep.bias_first_order = Eigen::VectorXd::Constant(1, orc.bias_first_order_mean);
            doc["alpha"] = alpha;
        }
    } else if (const auto* td = std::get_if<config::TdConfig>(&cfg.model)) {
        rep.theta_star = models::td_true_theta(td->gamma, td->f_coeff, td->sigma_w);
        const auto field = models::td_stationary_field(td->gamma, td->f_coeff, td->sigma_w, td->lambda);
        rep.astar = field.a;
        doc["params"] = {{"gamma", td->gamma},
                         {"F", td->f_coeff},
                         {"sigma_w", td->sigma_w},
                         {"lambda", td->lambda}};
    } else if (const auto* fl = std::get_if<config::FiniteLinearConfig>(&cfg.model)) {
        const auto model = config::finite_linear_model(*fl);
        rep.theta_star = Eigen::VectorXd::Constant(1, model.theta_star());
        rep.astar = Eigen::MatrixXd::Constant(1, 1, model.a_bar);
        doc["params"] = {{"a_bar", model.a_bar}, {"b_bar", model.b_bar}};
    } else {
        const auto& sgd = std::get<config::SgdConfig>(cfg.model);
        if (sgd.objective == models::SgdObjective::CamelBack)
            throw Error(ErrorKind::Capability, "no closed-form oracle for the camel model");
        const double root = models::styblinski_root(sgd.xi);
        rep.theta_star = Eigen::Vector2d(root, root);
        rep.astar = (-models::styblinski_curvature(sgd.xi) * Eigen::Matrix2d::Identity()).eval();
        doc["params"] = {{"xi", sgd.xi}, {"sigma_w", sgd.sigma_w}};
    }

    if (rep.theta_star) doc["theta_star"] = vec_or_scalar(*rep.theta_star);
    if (rep.astar) doc["astar"] = mat_or_scalar(*rep.astar);
    if (rep.sigma_clt_noise) doc["sigma_clt_noise"] = mat_or_scalar(*rep.sigma_clt_noise);
    if (rep.sigma_theta_star) doc["sigma_theta_star"] = mat_or_scalar(*rep.sigma_theta_star);
    if (rep.z_theta_star) doc["z_theta_star"] = mat_or_scalar(*rep.z_theta_star);
    if (rep.upsilon_bar_star) doc["upsilon_bar_star"] = vec_or_scalar(*rep.upsilon_bar_star);
    if (rep.zeta_theta_star) doc["zeta_theta_star"] = vec_or_scalar(*rep.zeta_theta_star);
    if (rep.bias_first_order) doc["bias_first_order"] = vec_or_scalar(*rep.bias_first_order);

    write_json(out_dir / "oracle.json", doc);
    return rep;
}

DecomposeOutcome cmd_decompose(const config::ExperimentConfig& cfg,
                               const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    if (cfg.schedule.kind != config::ScheduleConfig::Kind::Constant)
        throw Error(ErrorKind::Config, "decompose: needs a constant schedule");
    const double alpha = cfg.schedule.alpha;

    const SAProblem problem = config::make_problem(cfg);
    const NoiseChain chain = config::make_chain(cfg);

    DecomposeOutcome outcome;
    outcome.seed = Rng::derive(cfg.run.master_seed, 0);
    Rng rng(outcome.seed);
    const Eigen::VectorXd theta0 =
        analysis::draw_theta0(config::make_theta0(cfg.run.theta0, problem.dim), problem.dim, rng);
    const ChainState phi0 = stationary_sample(chain, rng);

    SaRunOptions opts;
    opts.n_steps = cfg.run.n_steps;
    opts.burn_in = cfg.burn_in();
    opts.record_path = true;
    opts.record_states = true;
    const RunRecord rec =
        sa_run(problem, chain, config::make_schedule(cfg.schedule), theta0, phi0, opts, rng);

    json doc;
    doc["artifact_version"] = kVersion;
    doc["command"] = "decompose";
    doc["model"] = cfg.model_id;
    doc["alpha"] = alpha;
    doc["n_steps"] = cfg.run.n_steps;
    doc["seed"] = outcome.seed;

    if (const auto* sl = std::get_if<config::ScalarLinearConfig>(&cfg.model)) {
        models::ScalarLinearModel model{sl->beta, sl->b};
        outcome.trace = oracles::decompose_disturbance(model, rec, alpha);
        doc["upsilon_bar_star"] = models::scalar_linear_oracles(sl->beta, sl->b).upsilon_bar_star;
    } else if (const auto* fl = std::get_if<config::FiniteLinearConfig>(&cfg.model)) {
        outcome.trace = oracles::decompose_disturbance(config::finite_linear_model(*fl), rec, alpha);
    } else {
        throw Error(ErrorKind::Capability,
                    "decompose: supported for scalar-linear and finite-linear models only");
    }

    outcome.martingale_lag1_autocorr = lag1_autocorr(outcome.trace.martingale);
    doc["max_identity_residual"] = outcome.trace.max_abs_residual;
    doc["telescoped_residual"] = outcome.trace.telescoped_residual;
    doc["upsilon_mean"] = outcome.trace.upsilon_mean;
    doc["martingale_lag1_autocorr"] = outcome.martingale_lag1_autocorr;
    write_json(out_dir / "decompose.json", doc);
    return outcome;
}

double lag1_autocorr(const std::vector<double>& series) {
    if (series.size() < 3) throw Error(ErrorKind::Argument, "series too short");
    const std::size_t n = series.size();
    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double c = series[i] - mean;
        var += c * c;
        if (i + 1 < n) cov += c * (series[i + 1] - mean);
    }
    if (var == 0.0) return 0.0;
    return cov / var;
}

}  // namespace salab::harness
