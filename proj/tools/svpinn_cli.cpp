// Command-line driver: sample test-function batches, train solver cells,
// run verification studies, and aggregate run directories into a table.

#include <omp.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "svpinn/problems.hpp"
#include "svpinn/sampler.hpp"
#include "svpinn/train.hpp"
#include "svpinn/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kSummarySchemaVersion = 1;

std::vector<std::pair<std::string, std::string>> parse_kv(const std::vector<std::string>& args) {
    std::vector<std::pair<std::string, std::string>> kv;
    for (const auto& a : args) {
        const auto eq = a.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError("problem parameters must look like key=value, got '" + a + "'");
        kv.emplace_back(a.substr(0, eq), a.substr(eq + 1));
    }
    return kv;
}

// Config file < command line. Only keys present in the file are applied.
void apply_config_file(const std::string& path, svpinn::TrainConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("cannot open config file " + path);
    json j;
    in >> j;
    if (j.contains("steps")) cfg.steps = j["steps"];
    if (j.contains("lambda_b")) cfg.lambda_b = j["lambda_b"];
    if (j.contains("tau")) cfg.tau = j["tau"];
    if (j.contains("tau_balanced")) cfg.tau_balanced = j["tau_balanced"];
    if (j.contains("batch_rows")) cfg.batch_rows = j["batch_rows"];
    if (j.contains("width")) cfg.width = j["width"];
    if (j.contains("init_scale")) cfg.init_scale = j["init_scale"];
    if (j.contains("hidden")) cfg.hidden = j["hidden"];
    if (j.contains("feature_count")) cfg.feature_count = j["feature_count"];
    if (j.contains("daff_max_component")) cfg.daff_max_component = j["daff_max_component"];
    if (j.contains("sigma_ff")) cfg.sigma_ff = j["sigma_ff"];
    if (j.contains("hard_boundary")) cfg.hard_boundary = j["hard_boundary"];
    if (j.contains("l2_every")) cfg.l2_every = j["l2_every"];
    if (j.contains("early_stop_l2")) cfg.early_stop_l2 = j["early_stop_l2"];
    if (j.contains("offset_collocation")) cfg.offset_collocation = j["offset_collocation"];
    if (j.contains("features")) {
        const std::string f = j["features"];
        if (f == "daff")
            cfg.features = svpinn::FeatureKind::Daff;
        else if (f == "fourier")
            cfg.features = svpinn::FeatureKind::Fourier;
        else if (f == "identity")
            cfg.features = svpinn::FeatureKind::Identity;
        else
            throw CLI::ValidationError("unknown features kind in config: " + f);
    }
}

int cmd_sample(int d, int n, double tau, std::size_t count, std::uint64_t seed,
               const std::string& out) {
    const svpinn::GridSpec grid(d, n);
    const svpinn::TestFunctionBatch batch = svpinn::sample_wm_batch(grid, tau, count, seed);
    svpinn::save_batch(batch, out);
    std::cout << "wrote " << out << ": d=" << d << " n=" << n << " N=" << count << " tau=" << tau
              << " seed=" << seed << "\n";
    return 0;
}

int cmd_train(const std::string& experiment, const std::vector<std::string>& params,
              const std::string& method, const std::string& optimizer, int steps,
              bool steps_explicit, std::uint64_t seed, const std::string& config_path,
              const std::string& out_dir) {
    svpinn::ProblemSpec problem = svpinn::make_problem(experiment, parse_kv(params));

    svpinn::TrainConfig cfg;
    // Per-dimension desk defaults; a config file and flags override them.
    cfg.init_scale = 0.25;
    if (problem.d == 1) {
        cfg.width = 64;
        cfg.hidden = 2;
        cfg.feature_count = 64;
        cfg.batch_rows = 4000;
        cfg.tau = 0.1;
    } else if (problem.d == 2) {
        cfg.width = 128;
        cfg.hidden = 3;
        cfg.feature_count = 128;
        cfg.batch_rows = 8000;
        cfg.tau = 1.0;
    } else {
        cfg.width = 64;
        cfg.hidden = 2;
        cfg.feature_count = 36;
        cfg.batch_rows = 4000;
        cfg.tau = 10.0;
    }
    if (!problem.homogeneous) {
        cfg.hard_boundary = false;
        cfg.features = svpinn::FeatureKind::Fourier;
        cfg.feature_count = 32;
        cfg.lambda_b = 1.0;
        cfg.tau_balanced = true;
    }
    if (!config_path.empty()) apply_config_file(config_path, cfg);
    if (steps_explicit || config_path.empty()) cfg.steps = steps;
    cfg.init_seed = seed;
    cfg.batch_seed = seed + 1;
    cfg.method = method == "pinn" ? svpinn::Method::Pinn : svpinn::Method::Svpinn;
    cfg.optimizer = optimizer == "gd" ? svpinn::OptimizerKind::Gd : svpinn::OptimizerKind::Lbfgs;

    const svpinn::TrainResult result = svpinn::run_training(problem, cfg);

    fs::create_directories(out_dir);
    svpinn::write_metrics_csv(result.metrics, out_dir + "/metrics.csv");
    svpinn::save_checkpoint(result.params, out_dir + "/checkpoint.bin");

    json summary;
    summary["schema_version"] = kSummarySchemaVersion;
    summary["experiment"] = experiment;
    summary["method"] = method;
    summary["optimizer"] = optimizer;
    summary["steps_requested"] = steps;
    summary["steps_run"] = result.metrics.rows.empty() ? 0 : result.metrics.rows.back().step;
    summary["final_l2"] = result.final_l2;
    summary["best_l2"] = result.best_l2;
    summary["tau"] = result.metrics.tau_used;
    summary["tau_balanced"] = result.metrics.tau_was_balanced;
    summary["seed"] = seed;
    summary["linesearch_fallbacks"] = result.metrics.linesearch_fallbacks;
    summary["aborted_nonfinite"] = result.metrics.aborted_nonfinite;
    std::ofstream(out_dir + "/summary.json") << summary.dump(2) << "\n";

    std::cout << experiment << " " << method << "(" << optimizer << "): final L2 rel err "
              << result.final_l2 << " after " << summary["steps_run"] << " steps\n";
    return 0;
}

int cmd_verify(const std::string& study, const std::string& out_dir, bool quick) {
    std::vector<svpinn::StudyReport> reports;
    if (study == "equivalence") {
        const int trials = quick ? 500 : 1000;
        for (int d = 1; d <= 3; ++d)
            for (double tau : {0.1, 1.0, 10.0}) {
                auto r = svpinn::study_equivalence(d, d == 1 ? 64 : 100, trials, tau);
                r.name += "_tau" + std::to_string(tau).substr(0, 4);
                reports.push_back(std::move(r));
            }
    } else if (study == "trapezoid") {
        reports.push_back(svpinn::study_trapezoid(1));
        reports.push_back(svpinn::study_trapezoid(2));
    } else if (study == "eigen") {
        reports.push_back(svpinn::study_eigen_convergence(1));
        reports.push_back(svpinn::study_eigen_convergence(2));
    } else if (study == "estimator-decay") {
        reports.push_back(svpinn::study_estimator_decay(1, 20240502, quick));
        reports.push_back(svpinn::study_estimator_decay(2, 20240502, quick));
    } else if (study == "regularity") {
        reports.push_back(svpinn::study_regularity(2));
    } else if (study == "comparison") {
        // Light desk cell; the acceptance suite runs the pinned ones.
        svpinn::ProblemSpec problem = svpinn::make_problem("exp1", {{"a", "1"}, {"n", "255"}});
        svpinn::TrainConfig base;
        base.width = 32;
        base.hidden = 2;
        base.feature_count = 64;
        base.batch_rows = 2000;
        base.tau = 0.1;
        base.init_scale = 0.25;
        base.l2_every = 10;
        const svpinn::ComparisonReport rep =
            svpinn::study_comparison(problem, base, quick ? 80 : 200);
        rep.write_outputs(out_dir);
        for (const auto& c : rep.cells)
            std::cout << c.method << "(" << c.optimizer << "): final L2 " << c.final_l2
                      << ", steps to 1% " << c.steps_to_1pct << "\n";
        return 0;
    } else {
        std::cerr << "unknown study '" << study
                  << "' (expected equivalence|trapezoid|eigen|estimator-decay|regularity|comparison)\n";
        return 2;
    }

    bool all_pass = true;
    for (const auto& r : reports) {
        r.write_outputs(out_dir);
        // Slope assertions are skipped in quick mode; containment ones are not.
        const bool counted = !quick || study == "equivalence" || study == "regularity";
        if (counted) all_pass = all_pass && r.pass;
        std::cout << (r.pass ? "[pass] " : "[FAIL] ") << r.name << "\n";
    }
    return all_pass ? 0 : 1;
}

struct RunSummary {
    std::string experiment, method, optimizer;
    double final_l2 = 0.0;
    int steps_to_1pct = -1;
    double wall_s = 0.0;
};

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_path) {
    std::vector<RunSummary> runs;
    for (const auto& dir : run_dirs) {
        std::ifstream in(dir + "/summary.json");
        if (!in) {
            std::cerr << "missing summary.json in " << dir << "\n";
            return 2;
        }
        json j;
        in >> j;
        RunSummary r;
        r.experiment = j["experiment"];
        r.method = j["method"];
        r.optimizer = j["optimizer"];
        r.final_l2 = j["final_l2"];
        const svpinn::RunMetrics m = svpinn::read_metrics_csv(dir + "/metrics.csv");
        r.steps_to_1pct = svpinn::steps_to_threshold(m, 0.01);
        r.wall_s = m.rows.empty() ? 0.0 : m.rows.back().wall_s;
        runs.push_back(r);
    }

    // Group identical (experiment, method, optimizer) cells; mean and std
    // over repetitions, std omitted for single runs.
    std::ostringstream table;
    table << "experiment,method,optimizer,reps,final_l2_mean,final_l2_std,steps_to_1pct_mean,"
             "steps_to_1pct_std,wall_s_mean\n";
    std::vector<bool> used(runs.size(), false);
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (used[i]) continue;
        std::vector<const RunSummary*> group;
        for (std::size_t k = i; k < runs.size(); ++k) {
            if (!used[k] && runs[k].experiment == runs[i].experiment &&
                runs[k].method == runs[i].method && runs[k].optimizer == runs[i].optimizer) {
                group.push_back(&runs[k]);
                used[k] = true;
            }
        }
        auto mean_std = [&group](auto getter) {
            double m = 0.0, s = 0.0;
            int cnt = 0;
            for (const auto* r : group) {
                const double v = getter(*r);
                if (v >= 0) {
                    m += v;
                    ++cnt;
                }
            }
            if (cnt == 0) return std::pair{-1.0, -1.0};
            m /= cnt;
            if (cnt > 1) {
                for (const auto* r : group) {
                    const double v = getter(*r);
                    if (v >= 0) s += (v - m) * (v - m);
                }
                s = std::sqrt(s / (cnt - 1));
            } else {
                s = -1.0;
            }
            return std::pair{m, s};
        };
        const auto [l2m, l2s] = mean_std([](const RunSummary& r) { return r.final_l2; });
        const auto [stm, sts] =
            mean_std([](const RunSummary& r) { return static_cast<double>(r.steps_to_1pct); });
        const auto [wm, ws] = mean_std([](const RunSummary& r) { return r.wall_s; });
        (void)ws;
        table << runs[i].experiment << ',' << runs[i].method << ',' << runs[i].optimizer << ','
              << group.size() << ',' << l2m << ',';
        if (l2s >= 0) table << l2s;
        table << ',';
        if (stm >= 0) table << stm;
        table << ',';
        if (sts >= 0) table << sts;
        table << ',' << wm << '\n';
    }
    if (out_path.empty()) {
        std::cout << table.str();
    } else {
        std::ofstream(out_path) << table.str();
        std::cout << "wrote " << out_path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic weak-norm elliptic PDE solver"};
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--threads", threads, "OpenMP thread count (0 = library default)");

    // sample
    auto* sample = app.add_subcommand("sample", "Sample a test-function batch to a binary file");
    int s_d = 1, s_n = 63;
    double s_tau = 1.0;
    std::size_t s_count = 100;
    std::uint64_t s_seed = 1;
    std::string s_out = "batch.bin";
    sample->add_option("--d", s_d, "dimension (1-3)")->check(CLI::Range(1, 3));
    sample->add_option("--n", s_n, "interior nodes per axis")->check(CLI::PositiveNumber);
    sample->add_option("--tau", s_tau, "scale")->check(CLI::PositiveNumber);
    sample->add_option("--count", s_count, "number of rows");
    sample->add_option("--seed", s_seed, "RNG seed");
    sample->add_option("--out", s_out, "output path");

    // train
    auto* train = app.add_subcommand("train", "Train one (method, optimizer, experiment) cell");
    std::string t_exp = "exp1", t_method = "svpinn", t_opt = "lbfgs", t_config, t_out = "run";
    std::vector<std::string> t_params;
    int t_steps = 200;
    std::uint64_t t_seed = 1;
    train->add_option("--experiment", t_exp, "exp1..exp6")->required();
    train->add_option("--param", t_params, "problem parameters, key=value");
    train->add_option("--method", t_method)->check(CLI::IsMember({"pinn", "svpinn"}));
    train->add_option("--optimizer", t_opt)->check(CLI::IsMember({"gd", "lbfgs"}));
    train->add_option("--steps", t_steps)->check(CLI::PositiveNumber);
    train->add_option("--seed", t_seed);
    train->add_option("--config", t_config, "JSON config file");
    train->add_option("--out-dir", t_out, "run output directory");

    // verify
    auto* verify = app.add_subcommand("verify", "Run a named verification study");
    std::string v_study, v_out = "verify_out";
    bool v_quick = false;
    verify->add_option("--study", v_study, "equivalence|trapezoid|eigen|estimator-decay|regularity|comparison")
        ->required();
    verify->add_option("--out-dir", v_out);
    verify->add_flag("--quick", v_quick, "halve repetitions; slope assertions not enforced");

    // report
    auto* report = app.add_subcommand("report", "Aggregate run directories into a table");
    std::vector<std::string> r_dirs;
    std::string r_out;
    report->add_option("--run", r_dirs, "run directory (repeatable)")->required();
    report->add_option("--out", r_out, "output CSV (stdout when omitted)");

    CLI11_PARSE(app, argc, argv);
    if (threads > 0) omp_set_num_threads(threads);

    try {
        if (sample->parsed()) return cmd_sample(s_d, s_n, s_tau, s_count, s_seed, s_out);
        if (train->parsed())
            return cmd_train(t_exp, t_params, t_method, t_opt, t_steps,
                             train->count("--steps") > 0, t_seed, t_config, t_out);
        if (verify->parsed()) return cmd_verify(v_study, v_out, v_quick);
        if (report->parsed()) return cmd_report(r_dirs, r_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
