#include "oomp/experiments.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <sstream>

namespace {

std::vector<int> parse_dims(const std::string& text) {
    std::vector<int> dims;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) dims.push_back(std::stoi(item));
    }
    return dims;
}

struct Overrides {
    std::string config;
    std::string design;
    std::string dims;
    std::optional<int> trials;
    std::optional<std::uint64_t> seed;
    std::string setting;
    std::optional<double> ct;
    std::optional<std::uint64_t> budget;
    std::optional<double> wall;
    std::optional<double> phi;
    std::optional<double> gamma;
    std::string out;
};

void add_common(CLI::App* app, Overrides& o) {
    app->add_option("--config", o.config, "JSON config file; flags override its keys");
    app->add_option("--design", o.design, "diagonal or toeplitz");
    app->add_option("--setting", o.setting, "stream or db");
    app->add_option("--seed", o.seed, "master seed");
    app->add_option("--ct", o.ct, "scale of the optimizer iteration count");
    app->add_option("--budget", o.budget, "query cost cap per run");
    app->add_option("--wall", o.wall, "wall-clock cap per run, seconds");
    app->add_option("--phi", o.phi, "Toeplitz decay base");
    app->add_option("--gamma", o.gamma, "use decaying coefficients with this exponent");
}

oomp::ExperimentConfig resolve(const Overrides& o) {
    oomp::ExperimentConfig cfg = o.config.empty() ? oomp::ExperimentConfig{} : oomp::load_config(o.config);
    if (!o.design.empty()) cfg.design.kind = oomp::parse_covariance_kind(o.design);
    if (!o.dims.empty()) cfg.dims = parse_dims(o.dims);
    if (o.trials) cfg.trials = *o.trials;
    if (o.seed) cfg.seed = *o.seed;
    if (!o.setting.empty()) cfg.setting = oomp::parse_access_mode(o.setting);
    if (o.ct) cfg.c_T = *o.ct;
    if (o.budget) cfg.budget = *o.budget;
    if (o.wall) cfg.wall_seconds = *o.wall;
    if (o.phi) cfg.design.phi = *o.phi;
    if (o.gamma) cfg.decay = oomp::DecayScheme{*o.gamma, cfg.s_star};
    if (!o.out.empty()) cfg.output_path = o.out;
    return cfg;
}

int run_single(const oomp::ExperimentConfig& cfg, int d, int trial) {
    oomp::ExperimentConfig local = cfg;
    local.dims = {d};
    oomp::validate(local);
    const oomp::TrialResult r = oomp::run_trial(local, d, trial);
    nlohmann::json out = r.run.to_json();
    out["d"] = d;
    out["trial"] = trial;
    out["true_support"] = r.true_support;
    out["recovered"] = r.row.recovered;
    out["n_omp"] = r.n_omp;
    out["log2_ratio_tryselect"] = r.row.log2_ratio_tryselect;
    out["log2_ratio_optim"] = r.row.log2_ratio_optim;
    std::cout << out.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online orthogonal matching pursuit experiments"};
    app.require_subcommand(1);

    Overrides sweep_opts;
    CLI::App* sweep = app.add_subcommand("sweep", "run a dimension sweep and write CSV plus JSON summary");
    add_common(sweep, sweep_opts);
    sweep->add_option("--dims", sweep_opts.dims, "comma-separated dimensions, e.g. 8,16,32");
    sweep->add_option("--trials", sweep_opts.trials, "trials per dimension");
    sweep->add_option("--out", sweep_opts.out, "CSV output path");
    bool quiet = false;
    sweep->add_flag("--quiet", quiet, "no per-trial progress lines");

    Overrides run_opts;
    int run_d = 64;
    int run_trial_id = 0;
    CLI::App* run = app.add_subcommand("run", "run one trial and print its result as JSON");
    add_common(run, run_opts);
    run->add_option("--d", run_d, "dimension");
    run->add_option("--trial", run_trial_id, "trial index (selects the support draw)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sweep->parsed()) {
            const oomp::ExperimentConfig cfg = resolve(sweep_opts);
            const auto rows = oomp::run_sweep(cfg, quiet ? nullptr : &std::cerr);
            oomp::emit(rows, cfg, cfg.output_path);
            std::cerr << "wrote " << cfg.output_path << " and " << oomp::summary_path(cfg.output_path).string()
                      << '\n';
            return 0;
        }
        const oomp::ExperimentConfig cfg = resolve(run_opts);
        return run_single(cfg, run_d, run_trial_id);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
