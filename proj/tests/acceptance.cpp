// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//
//   acceptance [--skip-sweep] [--sweep-out PATH]
//
// --skip-sweep drops criteria 1 and 2 (the full dimension sweep, ~40 minutes on
// one core); they are then reported as SKIP and do not count as failures.

#include "oomp/baseline.hpp"
#include "oomp/driver.hpp"
#include "oomp/experiments.hpp"
#include "oomp/optim.hpp"
#include "oomp/random.hpp"
#include "oomp/tryselect.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace oomp;

namespace {

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
    std::printf("criterion %d: %s %s (%s)\n", id, pass ? "PASS" : "FAIL", name, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string format(const char* fmt, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    return buf;
}

std::vector<IndexSet> subsets(const IndexSet& s) {
    std::vector<IndexSet> out;
    for (unsigned mask = 0; mask < (1u << s.size()); ++mask) {
        IndexSet sub;
        for (std::size_t a = 0; a < s.size(); ++a) {
            if (mask & (1u << a)) sub.push_back(s[a]);
        }
        out.push_back(sub);
    }
    return out;
}

struct Instance {
    std::shared_ptr<const ModelSpec> model;
    PopulationOracle oracle;
};

// Random model with d <= 32, mixed designs, and mu* < 1.
Instance random_instance(std::mt19937_64& rng) {
    for (;;) {
        const int d = std::uniform_int_distribution<int>(4, 32)(rng);
        const int s = std::uniform_int_distribution<int>(1, std::min(5, d - 1))(rng);
        std::vector<int> all(d);
        std::iota(all.begin(), all.end(), 0);
        IndexSet support;
        std::sample(all.begin(), all.end(), std::back_inserter(support), s, rng);
        std::vector<double> coefs(s);
        std::uniform_real_distribution<double> mag(0.2, 2.0);
        for (double& b : coefs) b = (rng() & 1 ? 1.0 : -1.0) * mag(rng);

        CovarianceSpec cov;
        if (rng() & 1) {
            cov.kind = CovarianceKind::ToeplitzPowerDecay;
            cov.phi = std::uniform_real_distribution<double>(0.0, 0.8)(rng);
        }
        cov.halfwidth = 1.0;
        const double row_l1 = ModelSpec::create(d, {}, {}, cov, 0.0).M();
        double l1 = 0.0;
        for (double b : coefs) l1 += std::abs(b);
        const double eta = 0.3;
        cov.halfwidth = (1.0 - eta) / (l1 * row_l1);

        auto model = std::make_shared<const ModelSpec>(ModelSpec::create(d, support, coefs, cov, eta));
        PopulationOracle oracle = build_oracle(*model);
        if (oracle.mu_star < 1.0) return {model, std::move(oracle)};
    }
}

// 1 and 2 share one run of the default Diagonal sweep.
void sweep_criteria(const std::filesystem::path& out) {
    ExperimentConfig cfg;
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<ResultRow> rows = run_sweep(cfg, nullptr);
    const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
    emit(rows, cfg, out);

    int total = 0, recovered = 0;
    for (const ResultRow& r : rows) {
        if (r.d == 8 || r.d == 64) {
            ++total;
            recovered += r.recovered ? 1 : 0;
        }
    }
    report(1, "support recovery at d = 8 and 64", total == 10 && recovered == total,
           format("%d/%d trials recovered", recovered, total));

    const std::vector<DimSummary> s = summarize(rows);
    int nonincreasing = 0;
    std::string curve;
    for (std::size_t a = 0; a < s.size(); ++a) {
        curve += format("%s%d:%.3f", a ? " " : "", s[a].d, s[a].mean_log2_ratio_tryselect);
        if (a > 0 && s[a].mean_log2_ratio_tryselect <= s[a - 1].mean_log2_ratio_tryselect) ++nonincreasing;
    }
    int all_recovered = 0;
    for (const ResultRow& r : rows) all_recovered += r.recovered ? 1 : 0;
    const bool trend = s.size() == 7 && nonincreasing >= 5 &&
                       s.back().mean_log2_ratio_tryselect < s.front().mean_log2_ratio_tryselect;
    report(2, "Try-Select complexity ratio trend", trend,
           format("%d/6 nonincreasing steps; %s; %d/%zu recovered; %.1f min", nonincreasing, curve.c_str(),
                  all_recovered, rows.size(), minutes));
}

// 3 and 4 share the random instance suite.
void population_criteria() {
    std::mt19937_64 rng(2024);
    int incoherence_violations = 0, nonzero_on_s = 0, lower_bound_violations = 0, checks = 0;
    double worst_slack = 1.0, worst_ratio = INFINITY;
    for (int inst = 0; inst < 100; ++inst) {
        const Instance in = random_instance(rng);
        const PopulationOracle& o = in.oracle;
        const IndexSet& star = o.support;
        const int s = static_cast<int>(star.size());
        for (const IndexSet& S : subsets(star)) {
            const Eigen::VectorXd Z = population_Z(o, S);
            for (int i : S) nonzero_on_s += std::abs(Z(i)) < 1e-10 ? 0 : 1;
            if (static_cast<int>(S.size()) == s) continue;
            ++checks;

            double in_max = 0.0, out_max = 0.0, rest_sq = 0.0, off_s_max = 0.0;
            for (int i = 0; i < o.d(); ++i) {
                const bool in_S = std::find(S.begin(), S.end(), i) != S.end();
                if (in_S) continue;
                off_s_max = std::max(off_s_max, std::abs(Z(i)));
                if (std::find(star.begin(), star.end(), i) != star.end()) {
                    in_max = std::max(in_max, std::abs(Z(i)));
                    rest_sq += o.beta_star(i) * o.beta_star(i);
                } else {
                    out_max = std::max(out_max, std::abs(Z(i)));
                }
            }
            const double rhs = o.mu_star * in_max;
            const double slack = in_max > 0.0 ? (rhs - out_max) / in_max : 0.0;
            worst_slack = std::min(worst_slack, slack);
            if (slack < -1e-9) ++incoherence_violations;

            const double k = static_cast<double>(S.size());
            const double bound = std::sqrt(o.rho * o.rho * o.rho / o.L) / std::sqrt(s - k) * std::sqrt(rest_sq);
            worst_ratio = std::min(worst_ratio, off_s_max / bound);
            if (off_s_max < bound * (1.0 - 1e-9)) ++lower_bound_violations;
        }
    }
    report(3, "incoherence of population correlations", incoherence_violations == 0 && nonzero_on_s == 0,
           format("%d proper subsets, %d violations, %d nonzero on S, worst relative slack %.3g", checks,
                  incoherence_violations, nonzero_on_s, worst_slack));
    report(4, "lower bound on the largest correlation", lower_bound_violations == 0,
           format("%d proper subsets, %d violations, smallest max|Z| / bound %.3g", checks, lower_bound_violations,
                  worst_ratio));
}

void coverage_criterion() {
    auto model = std::make_shared<const ModelSpec>(
        ModelSpec::create(16, {2, 5, 11}, {1.2, 1.0, 0.8}, {}, 0.5));
    const PopulationOracle o = build_oracle(*model);
    const IndexSet S{2};
    const double delta = 0.1;
    const double xi = 1e-4;
    const Eigen::VectorXd Z = population_Z(o, S);
    Eigen::VectorXd beta_tilde = population_beta(o, S);
    beta_tilde(0) += std::sqrt(0.5 * xi / o.sigma(2, 2));
    const double gap = risk_gap(o, S, beta_tilde);
    const ConfParams params = make_conf_params(16, delta, model->M(), o.L, o.rho, o.mu_star, beta_tilde);
    const double shift = model->M() * std::sqrt(xi);

    int runs = 0, violated_runs = 0;
    std::uint64_t updates = 0;
    for (AccessMode mode : {AccessMode::Stream, AccessMode::Database}) {
        for (int run = 0; run < 100; ++run) {
            DataSource src(model, mode, 5000 + run);
            src.begin_subroutine(kTrySelectLabel);
            bool violated = false;
            TrySelectHooks hooks;
            hooks.on_update = [&](int i, const ArmState& arm) {
                if (arm.n < 2) return;
                ++updates;
                if (std::abs(arm.z_mean - Z(i)) > 0.5 * arm.conf + shift) violated = true;
            };
            if (mode == AccessMode::Stream) {
                try_select_stream(S, beta_tilde, xi, src, params, hooks);
            } else {
                try_select_db(S, beta_tilde, xi, src, params, hooks);
            }
            ++runs;
            violated_runs += violated ? 1 : 0;
        }
    }
    const double freq = static_cast<double>(violated_runs) / runs;
    report(5, "empirical Bernstein coverage", gap <= xi && freq <= delta + 0.05,
           format("%d runs (stream and database), %llu arm updates, violation frequency %.3f, risk gap %.3g",
                  runs, static_cast<unsigned long long>(updates), freq, gap));
}

void optim_criterion() {
    auto model = std::make_shared<const ModelSpec>(
        ModelSpec::create(8, {1, 4, 6}, {1.2, 1.0, 0.8}, {}, 0.5));
    const PopulationOracle o = build_oracle(*model);
    const IndexSet S{1, 6};
    const double delta = 0.1, xi = 1e-3;
    OptimConfig cfg;
    cfg.rho = o.rho;
    cfg.M = model->M();
    cfg.iteration_scale = 1.0;
    cfg.max_T = 1'000'000;

    int fails = 0;
    double worst = 0.0;
    std::uint64_t T = 0;
    for (int run = 0; run < 200; ++run) {
        DataSource src(model, AccessMode::Stream, 9000 + run);
        src.begin_subroutine(kOptimLabel);
        const OptimResult r = optim(S, delta, xi, src, cfg);
        T = r.T_used;
        const double gap = risk_gap(o, S, r.beta_tilde);
        worst = std::max(worst, gap);
        fails += gap > xi ? 1 : 0;
    }
    const double freq = fails / 200.0;
    report(6, "optimization confidence", freq <= 0.15,
           format("200 runs, T = %llu (prescribed %llu), failure frequency %.3f, worst gap %.3g",
                  static_cast<unsigned long long>(T),
                  static_cast<unsigned long long>(iteration_count(2, delta, xi, OptimConfig{cfg.rho, cfg.M})), freq,
                  worst));
}

void batch_omp_criterion() {
    ExperimentConfig cfg;
    int hits = 0;
    std::uint64_t n = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const ModelSpec model = build_trial_model(cfg, 32, trial);
        const PopulationOracle o = build_oracle(model);
        double beta_min = INFINITY;
        for (double b : model.coefficients()) beta_min = std::min(beta_min, std::abs(b));
        n = n_omp(cfg.eta, 32, cfg.delta, o.mu_star, o.rho, beta_min);
        const MomentData m = sample_moments(model, n, mix64(trial_seed(cfg.seed, 32, trial) + 2));
        IndexSet S = omp(m, cfg.eta, cfg.s_star).S;
        std::sort(S.begin(), S.end());
        hits += S == model.support() ? 1 : 0;
    }
    report(7, "batch OMP at the prescribed sample size", hits >= 45,
           format("%d/50 recovered with n = %llu", hits, static_cast<unsigned long long>(n)));
}

void oracle_omp_criterion() {
    std::mt19937_64 rng(77);
    int fails = 0;
    for (int inst = 0; inst < 200; ++inst) {
        const Instance in = random_instance(rng);
        IndexSet S = oracle_omp(in.oracle, std::nullopt, in.oracle.mu_star);
        std::sort(S.begin(), S.end());
        fails += S == in.oracle.support ? 0 : 1;
    }
    report(8, "oracle OMP selects the support then halts", fails == 0, format("200 instances, %d failures", fails));
}

void structural_criterion() {
    std::mt19937_64 rng(31);
    std::vector<std::string> broken;

    // Welford against the pairwise-difference form of the sample variance.
    double worst_welford = 0.0;
    ConfParams params;
    params.d = 4;
    params.M = 1.0;
    params.L = 1.0;
    params.rho = 1.0;
    params.B_tilde = 1.0;
    for (int stream = 0; stream < 200; ++stream) {
        const int n = std::uniform_int_distribution<int>(2, 1000)(rng);
        const double offset = std::uniform_real_distribution<double>(-1e3, 1e3)(rng);
        std::vector<double> xs(n);
        ArmState arm;
        for (double& x : xs) {
            x = offset + std::normal_distribution<double>(0.0, 1.0)(rng);
            arm = update_arm(arm, x, params);
        }
        double pair_sum = 0.0;
        for (int a = 0; a < n; ++a) {
            for (int b = a + 1; b < n; ++b) pair_sum += (xs[a] - xs[b]) * (xs[a] - xs[b]);
        }
        const double pairwise = pair_sum / (static_cast<double>(n) * (n - 1));
        worst_welford = std::max(worst_welford, std::abs(arm.variance() - pairwise) / pairwise);
    }
    if (worst_welford > 1e-9) broken.push_back("welford");

    // PriorityIndex against a linear scan.
    int index_mismatches = 0;
    for (int seq = 0; seq < 50; ++seq) {
        const int d = std::uniform_int_distribution<int>(1, 64)(rng);
        PriorityIndex index(d);
        std::vector<double> keys(d, -1.0);
        for (int op = 0; op < 2000; ++op) {
            const int f = std::uniform_int_distribution<int>(0, d - 1)(rng);
            const double key = std::floor(std::uniform_real_distribution<double>(0.0, 20.0)(rng)) / 4.0;
            if (rng() % 5 == 0) {
                if (keys[f] >= 0.0) index.erase(f);
                keys[f] = -1.0;
            } else if (keys[f] >= 0.0) {
                index.update(f, key);
                keys[f] = key;
            } else {
                index.insert(f, key);
                keys[f] = key;
            }
            int best = -1;
            for (int i = 0; i < d; ++i) {
                if (keys[i] >= 0.0 && (best < 0 || keys[i] > keys[best])) best = i;
            }
            if (best < 0 ? !index.empty() : index.empty() || index.top() != best) ++index_mismatches;
        }
    }
    if (index_mismatches > 0) broken.push_back("priority index");

    // Ledger additivity in both settings.
    auto model = std::make_shared<const ModelSpec>(ModelSpec::create(16, {3, 9}, {5.0, 4.0}, {}, 0.1));
    for (AccessMode mode : {AccessMode::Stream, AccessMode::Database}) {
        DataSource src(model, mode, 3);
        const RunResult r = run_oomp(0.1, 2, src, make_select_config(*model, build_oracle(*model), mode, 0.01));
        std::uint64_t optim_sum = 0, try_sum = 0;
        for (const StepRecord& s : r.ledger.per_k) {
            optim_sum += s.optim.cost;
            try_sum += s.tryselect.cost;
        }
        const bool additive = r.ledger.total() == src.ledger().total().cost && optim_sum == r.ledger.c_optim &&
                              try_sum == r.ledger.c_tryselect &&
                              r.ledger.c_optim == src.ledger().of(kOptimLabel).cost &&
                              r.ledger.c_tryselect == src.ledger().of(kTrySelectLabel).cost;
        if (!additive) broken.push_back("ledger (" + to_string(mode) + ")");
    }

    // Seeded determinism of the emitted files.
    ExperimentConfig cfg;
    cfg.dims = {4, 6};
    cfg.s_star = 2;
    cfg.coefficients = {2.0, 1.5};
    cfg.eta = 0.2;
    cfg.trials = 2;
    cfg.c_T = 0.001;
    const auto dir = std::filesystem::temp_directory_path() / "oomp_acceptance";
    std::filesystem::remove_all(dir);
    emit(run_sweep(cfg), cfg, dir / "a.csv");
    emit(run_sweep(cfg), cfg, dir / "b.csv");
    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    };
    if (slurp(dir / "a.csv") != slurp(dir / "b.csv") || slurp(dir / "a.csv").empty()) broken.push_back("csv rerun");
    std::filesystem::remove_all(dir);

    std::string detail = format("welford worst relative error %.2g, %d index mismatches", worst_welford,
                                index_mismatches);
    for (const std::string& b : broken) detail += "; broken: " + b;
    report(9, "structural equivalences", broken.empty(), detail);
}

}  // namespace

int main(int argc, char** argv) {
    bool skip_sweep = false;
    std::filesystem::path sweep_out = "acceptance_sweep.csv";
    for (int a = 1; a < argc; ++a) {
        const std::string arg = argv[a];
        if (arg == "--skip-sweep") {
            skip_sweep = true;
        } else if (arg == "--sweep-out" && a + 1 < argc) {
            sweep_out = argv[++a];
        } else {
            std::fprintf(stderr, "usage: acceptance [--skip-sweep] [--sweep-out PATH]\n");
            return 2;
        }
    }

    try {
        population_criteria();
        coverage_criterion();
        optim_criterion();
        batch_omp_criterion();
        oracle_omp_criterion();
        structural_criterion();
        if (skip_sweep) {
            std::printf("criterion 1: SKIP support recovery at d = 8 and 64\n");
            std::printf("criterion 2: SKIP Try-Select complexity ratio trend\n");
        } else {
            sweep_criteria(sweep_out);
        }
    } catch (const std::exception& e) {
        std::printf("acceptance aborted: %s\n", e.what());
        return 1;
    }
    std::printf("%s: %d failing criteria\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
