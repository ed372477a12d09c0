#include "oomp/driver.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace oomp {

SelectConfig make_select_config(const ModelSpec& model, const PopulationOracle& oracle, AccessMode setting,
                                double iteration_scale) {
    SelectConfig cfg;
    cfg.setting = setting;
    cfg.optim.rho = oracle.rho;
    cfg.optim.M = model.M();
    cfg.optim.iteration_scale = iteration_scale;
    cfg.L = oracle.L;
    cfg.mu_star = oracle.mu_star;
    return cfg;
}

void validate(const SelectConfig& cfg) {
    if (!(cfg.xi0 > 0.0)) throw std::invalid_argument("select: xi0 must be positive");
    validate(cfg.optim);
    if (!(cfg.L > 0.0)) throw std::invalid_argument("select: L must be positive");
    if (!(cfg.mu_star >= 0.0 && cfg.mu_star < 1.0)) throw std::invalid_argument("select: mu_star must lie in [0, 1)");
    if (cfg.wall_seconds && !(*cfg.wall_seconds > 0.0)) {
        throw std::invalid_argument("select: wall-clock cap must be positive");
    }
}

std::pair<double, double> round_parameters(double delta, double xi0, int q) {
    return {std::ldexp(delta, -q), std::ldexp(xi0, -2 * q)};
}

double step_confidence(double delta, int k) {
    const double kk = static_cast<double>(k);
    return delta / (2.0 * (kk + 1.0) * (kk + 2.0));
}

SelectOutcome select(const IndexSet& S, double delta, DataSource& src, const SelectConfig& cfg) {
    validate(cfg);
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("select: delta must lie in (0, 1)");

    TrySelectHooks hooks;
    hooks.trace = cfg.trace;
    SelectOutcome out;
    try {
        for (int q = 0;; ++q) {
            const auto [delta_q, xi_q] = round_parameters(delta, cfg.xi0, q);
            out.rounds = q + 1;
            src.begin_subroutine(kOptimLabel);
            const OptimResult fit = optim(S, delta_q, xi_q, src, cfg.optim);

            src.begin_subroutine(kTrySelectLabel);
            ConfParams params = make_conf_params(src.d(), delta_q, cfg.optim.M, cfg.L, cfg.optim.rho, cfg.mu_star,
                                                 fit.beta_tilde);
            params.log_scale = cfg.log_scale;
            const TrySelectOutcome pick = cfg.setting == AccessMode::Stream
                                              ? try_select_stream(S, fit.beta_tilde, xi_q, src, params, hooks)
                                              : try_select_db(S, fit.beta_tilde, xi_q, src, params, hooks);
            if (pick.success) {
                out.feature = pick.selected;
                return out;
            }
        }
    } catch (const BudgetExhausted&) {
        out.interrupted = true;
    }
    return out;
}

nlohmann::json RunResult::to_json() const {
    nlohmann::json steps = nlohmann::json::array();
    for (const StepRecord& s : ledger.per_k) {
        nlohmann::json step{{"k", s.k},
                            {"rounds", s.rounds},
                            {"delta", s.delta},
                            {"optim_cost", s.optim.cost},
                            {"tryselect_cost", s.tryselect.cost},
                            {"optim_queries", s.optim.new_calls + s.optim.old_calls},
                            {"tryselect_queries", s.tryselect.new_calls + s.tryselect.old_calls}};
        step["feature"] = s.feature ? nlohmann::json(*s.feature) : nlohmann::json(nullptr);
        steps.push_back(std::move(step));
    }
    return {{"S", S},
            {"interrupted", interrupted},
            {"per_step", steps},
            {"ledger",
             {{"c_optim", ledger.c_optim},
              {"c_tryselect", ledger.c_tryselect},
              {"total_cost", source_total.cost},
              {"new_calls", source_total.new_calls},
              {"old_calls", source_total.old_calls}}}};
}

RunResult run_oomp(double delta, std::optional<int> s_star, DataSource& src, const SelectConfig& cfg) {
    validate(cfg);
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("run_oomp: delta must lie in (0, 1)");
    if (s_star && (*s_star < 0 || *s_star > src.d())) throw std::invalid_argument("run_oomp: s_star out of range");

    if (cfg.budget) src.set_budget(src.ledger().total().cost + *cfg.budget);
    if (cfg.wall_seconds) {
        const auto span = std::chrono::duration<double>(*cfg.wall_seconds);
        src.set_deadline(std::chrono::steady_clock::now() +
                         std::chrono::duration_cast<std::chrono::steady_clock::duration>(span));
    }

    RunResult run;
    const int limit = s_star ? *s_star : src.d();
    while (static_cast<int>(run.S.size()) < limit) {
        const int k = static_cast<int>(run.S.size());
        StepRecord step;
        step.k = k;
        step.delta = step_confidence(delta, k);
        const QueryCounts optim_before = src.ledger().of(kOptimLabel);
        const QueryCounts try_before = src.ledger().of(kTrySelectLabel);

        const SelectOutcome pick = select(run.S, step.delta, src, cfg);

        step.feature = pick.feature;
        step.rounds = pick.rounds;
        step.optim = src.ledger().of(kOptimLabel) - optim_before;
        step.tryselect = src.ledger().of(kTrySelectLabel) - try_before;
        run.ledger.c_optim += step.optim.cost;
        run.ledger.c_tryselect += step.tryselect.cost;
        run.ledger.per_k.push_back(step);
        if (pick.interrupted) {
            run.interrupted = true;
            break;
        }
        run.S.push_back(*pick.feature);
    }
    run.source_total = src.ledger().total();
    if (cfg.budget) src.set_budget(std::nullopt);
    src.set_deadline(std::nullopt);
    return run;
}

}  // namespace oomp
