#pragma once

#include "oomp/datasource.hpp"
#include "oomp/model.hpp"
#include "oomp/optim.hpp"
#include "oomp/tryselect.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace oomp {

inline constexpr const char* kOptimLabel = "optim";
inline constexpr const char* kTrySelectLabel = "tryselect";

struct SelectConfig {
    double xi0 = 1.0;
    AccessMode setting = AccessMode::Stream;
    OptimConfig optim;  ///< carries rho and M
    double L = 0.0;
    double mu_star = 0.0;
    double log_scale = 8.0;
    std::optional<std::uint64_t> budget;  ///< ledger cost cap for a whole run
    std::optional<double> wall_seconds;   ///< optional second guard
    std::ostream* trace = nullptr;        ///< Try-Select trace lines
};

/// rho, L, mu* and M from the population quantities of the model.
SelectConfig make_select_config(const ModelSpec& model, const PopulationOracle& oracle, AccessMode setting,
                                double iteration_scale);
void validate(const SelectConfig& cfg);

/// (delta / 2^q, xi0 / 4^q)
std::pair<double, double> round_parameters(double delta, double xi0, int q);

/// delta / (2 (k + 1) (k + 2)), the confidence handed to the selection of step k.
double step_confidence(double delta, int k);

struct SelectOutcome {
    std::optional<int> feature;
    int rounds = 0;  ///< Optim / Try-Select pairs started
    bool interrupted = false;
};

/// Doubling loop: Optim then Try-Select with (delta, xi) halved and quartered
/// after every failed attempt, until a success or the budget runs out.
SelectOutcome select(const IndexSet& S, double delta, DataSource& src, const SelectConfig& cfg);

struct StepRecord {
    int k = 0;                    ///< |S| when the step started
    std::optional<int> feature;   ///< absent for an interrupted step
    int rounds = 0;
    double delta = 0.0;
    QueryCounts optim;
    QueryCounts tryselect;
};

struct ComplexityLedger {
    std::uint64_t c_optim = 0;
    std::uint64_t c_tryselect = 0;
    std::vector<StepRecord> per_k;

    std::uint64_t total() const noexcept { return c_optim + c_tryselect; }
};

struct RunResult {
    IndexSet S;  ///< in selection order
    bool interrupted = false;
    ComplexityLedger ledger;
    QueryCounts source_total;  ///< the source ledger total at the end of the run

    nlohmann::json to_json() const;
};

/// Greedy online selection until s_star features are chosen (or, without s_star,
/// until the budget interrupts or every feature is in S).
RunResult run_oomp(double delta, std::optional<int> s_star, DataSource& src, const SelectConfig& cfg);

}  // namespace oomp
