#pragma once

#include "oomp/datasource.hpp"
#include "oomp/driver.hpp"
#include "oomp/model.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace oomp {

/// beta*_q = (1 / sqrt(s)) (1 - (q - 1) / s)^gamma for q = 1..s.
struct DecayScheme {
    double gamma = 0.0;
    int s_star = 5;

    std::vector<double> coefficients() const;
};

struct ExperimentConfig {
    CovarianceSpec design;
    std::vector<int> dims{8, 16, 32, 64, 128, 256, 512};
    int s_star = 5;
    std::vector<double> coefficients{1.2, 1.1, 1.0, 0.9, 0.8};
    std::optional<DecayScheme> decay;  ///< replaces coefficients when set
    double eta = 0.5;
    double delta = 0.1;
    int trials = 5;
    std::uint64_t seed = 1;
    AccessMode setting = AccessMode::Stream;
    double c_T = 0.01;
    std::optional<std::uint64_t> budget;
    std::optional<double> wall_seconds;  ///< per trial
    bool shrink_halfwidth = true;        ///< lower B until ||beta*||_1 M + eta <= 1
    std::string output_path = "results.csv";
};

void validate(const ExperimentConfig& cfg);

/// Reads the keys of to_json(); "cov": {...} and "cov.kind"-style flat keys are
/// accepted for the design. Unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Coefficients in use (decay scheme or explicit list), length s_star.
std::vector<double> trial_coefficients(const ExperimentConfig& cfg);

/// Largest B <= the configured one that keeps the model bound.
double admissible_halfwidth(const ExperimentConfig& cfg, int d);

std::uint64_t trial_seed(std::uint64_t seed, int d, int trial);

/// Support drawn uniformly from [d], coefficients shuffled onto it.
ModelSpec build_trial_model(const ExperimentConfig& cfg, int d, int trial);

struct ResultRow {
    int d = 0;
    int trial = 0;
    bool recovered = false;
    std::uint64_t c_oomp_tryselect = 0;
    std::uint64_t c_oomp_optim = 0;
    std::uint64_t c_omp_tryselect = 0;
    std::uint64_t c_omp_optim = 0;
    double log2_ratio_tryselect = 0.0;
    double log2_ratio_optim = 0.0;
};

struct TrialResult {
    ResultRow row;
    RunResult run;
    IndexSet true_support;
    std::uint64_t n_omp = 0;
};

TrialResult run_trial(const ExperimentConfig& cfg, int d, int trial);

/// Rows ordered by (d, trial). Progress lines go to `log` when given.
std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg, std::ostream* log = nullptr);

struct DimSummary {
    int d = 0;
    int trials = 0;
    int recovered = 0;
    double mean_c_oomp_tryselect = 0.0;
    double mean_c_oomp_optim = 0.0;
    double mean_c_omp_tryselect = 0.0;
    double mean_c_omp_optim = 0.0;
    double mean_log2_ratio_tryselect = 0.0;
    double mean_log2_ratio_optim = 0.0;
    double log2_mean_ratio_tryselect = 0.0;  ///< log2 of mean OOMP cost over mean OMP cost
    double log2_mean_ratio_optim = 0.0;
};

std::vector<DimSummary> summarize(const std::vector<ResultRow>& rows);

extern const char* const kCsvHeader;

std::string rows_to_csv(const std::vector<ResultRow>& rows);
nlohmann::json summary_json(const std::vector<ResultRow>& rows, const ExperimentConfig& cfg);

/// Path of the JSON summary written next to a CSV path.
std::filesystem::path summary_path(const std::filesystem::path& csv_path);

/// Writes the CSV to `path` and the summary to summary_path(path).
void emit(const std::vector<ResultRow>& rows, const ExperimentConfig& cfg, const std::filesystem::path& path);

}  // namespace oomp
