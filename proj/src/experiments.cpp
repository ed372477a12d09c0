#include "oomp/experiments.hpp"

#include "oomp/baseline.hpp"
#include "oomp/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace oomp {

namespace {

constexpr double kBoundSlack = 1e-12;

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

double log2_ratio(std::uint64_t num, std::uint64_t den) {
    return std::log2(static_cast<double>(num) / static_cast<double>(den));
}

void apply_design(CovarianceSpec& cov, const nlohmann::json& j) {
    for (const auto& [key, value] : j.items()) {
        if (key == "kind") {
            cov.kind = parse_covariance_kind(value.get<std::string>());
        } else if (key == "phi") {
            cov.phi = value.get<double>();
        } else if (key == "halfwidth" || key == "B") {
            cov.halfwidth = value.get<double>();
        } else {
            throw std::invalid_argument("config: unknown design key '" + key + "'");
        }
    }
}

}  // namespace

std::vector<double> DecayScheme::coefficients() const {
    if (s_star < 1) throw std::invalid_argument("decay scheme: s_star must be positive");
    if (!(gamma >= 0.0)) throw std::invalid_argument("decay scheme: gamma must be nonnegative");
    const double s = static_cast<double>(s_star);
    std::vector<double> out(s_star);
    for (int q = 1; q <= s_star; ++q) out[q - 1] = std::pow(1.0 - (q - 1) / s, gamma) / std::sqrt(s);
    return out;
}

std::vector<double> trial_coefficients(const ExperimentConfig& cfg) {
    if (cfg.decay) {
        DecayScheme scheme = *cfg.decay;
        scheme.s_star = cfg.s_star;
        return scheme.coefficients();
    }
    return cfg.coefficients;
}

void validate(const ExperimentConfig& cfg) {
    if (cfg.dims.empty()) throw std::invalid_argument("config: dims must be non-empty");
    for (std::size_t a = 0; a < cfg.dims.size(); ++a) {
        if (cfg.dims[a] < 1) throw std::invalid_argument("config: dims must be positive");
        if (a > 0 && cfg.dims[a] <= cfg.dims[a - 1]) throw std::invalid_argument("config: dims must be increasing");
    }
    if (cfg.s_star < 1) throw std::invalid_argument("config: s_star must be positive");
    if (cfg.dims.front() < cfg.s_star) throw std::invalid_argument("config: every d must be at least s_star");
    if (cfg.trials < 1) throw std::invalid_argument("config: trials must be at least 1");
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw std::invalid_argument("config: delta must lie in (0, 1)");
    if (!(cfg.eta >= 0.0 && cfg.eta < 1.0)) throw std::invalid_argument("config: eta must lie in [0, 1)");
    if (!(cfg.c_T > 0.0)) throw std::invalid_argument("config: c_T must be positive");
    if (!(cfg.design.halfwidth > 0.0)) throw std::invalid_argument("config: B must be positive");
    if (cfg.design.kind == CovarianceKind::ToeplitzPowerDecay && !(cfg.design.phi >= 0.0 && cfg.design.phi < 1.0)) {
        throw std::invalid_argument("config: phi must lie in [0, 1)");
    }
    if (cfg.wall_seconds && !(*cfg.wall_seconds > 0.0)) {
        throw std::invalid_argument("config: wall_seconds must be positive");
    }
    const std::vector<double> coefs = trial_coefficients(cfg);
    if (static_cast<int>(coefs.size()) != cfg.s_star) {
        throw std::invalid_argument("config: " + std::to_string(coefs.size()) + " coefficients for s_star = " +
                                    std::to_string(cfg.s_star));
    }
    for (double b : coefs) {
        if (b == 0.0 || !std::isfinite(b)) throw std::invalid_argument("config: coefficients must be finite and nonzero");
    }
    if (!cfg.shrink_halfwidth) {
        for (int d : cfg.dims) {
            if (admissible_halfwidth(cfg, d) < cfg.design.halfwidth) {
                throw std::invalid_argument("config: B violates ||beta*||_1 M + eta <= 1 at d = " + std::to_string(d));
            }
        }
    }
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
    ExperimentConfig cfg;
    for (const auto& [key, value] : j.items()) {
        if (key == "design" || key == "cov") {
            if (value.is_string()) {
                cfg.design.kind = parse_covariance_kind(value.get<std::string>());
            } else {
                apply_design(cfg.design, value);
            }
        } else if (key.rfind("cov.", 0) == 0 || key.rfind("design.", 0) == 0) {
            apply_design(cfg.design, nlohmann::json{{key.substr(key.find('.') + 1), value}});
        } else if (key == "dims") {
            cfg.dims = value.get<std::vector<int>>();
        } else if (key == "s_star") {
            cfg.s_star = value.get<int>();
        } else if (key == "coefficients") {
            cfg.coefficients = value.get<std::vector<double>>();
        } else if (key == "decay") {
            if (value.is_null()) {
                cfg.decay.reset();
            } else {
                DecayScheme scheme;
                scheme.gamma = value.at("gamma").get<double>();
                cfg.decay = scheme;
            }
        } else if (key == "eta") {
            cfg.eta = value.get<double>();
        } else if (key == "delta") {
            cfg.delta = value.get<double>();
        } else if (key == "trials") {
            cfg.trials = value.get<int>();
        } else if (key == "seed") {
            cfg.seed = value.get<std::uint64_t>();
        } else if (key == "setting") {
            cfg.setting = parse_access_mode(value.get<std::string>());
        } else if (key == "c_T" || key == "ct") {
            cfg.c_T = value.get<double>();
        } else if (key == "budget") {
            cfg.budget = value.is_null() ? std::nullopt : std::optional<std::uint64_t>(value.get<std::uint64_t>());
        } else if (key == "wall_seconds") {
            cfg.wall_seconds = value.is_null() ? std::nullopt : std::optional<double>(value.get<double>());
        } else if (key == "shrink_halfwidth") {
            cfg.shrink_halfwidth = value.get<bool>();
        } else if (key == "out" || key == "output_path") {
            cfg.output_path = value.get<std::string>();
        } else {
            throw std::invalid_argument("config: unknown key '" + key + "'");
        }
    }
    if (cfg.decay) cfg.decay->s_star = cfg.s_star;
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("config " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
    nlohmann::json j{
        {"design", {{"kind", to_string(cfg.design.kind)}, {"phi", cfg.design.phi}, {"halfwidth", cfg.design.halfwidth}}},
        {"dims", cfg.dims},
        {"s_star", cfg.s_star},
        {"coefficients", cfg.coefficients},
        {"eta", cfg.eta},
        {"delta", cfg.delta},
        {"trials", cfg.trials},
        {"seed", cfg.seed},
        {"setting", to_string(cfg.setting)},
        {"c_T", cfg.c_T},
        {"shrink_halfwidth", cfg.shrink_halfwidth},
        {"out", cfg.output_path}};
    j["decay"] = cfg.decay ? nlohmann::json{{"gamma", cfg.decay->gamma}} : nlohmann::json(nullptr);
    j["budget"] = cfg.budget ? nlohmann::json(*cfg.budget) : nlohmann::json(nullptr);
    j["wall_seconds"] = cfg.wall_seconds ? nlohmann::json(*cfg.wall_seconds) : nlohmann::json(nullptr);
    return j;
}

double admissible_halfwidth(const ExperimentConfig& cfg, int d) {
    CovarianceSpec unit = cfg.design;
    unit.halfwidth = 1.0;
    const double row_l1 = ModelSpec::create(d, {}, {}, unit, 0.0).M();
    double l1 = 0.0;
    for (double b : trial_coefficients(cfg)) l1 += std::abs(b);
    if (l1 * row_l1 * cfg.design.halfwidth + cfg.eta <= 1.0 + kBoundSlack) return cfg.design.halfwidth;
    return (1.0 - cfg.eta) / (l1 * row_l1);
}

std::uint64_t trial_seed(std::uint64_t seed, int d, int trial) {
    return hash_combine(hash_combine(seed, static_cast<std::uint64_t>(d)), static_cast<std::uint64_t>(trial));
}

ModelSpec build_trial_model(const ExperimentConfig& cfg, int d, int trial) {
    std::mt19937_64 rng(trial_seed(cfg.seed, d, trial));
    std::vector<int> all(d);
    std::iota(all.begin(), all.end(), 0);
    std::vector<int> support;
    std::sample(all.begin(), all.end(), std::back_inserter(support), cfg.s_star, rng);
    std::vector<double> coefs = trial_coefficients(cfg);
    std::shuffle(coefs.begin(), coefs.end(), rng);

    CovarianceSpec cov = cfg.design;
    if (cfg.shrink_halfwidth) cov.halfwidth = admissible_halfwidth(cfg, d);
    return ModelSpec::create(d, support, coefs, cov, cfg.eta);
}

TrialResult run_trial(const ExperimentConfig& cfg, int d, int trial) {
    auto model = std::make_shared<const ModelSpec>(build_trial_model(cfg, d, trial));
    const PopulationOracle oracle = build_oracle(*model);

    SelectConfig sel = make_select_config(*model, oracle, cfg.setting, cfg.c_T);
    sel.budget = cfg.budget;
    sel.wall_seconds = cfg.wall_seconds;

    DataSource src(model, cfg.setting, mix64(trial_seed(cfg.seed, d, trial) + 1));
    TrialResult out;
    out.run = run_oomp(cfg.delta, cfg.s_star, src, sel);
    out.true_support = model->support();

    double beta_min = std::abs(model->coefficients().front());
    for (double b : model->coefficients()) beta_min = std::min(beta_min, std::abs(b));
    out.n_omp = n_omp(cfg.eta, d, cfg.delta, oracle.mu_star, oracle.rho, beta_min);
    const auto [omp_try, omp_opt] = omp_complexity_proxies(cfg.s_star, d, out.n_omp);

    IndexSet found = out.run.S;
    std::sort(found.begin(), found.end());
    ResultRow& row = out.row;
    row.d = d;
    row.trial = trial;
    row.recovered = !out.run.interrupted && found == model->support();
    row.c_oomp_tryselect = out.run.ledger.c_tryselect;
    row.c_oomp_optim = out.run.ledger.c_optim;
    row.c_omp_tryselect = omp_try;
    row.c_omp_optim = omp_opt;
    row.log2_ratio_tryselect = log2_ratio(row.c_oomp_tryselect, omp_try);
    row.log2_ratio_optim = log2_ratio(row.c_oomp_optim, omp_opt);
    return out;
}

std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg, std::ostream* log) {
    validate(cfg);
    std::vector<ResultRow> rows;
    for (int d : cfg.dims) {
        for (int trial = 0; trial < cfg.trials; ++trial) {
            const TrialResult r = run_trial(cfg, d, trial);
            rows.push_back(r.row);
            if (log) {
                *log << "d=" << d << " trial=" << trial << " recovered=" << (r.row.recovered ? 1 : 0)
                     << " log2_ratio_tryselect=" << fmt_double(r.row.log2_ratio_tryselect)
                     << " log2_ratio_optim=" << fmt_double(r.row.log2_ratio_optim) << std::endl;
            }
        }
    }
    return rows;
}

std::vector<DimSummary> summarize(const std::vector<ResultRow>& rows) {
    std::map<int, DimSummary> by_d;
    for (const ResultRow& r : rows) {
        DimSummary& s = by_d[r.d];
        s.d = r.d;
        ++s.trials;
        s.recovered += r.recovered ? 1 : 0;
        s.mean_c_oomp_tryselect += static_cast<double>(r.c_oomp_tryselect);
        s.mean_c_oomp_optim += static_cast<double>(r.c_oomp_optim);
        s.mean_c_omp_tryselect += static_cast<double>(r.c_omp_tryselect);
        s.mean_c_omp_optim += static_cast<double>(r.c_omp_optim);
        s.mean_log2_ratio_tryselect += r.log2_ratio_tryselect;
        s.mean_log2_ratio_optim += r.log2_ratio_optim;
    }
    std::vector<DimSummary> out;
    for (auto& [d, s] : by_d) {
        const double n = static_cast<double>(s.trials);
        s.mean_c_oomp_tryselect /= n;
        s.mean_c_oomp_optim /= n;
        s.mean_c_omp_tryselect /= n;
        s.mean_c_omp_optim /= n;
        s.mean_log2_ratio_tryselect /= n;
        s.mean_log2_ratio_optim /= n;
        s.log2_mean_ratio_tryselect = std::log2(s.mean_c_oomp_tryselect / s.mean_c_omp_tryselect);
        s.log2_mean_ratio_optim = std::log2(s.mean_c_oomp_optim / s.mean_c_omp_optim);
        out.push_back(s);
    }
    return out;
}

const char* const kCsvHeader =
    "d,trial,recovered,c_oomp_tryselect,c_oomp_optim,c_omp_tryselect,c_omp_optim,log2_ratio_tryselect,"
    "log2_ratio_optim";

std::string rows_to_csv(const std::vector<ResultRow>& rows) {
    std::vector<ResultRow> sorted = rows;
    std::stable_sort(sorted.begin(), sorted.end(), [](const ResultRow& a, const ResultRow& b) {
        return a.d != b.d ? a.d < b.d : a.trial < b.trial;
    });
    std::ostringstream out;
    out << kCsvHeader << '\n';
    for (const ResultRow& r : sorted) {
        out << r.d << ',' << r.trial << ',' << (r.recovered ? "true" : "false") << ',' << r.c_oomp_tryselect << ','
            << r.c_oomp_optim << ',' << r.c_omp_tryselect << ',' << r.c_omp_optim << ','
            << fmt_double(r.log2_ratio_tryselect) << ',' << fmt_double(r.log2_ratio_optim) << '\n';
    }
    return out.str();
}

nlohmann::json summary_json(const std::vector<ResultRow>& rows, const ExperimentConfig& cfg) {
    nlohmann::json per_d = nlohmann::json::array();
    for (const DimSummary& s : summarize(rows)) {
        per_d.push_back({{"d", s.d},
                         {"trials", s.trials},
                         {"recovered", s.recovered},
                         {"mean_c_oomp_tryselect", s.mean_c_oomp_tryselect},
                         {"mean_c_oomp_optim", s.mean_c_oomp_optim},
                         {"mean_c_omp_tryselect", s.mean_c_omp_tryselect},
                         {"mean_c_omp_optim", s.mean_c_omp_optim},
                         {"mean_log2_ratio_tryselect", s.mean_log2_ratio_tryselect},
                         {"mean_log2_ratio_optim", s.mean_log2_ratio_optim},
                         {"log2_mean_ratio_tryselect", s.log2_mean_ratio_tryselect},
                         {"log2_mean_ratio_optim", s.log2_mean_ratio_optim}});
    }
    return {{"config", to_json(cfg)}, {"per_d", per_d}};
}

std::filesystem::path summary_path(const std::filesystem::path& csv_path) {
    std::filesystem::path p = csv_path;
    p.replace_extension(".summary.json");
    return p;
}

void emit(const std::vector<ResultRow>& rows, const ExperimentConfig& cfg, const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    {
        std::ofstream csv(path, std::ios::binary);
        if (!csv) throw std::runtime_error("cannot write " + path.string());
        csv << rows_to_csv(rows);
        if (!csv) throw std::runtime_error("write failed for " + path.string());
    }
    const std::filesystem::path js = summary_path(path);
    std::ofstream out(js, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + js.string());
    out << summary_json(rows, cfg).dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed for " + js.string());
}

}  // namespace oomp
