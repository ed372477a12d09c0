#include "oomp/tryselect.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oomp {

namespace {

struct Candidates {
    std::vector<int> arms;      // [d] \ S, increasing
    std::vector<char> in_s;     // membership of S
};

Candidates candidates(const IndexSet& S, int d) {
    Candidates c;
    c.in_s.assign(d, 0);
    for (int i : S) {
        if (i < 0 || i >= d) throw std::invalid_argument("try_select: S index out of range");
        c.in_s[i] = 1;
    }
    for (int i = 0; i < d; ++i) {
        if (!c.in_s[i]) c.arms.push_back(i);
    }
    if (c.arms.empty()) throw std::invalid_argument("try_select: S leaves no candidate feature");
    return c;
}

void check_inputs(const IndexSet& S, const Eigen::VectorXd& beta_tilde, double xi, const ConfParams& params,
                  const DataSource& src) {
    validate(params);
    if (params.d != src.d()) throw std::invalid_argument("try_select: params.d differs from the source dimension");
    if (static_cast<std::size_t>(beta_tilde.size()) != S.size()) {
        throw std::invalid_argument("try_select: beta_tilde must be aligned with S");
    }
    if (!(xi > 0.0)) throw std::invalid_argument("try_select: xi must be positive");
}

void emit_trace(std::ostream* out, std::uint64_t n, int i_star, const ArmState& arm) {
    if (!out) return;
    nlohmann::json line{{"n", n}, {"i_star", i_star}, {"z", arm.z_mean}, {"conf", arm.conf}};
    *out << line.dump() << '\n';
}

}  // namespace

double ConfParams::log_term(std::uint64_t n) const noexcept {
    const double nn = static_cast<double>(n);
    return std::log(log_scale * static_cast<double>(d) * nn * nn / delta);
}

ConfParams make_conf_params(int d, double delta, double M, double L, double rho, double mu_star,
                            const Eigen::VectorXd& beta_tilde) {
    ConfParams p;
    p.d = d;
    p.delta = delta;
    p.M = M;
    p.L = L;
    p.rho = rho;
    p.mu_star = mu_star;
    p.B_tilde = M * M * beta_tilde.lpNorm<1>() + M;
    return p;
}

void validate(const ConfParams& p) {
    if (p.d < 1) throw std::invalid_argument("conf: d must be positive");
    if (!(p.delta > 0.0 && p.delta < 1.0)) throw std::invalid_argument("conf: delta must lie in (0, 1)");
    if (!(p.M > 0.0) || !(p.L > 0.0) || !(p.rho > 0.0)) {
        throw std::invalid_argument("conf: M, L and rho must be positive");
    }
    if (!(p.mu_star >= 0.0 && p.mu_star < 1.0)) throw std::invalid_argument("conf: mu_star must lie in [0, 1)");
    if (!(p.B_tilde >= p.M)) throw std::invalid_argument("conf: B_tilde must be at least M");
    if (!(p.log_scale > 0.0)) throw std::invalid_argument("conf: log scale must be positive");
}

ArmState update_arm(ArmState arm, double u, const ConfParams& params) {
    arm.n += 1;
    const double n = static_cast<double>(arm.n);
    arm.z_mean += (u - arm.z_mean) / n;
    const double dev = u - arm.welford_mean;
    arm.welford_mean += dev / n;
    arm.welford_m2 += dev * (u - arm.welford_mean);
    const double floor = params.variance_floor();
    arm.v_plus = arm.n >= 2 ? std::max(arm.variance(), floor) : floor;
    return arm;
}

double conf_radius_with_log(double v_plus, std::uint64_t n, double log_term, double B_tilde) noexcept {
    const double nn = static_cast<double>(n);
    return std::sqrt(8.0 * v_plus * log_term / nn) + 28.0 * B_tilde * log_term / (3.0 * (nn - 1.0));
}

double conf_radius(const ArmState& arm, std::uint64_t n, const ConfParams& params) {
    if (n < 2) throw std::invalid_argument("conf_radius: needs at least two observations");
    return conf_radius_with_log(arm.v_plus, n, params.log_term(n), params.B_tilde);
}

void PriorityIndex::insert(int feature, double key) {
    if (feature < 0 || static_cast<std::size_t>(feature) >= keys_.size()) {
        throw std::out_of_range("PriorityIndex: feature out of range");
    }
    if (keys_[feature] != kAbsent) throw std::invalid_argument("PriorityIndex: feature already present");
    if (!(key >= 0.0)) throw std::invalid_argument("PriorityIndex: keys must be nonnegative");
    keys_[feature] = key;
    order_.insert({key, feature});
}

void PriorityIndex::update(int feature, double key) {
    erase(feature);
    insert(feature, key);
}

void PriorityIndex::erase(int feature) {
    if (!contains(feature)) throw std::invalid_argument("PriorityIndex: feature not present");
    order_.erase({keys_[feature], feature});
    keys_[feature] = kAbsent;
}

bool PriorityIndex::contains(int feature) const noexcept {
    return feature >= 0 && static_cast<std::size_t>(feature) < keys_.size() && keys_[feature] != kAbsent;
}

int PriorityIndex::top() const {
    if (order_.empty()) throw std::logic_error("PriorityIndex: empty");
    return order_.begin()->feature;
}

double PriorityIndex::key(int feature) const {
    if (!contains(feature)) throw std::invalid_argument("PriorityIndex: feature not present");
    return keys_[feature];
}

TrySelectOutcome try_select_stream(const IndexSet& S, const Eigen::VectorXd& beta_tilde, double xi,
                                   DataSource& src, const ConfParams& params, const TrySelectHooks& hooks) {
    if (src.mode() != AccessMode::Stream) throw std::invalid_argument("try_select_stream: source is not in stream mode");
    check_inputs(S, beta_tilde, xi, params, src);

    const int d = src.d();
    const Candidates cand = candidates(S, d);
    const QueryCounts start = src.ledger().total();
    const FeatureSet all = FeatureSet::all(d);
    const double fail_level = 2.0 * params.M * std::sqrt(xi);
    const double factor = params.selection_factor();
    const std::size_t k = S.size();

    TrySelectOutcome out;
    out.pulls.assign(d, 0);
    std::vector<ArmState> arms(d);
    std::vector<double> row(d + 1);

    for (;;) {
        src.query_new(all, row);
        ++out.iterations;
        double residual = row[d];
        for (std::size_t a = 0; a < k; ++a) residual -= row[S[a]] * beta_tilde(a);
        out.residual_work += k;

        const std::uint64_t n = out.iterations;
        const double log_n = n >= 2 ? params.log_term(n) : 0.0;
        double min_conf = 0.0;
        int best = -1;
        double best_key = 0.0;
        for (int i : cand.arms) {
            ArmState& arm = arms[i];
            arm = update_arm(arm, row[i] * residual, params);
            ++out.pulls[i];
            if (n >= 2) {
                arm.conf = conf_radius_with_log(arm.v_plus, n, log_n, params.B_tilde);
                const double key = std::abs(arm.z_mean) + arm.conf;
                if (best < 0 || arm.conf < min_conf) min_conf = arm.conf;
                if (best < 0 || key > best_key) {
                    best = i;
                    best_key = key;
                }
            }
            if (hooks.on_update) hooks.on_update(i, arm);
        }
        if (n < 2) continue;
        emit_trace(hooks.trace, n, best, arms[best]);

        if (fail_level > min_conf) break;
        if (std::abs(arms[best].z_mean) > factor * arms[best].conf) {
            out.success = true;
            out.selected = best;
            break;
        }
    }
    out.cost = src.ledger().total() - start;
    return out;
}

TrySelectOutcome try_select_db(const IndexSet& S, const Eigen::VectorXd& beta_tilde, double xi, DataSource& src,
                               const ConfParams& params, const TrySelectHooks& hooks) {
    if (src.mode() != AccessMode::Database) throw std::invalid_argument("try_select_db: source is not in database mode");
    check_inputs(S, beta_tilde, xi, params, src);

    const int d = src.d();
    const Candidates cand = candidates(S, d);
    const QueryCounts start = src.ledger().total();
    const double fail_level = 2.0 * params.M * std::sqrt(xi);
    const double factor = params.selection_factor();
    const std::size_t k = S.size();

    TrySelectOutcome out;
    out.pulls.assign(d, 0);
    std::vector<ArmState> arms(d);
    std::vector<double> residuals;
    PriorityIndex index(d);

    auto refresh_conf = [&](int i) {
        ArmState& arm = arms[i];
        arm.conf = conf_radius(arm, arm.n, params);
        if (hooks.on_update) hooks.on_update(i, arm);
        return std::abs(arm.z_mean) + arm.conf;
    };

    // Two shared full rows give every arm a defined variance.
    const FeatureSet all = FeatureSet::all(d);
    std::vector<double> row(d + 1);
    for (int r = 0; r < 2; ++r) {
        src.query_new(all, row);
        double residual = row[d];
        for (std::size_t a = 0; a < k; ++a) residual -= row[S[a]] * beta_tilde(a);
        out.residual_work += k;
        residuals.push_back(residual);
        for (int i : cand.arms) {
            arms[i] = update_arm(arms[i], row[i] * residual, params);
            ++out.pulls[i];
        }
    }
    for (int i : cand.arms) {
        index.insert(i, refresh_conf(i));
        ++out.index_ops;
    }

    // Features of S, the pulled arm and the response, in FeatureSet order.
    std::vector<int> fresh_idx(S.begin(), S.end());
    fresh_idx.push_back(-1);
    fresh_idx.push_back(d);
    std::vector<double> fresh_row(k + 2);
    std::vector<double> one(1);

    for (;;) {
        const int i_star = index.top();
        ArmState& arm = arms[i_star];
        emit_trace(hooks.trace, arm.n, i_star, arm);
        if (fail_level > arm.conf) break;
        if (std::abs(arm.z_mean) > factor * arm.conf) {
            out.success = true;
            out.selected = i_star;
            break;
        }

        const std::uint64_t n_star = residuals.size();
        double x = 0.0;
        if (arm.n == n_star) {
            fresh_idx[k] = i_star;
            const FeatureSet F = FeatureSet::of(fresh_idx, d);
            src.query_new(F, fresh_row);
            double residual = fresh_row[F.position(d)];
            for (std::size_t a = 0; a < k; ++a) residual -= fresh_row[F.position(S[a])] * beta_tilde(a);
            out.residual_work += k;
            residuals.push_back(residual);
            x = fresh_row[F.position(i_star)];
        } else {
            const std::uint64_t back = n_star - 1 - arm.n;
            if (back >= src.rows_since_barrier()) throw std::logic_error("try_select_db: replay escapes the barrier");
            src.query_old(back, FeatureSet::of({i_star}, d), one);
            x = one[0];
        }
        arm = update_arm(arm, x * residuals[arm.n], params);
        ++out.pulls[i_star];
        ++out.iterations;
        index.update(i_star, refresh_conf(i_star));
        ++out.index_ops;
    }
    out.cost = src.ledger().total() - start;
    return out;
}

}  // namespace oomp
