#pragma once

#include "oomp/datasource.hpp"
#include "oomp/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <set>
#include <vector>

namespace oomp {

/// Constants of the empirical Bernstein radius for one Try-Select call.
struct ConfParams {
    int d = 0;
    double delta = 0.1;
    double M = 0.0;
    double L = 0.0;
    double rho = 0.0;
    double B_tilde = 0.0;  ///< M^2 ||beta_tilde||_1 + M
    double mu_star = 0.0;
    double log_scale = 8.0;  ///< the radius uses log(log_scale * d n^2 / delta)

    double variance_floor() const noexcept { return L * M * M / (1000.0 * rho); }
    double log_term(std::uint64_t n) const noexcept;
    /// (1 + mu*) / (1 - mu*)
    double selection_factor() const noexcept { return (1.0 + mu_star) / (1.0 - mu_star); }
};

ConfParams make_conf_params(int d, double delta, double M, double L, double rho, double mu_star,
                            const Eigen::VectorXd& beta_tilde);
void validate(const ConfParams& params);

/// Running statistics of U = x_i (y - x_S^T beta_tilde) for one candidate feature.
struct ArmState {
    std::uint64_t n = 0;
    double z_mean = 0.0;
    double welford_mean = 0.0;
    double welford_m2 = 0.0;
    double v_plus = 0.0;
    double conf = 0.0;

    /// Unbiased sample variance; requires n >= 2.
    double variance() const noexcept { return welford_m2 / static_cast<double>(n - 1); }
};

/// One observation: running mean, Welford accumulators and the thresholded
/// variance (once n >= 2). conf is left to the caller.
ArmState update_arm(ArmState arm, double u, const ConfParams& params);

/// sqrt(8 V+ log / n) + 28 B_tilde log / (3 (n - 1)); throws for n < 2.
double conf_radius(const ArmState& arm, std::uint64_t n, const ConfParams& params);

/// Same formula with the log factor supplied, for loops sharing n across arms.
double conf_radius_with_log(double v_plus, std::uint64_t n, double log_term, double B_tilde) noexcept;

/// Ordered index over candidate features keyed by |Z| + conf, largest first and
/// smallest feature id on ties. Red-black tree underneath; O(log d) updates.
class PriorityIndex {
  public:
    explicit PriorityIndex(int d = 0) : keys_(d, kAbsent) {}

    void insert(int feature, double key);
    void update(int feature, double key);
    void erase(int feature);
    bool contains(int feature) const noexcept;
    int top() const;
    double key(int feature) const;
    std::size_t size() const noexcept { return order_.size(); }
    bool empty() const noexcept { return order_.empty(); }

  private:
    struct Entry {
        double key;
        int feature;
    };
    struct Before {
        bool operator()(const Entry& a, const Entry& b) const noexcept {
            if (a.key != b.key) return a.key > b.key;
            return a.feature < b.feature;
        }
    };
    static constexpr double kAbsent = -1.0;

    std::set<Entry, Before> order_;
    std::vector<double> keys_;
};

struct TrySelectOutcome {
    bool success = false;
    std::optional<int> selected;
    std::vector<std::uint64_t> pulls;  ///< per feature; zero on S
    QueryCounts cost;                  ///< ledger delta of this call
    std::uint64_t iterations = 0;      ///< stream rows, or database pulls
    std::uint64_t residual_work = 0;   ///< |S| per residual evaluated
    std::uint64_t index_ops = 0;       ///< priority-index updates (database)
};

struct TrySelectHooks {
    /// Called after every arm update with the arm's new state (conf included).
    std::function<void(int feature, const ArmState& arm)> on_update;
    /// Line-delimited JSON per iteration: {"n", "i_star", "z", "conf"}.
    std::ostream* trace = nullptr;
};

/// Synchronous strategy: every fresh full row updates every arm.
TrySelectOutcome try_select_stream(const IndexSet& S, const Eigen::VectorXd& beta_tilde, double xi,
                                   DataSource& src, const ConfParams& params, const TrySelectHooks& hooks = {});

/// Asynchronous UCB strategy over a database: only the arm with the largest
/// |Z| + conf is refreshed, replaying cached residuals through query_old.
TrySelectOutcome try_select_db(const IndexSet& S, const Eigen::VectorXd& beta_tilde, double xi, DataSource& src,
                               const ConfParams& params, const TrySelectHooks& hooks = {});

}  // namespace oomp
