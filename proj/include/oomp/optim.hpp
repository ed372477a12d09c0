#pragma once

#include "oomp/datasource.hpp"
#include "oomp/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace oomp {

/// Which bound on ||g_hat - g|| sizes the iteration count.
enum class GradientBound {
    HighProbability,  ///< 8 k M^2 / sqrt(rho) + 4 sqrt(k) M
    Compact,          ///< 10 k M^2 / sqrt(rho) + 2 sqrt(k) M
};

struct OptimConfig {
    double rho = 0.0;
    double M = 0.0;
    double iteration_scale = 1.0;  ///< c_T, multiplies the prescribed T
    std::uint64_t max_T = 100'000'000'000ULL;
    GradientBound bound = GradientBound::HighProbability;
};

struct OptimResult {
    Eigen::VectorXd beta_tilde;  ///< aligned with S
    std::uint64_t T_used = 0;
    double target_xi = 0.0;
    double delta = 0.0;
    bool capped = false;  ///< T hit max_T
};

void validate(const OptimConfig& cfg);

double gradient_bound(int k, const OptimConfig& cfg);

/// min(max_T, ceil(c_T * 21 G^2 log(1/delta) / (rho xi))), at least 2; 0 for k = 0.
std::uint64_t iteration_count(int k, double delta, double xi, const OptimConfig& cfg);

double projection_radius(double rho);

Eigen::VectorXd project_ball(const Eigen::VectorXd& v, double radius);

/// Projected averaged SGD on the squared loss over the features in S, drawing
/// fresh rows of S plus the response. The caller opens the subroutine barrier.
/// When `iterates` is non-null it receives beta_1 .. beta_T (post-projection).
OptimResult optim(const IndexSet& S, double delta, double xi, DataSource& src, const OptimConfig& cfg,
                  std::vector<Eigen::VectorXd>* iterates = nullptr);

}  // namespace oomp
