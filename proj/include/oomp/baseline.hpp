#pragma once

#include "oomp/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>

namespace oomp {

struct BatchData {
    Eigen::MatrixXd X;  ///< n x d
    Eigen::VectorXd Y;
};

/// Sufficient statistics of a batch for least-squares pursuit.
struct MomentData {
    Eigen::MatrixXd gram;  ///< X^T X
    Eigen::VectorXd xty;   ///< X^T Y
    double yty = 0.0;
    std::uint64_t n = 0;

    int d() const noexcept { return static_cast<int>(xty.size()); }
};

/// n rows of the model, the same rows a DataSource seeded with `seed` would serve.
BatchData draw_batch(const ModelSpec& model, std::uint64_t n, std::uint64_t seed);

MomentData moments(const BatchData& data);

/// Streams n rows in blocks without keeping them; equal to moments(draw_batch(...))
/// up to summation order.
MomentData sample_moments(const ModelSpec& model, std::uint64_t n, std::uint64_t seed, int block_rows = 4096);

struct OmpResult {
    IndexSet S;                 ///< in selection order
    Eigen::VectorXd beta_bar;   ///< least-squares coefficients aligned with S
    int iterations = 0;
};

/// Greedy pursuit: add the column most correlated with the residual, refit on S,
/// stop once the best correlation is below eta (or is zero) or after max_steps.
OmpResult omp(const BatchData& data, double eta, std::optional<int> max_steps = std::nullopt);
OmpResult omp(const MomentData& data, double eta, std::optional<int> max_steps = std::nullopt);

/// Picks a feature outside S from |Z^S|; must land in [mu max, max].
using OracleChooser = std::function<int(const Eigen::VectorXd& abs_z, const IndexSet& S, double mu)>;

/// Pursuit on population correlations; the exact argmax unless `chooser` is given.
/// Stops at s_star selections or once max |Z^S| <= 1e-12.
IndexSet oracle_omp(const PopulationOracle& oracle, std::optional<int> s_star, double mu,
                    const OracleChooser& chooser = {});

/// max(1, ceil(18 sigma^2 log(4d/delta) / ((1 - mu*)^2 rho^2 beta_min^2)))
std::uint64_t n_omp(double sigma_noise, int d, double delta, double mu_star, double rho, double beta_min);

/// (s* d n, n s*(s*+1)/2): Try-Select and Optim cost proxies for batch pursuit.
std::pair<std::uint64_t, std::uint64_t> omp_complexity_proxies(int s_star, int d, std::uint64_t n);

}  // namespace oomp
