#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace oomp {

/// Feature indices are zero-based; a set of them is kept in the order the caller
/// chose (selection order for OOMP), and vectors over a set are aligned with it.
using IndexSet = std::vector<int>;

class ModelError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

enum class CovarianceKind { Diagonal, ToeplitzPowerDecay };

std::string to_string(CovarianceKind kind);
CovarianceKind parse_covariance_kind(const std::string& name);

struct CovarianceSpec {
    CovarianceKind kind = CovarianceKind::Diagonal;
    double phi = 0.5;        ///< Toeplitz decay base, ignored for Diagonal.
    double halfwidth = 0.1;  ///< B: each latent coordinate is Unif[-B, B].
};

/// Ground-truth sparse linear model y = <x, beta*> + eps with bounded design and
/// uniform noise. Immutable once built; safe to share across trials.
///
/// Toeplitz designs draw u with i.i.d. Unif[-B, B] coordinates and set x = C u,
/// C being the lower Cholesky factor of the phi^|i-j| correlation matrix. For that
/// matrix C u has the AR(1) form x_0 = u_0, x_i = phi x_{i-1} + sqrt(1-phi^2) u_i,
/// which is what the samplers evaluate.
class ModelSpec {
  public:
    /// Validates and builds. Throws ModelError when the support is malformed, a
    /// coefficient is zero, or ||beta*||_1 M + eta > 1.
    static ModelSpec create(int d, IndexSet support, std::vector<double> coefficients,
                            CovarianceSpec cov, double noise_halfwidth);

    int d() const noexcept { return d_; }
    int sparsity() const noexcept { return static_cast<int>(support_.size()); }
    const IndexSet& support() const noexcept { return support_; }
    const std::vector<double>& coefficients() const noexcept { return coefficients_; }
    const CovarianceSpec& cov() const noexcept { return cov_; }
    double noise_halfwidth() const noexcept { return noise_halfwidth_; }
    /// Exact almost-sure bound on ||x||_inf implied by the sampling transform.
    double M() const noexcept { return M_; }
    bool in_support(int i) const noexcept;

    /// Maps latent uniforms u (|u_i| <= B) to the first u.size() coordinates of x.
    void transform_prefix(std::span<const double> u, std::span<double> x) const;
    double response(std::span<const double> x, double noise) const noexcept;

    /// Lower factor C of the target correlation (identity for Diagonal).
    Eigen::MatrixXd correlation_factor() const;

  private:
    ModelSpec() = default;

    int d_ = 0;
    IndexSet support_;
    std::vector<double> coefficients_;
    CovarianceSpec cov_;
    double noise_halfwidth_ = 0.0;
    double M_ = 0.0;
};

struct Sample {
    Eigen::VectorXd x;
    double y = 0.0;
};

Sample sample(const ModelSpec& spec, std::mt19937_64& rng);

/// Population quantities computed from the exact covariance.
struct PopulationOracle {
    Eigen::MatrixXd sigma;
    Eigen::VectorXd beta_star;
    IndexSet support;
    double rho = 0.0;      ///< smallest eigenvalue of sigma
    double L = 0.0;        ///< largest eigenvalue of sigma
    double mu_star = 0.0;  ///< irrepresentable constant of the true support

    int d() const noexcept { return static_cast<int>(beta_star.size()); }
};

PopulationOracle build_oracle(const ModelSpec& spec);

/// beta^S restricted to S, aligned with the order of S.
Eigen::VectorXd population_beta(const PopulationOracle& oracle, const IndexSet& S);

/// Z^S = Sigma (beta* - pad(beta^S)); zero on S.
Eigen::VectorXd population_Z(const PopulationOracle& oracle, const IndexSet& S);

/// Hardness gaps W_i for i outside S (entries of S are zero). Requires S strictly
/// inside the true support.
Eigen::VectorXd population_W(const PopulationOracle& oracle, const IndexSet& S);

/// R(beta) - R(beta^S) for beta supported on S, via the quadratic form in Sigma_S.
double risk_gap(const PopulationOracle& oracle, const IndexSet& S, const Eigen::VectorXd& beta);

/// Irrepresentable constant max_{j not in S} ||Sigma_S^{-1} Sigma_{S,j}||_1.
double irrepresentable_constant(const Eigen::MatrixXd& sigma, const IndexSet& S);

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& m, const IndexSet& rows, const IndexSet& cols);
Eigen::VectorXd subvector(const Eigen::VectorXd& v, const IndexSet& idx);

}  // namespace oomp
