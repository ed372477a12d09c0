#include "oomp/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace oomp {

namespace {

constexpr double kBoundSlack = 1e-12;

Eigen::MatrixXd toeplitz_correlation(int d, double phi) {
    Eigen::MatrixXd r(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) r(i, j) = std::pow(phi, std::abs(i - j));
    }
    return r;
}

Eigen::MatrixXd checked_cholesky(const Eigen::MatrixXd& r) {
    Eigen::LLT<Eigen::MatrixXd> llt(r);
    if (llt.info() != Eigen::Success) {
        throw ModelError("Toeplitz correlation matrix is not numerically positive definite");
    }
    Eigen::MatrixXd c = llt.matrixL();
    return c;
}

}  // namespace

std::string to_string(CovarianceKind kind) {
    return kind == CovarianceKind::Diagonal ? "diagonal" : "toeplitz";
}

CovarianceKind parse_covariance_kind(const std::string& name) {
    if (name == "diagonal" || name == "Diagonal" || name == "orthogonal") return CovarianceKind::Diagonal;
    if (name == "toeplitz" || name == "Toeplitz" || name == "ToeplitzPowerDecay") {
        return CovarianceKind::ToeplitzPowerDecay;
    }
    throw ModelError("unknown covariance kind '" + name + "'");
}

ModelSpec ModelSpec::create(int d, IndexSet support, std::vector<double> coefficients, CovarianceSpec cov,
                            double noise_halfwidth) {
    if (d < 1) throw ModelError("dimension must be positive");
    if (support.size() != coefficients.size()) {
        throw ModelError("support and coefficients differ in length");
    }
    if (!(cov.halfwidth > 0.0)) throw ModelError("coordinate half-width B must be positive");
    if (cov.kind == CovarianceKind::ToeplitzPowerDecay && !(cov.phi >= 0.0 && cov.phi < 1.0)) {
        throw ModelError("Toeplitz decay phi must lie in [0, 1)");
    }
    if (!(noise_halfwidth >= 0.0)) throw ModelError("noise half-width must be nonnegative");

    std::vector<std::size_t> order(support.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return support[a] < support[b]; });

    ModelSpec spec;
    spec.d_ = d;
    spec.cov_ = cov;
    spec.noise_halfwidth_ = noise_halfwidth;
    for (std::size_t k : order) {
        const int i = support[k];
        if (i < 0 || i >= d) throw ModelError("support index out of range");
        if (!spec.support_.empty() && spec.support_.back() == i) throw ModelError("duplicate support index");
        if (coefficients[k] == 0.0 || !std::isfinite(coefficients[k])) {
            throw ModelError("support coefficients must be finite and nonzero");
        }
        spec.support_.push_back(i);
        spec.coefficients_.push_back(coefficients[k]);
    }

    if (cov.kind == CovarianceKind::Diagonal) {
        spec.M_ = cov.halfwidth;
    } else {
        const Eigen::MatrixXd c = checked_cholesky(toeplitz_correlation(d, cov.phi));
        spec.M_ = cov.halfwidth * c.cwiseAbs().rowwise().sum().maxCoeff();
    }

    double l1 = 0.0;
    for (double b : spec.coefficients_) l1 += std::abs(b);
    if (l1 * spec.M_ + noise_halfwidth > 1.0 + kBoundSlack) {
        throw ModelError("model violates ||beta*||_1 M + eta <= 1 (value " +
                         std::to_string(l1 * spec.M_ + noise_halfwidth) + ")");
    }
    return spec;
}

bool ModelSpec::in_support(int i) const noexcept {
    return std::binary_search(support_.begin(), support_.end(), i);
}

void ModelSpec::transform_prefix(std::span<const double> u, std::span<double> x) const {
    if (cov_.kind == CovarianceKind::Diagonal) {
        std::copy(u.begin(), u.end(), x.begin());
        return;
    }
    const double phi = cov_.phi;
    const double innovation = std::sqrt(1.0 - phi * phi);
    double prev = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        prev = (i == 0) ? u[0] : phi * prev + innovation * u[i];
        x[i] = prev;
    }
}

double ModelSpec::response(std::span<const double> x, double noise) const noexcept {
    double y = noise;
    for (std::size_t k = 0; k < support_.size(); ++k) y += coefficients_[k] * x[support_[k]];
    return y;
}

Eigen::MatrixXd ModelSpec::correlation_factor() const {
    if (cov_.kind == CovarianceKind::Diagonal) return Eigen::MatrixXd::Identity(d_, d_);
    return checked_cholesky(toeplitz_correlation(d_, cov_.phi));
}

Sample sample(const ModelSpec& spec, std::mt19937_64& rng) {
    const double b = spec.cov().halfwidth;
    std::uniform_real_distribution<double> coord(-b, b);
    std::vector<double> u(spec.d());
    for (double& v : u) v = coord(rng);
    Sample s;
    s.x.resize(spec.d());
    spec.transform_prefix(u, std::span<double>(s.x.data(), s.x.size()));
    const double eta = spec.noise_halfwidth();
    const double noise = eta > 0.0 ? std::uniform_real_distribution<double>(-eta, eta)(rng) : 0.0;
    s.y = spec.response(std::span<const double>(s.x.data(), s.x.size()), noise);
    return s;
}

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& m, const IndexSet& rows, const IndexSet& cols) {
    Eigen::MatrixXd out(rows.size(), cols.size());
    for (std::size_t a = 0; a < rows.size(); ++a) {
        for (std::size_t b = 0; b < cols.size(); ++b) out(a, b) = m(rows[a], cols[b]);
    }
    return out;
}

Eigen::VectorXd subvector(const Eigen::VectorXd& v, const IndexSet& idx) {
    Eigen::VectorXd out(idx.size());
    for (std::size_t a = 0; a < idx.size(); ++a) out(a) = v(idx[a]);
    return out;
}

double irrepresentable_constant(const Eigen::MatrixXd& sigma, const IndexSet& S) {
    const int d = static_cast<int>(sigma.rows());
    IndexSet outside;
    std::vector<char> member(d, 0);
    for (int i : S) member[i] = 1;
    for (int j = 0; j < d; ++j) {
        if (!member[j]) outside.push_back(j);
    }
    if (outside.empty() || S.empty()) return 0.0;
    Eigen::LLT<Eigen::MatrixXd> llt(submatrix(sigma, S, S));
    if (llt.info() != Eigen::Success) throw ModelError("Sigma_S is singular");
    const Eigen::MatrixXd coef = llt.solve(submatrix(sigma, S, outside));
    return coef.cwiseAbs().colwise().sum().maxCoeff();
}

PopulationOracle build_oracle(const ModelSpec& spec) {
    const int d = spec.d();
    const double scale = spec.cov().halfwidth * spec.cov().halfwidth / 3.0;

    PopulationOracle oracle;
    oracle.support = spec.support();
    oracle.beta_star = Eigen::VectorXd::Zero(d);
    for (std::size_t k = 0; k < spec.support().size(); ++k) {
        oracle.beta_star(spec.support()[k]) = spec.coefficients()[k];
    }

    if (spec.cov().kind == CovarianceKind::Diagonal) {
        oracle.sigma = scale * Eigen::MatrixXd::Identity(d, d);
        oracle.rho = scale;
        oracle.L = scale;
        oracle.mu_star = 0.0;
        return oracle;
    }

    const Eigen::MatrixXd r = toeplitz_correlation(d, spec.cov().phi);
    checked_cholesky(r);
    oracle.sigma = scale * r;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(oracle.sigma, Eigen::EigenvaluesOnly);
    oracle.rho = eig.eigenvalues().minCoeff();
    oracle.L = eig.eigenvalues().maxCoeff();
    if (!(oracle.rho > 0.0)) throw ModelError("Toeplitz covariance is not numerically positive definite");
    oracle.mu_star = irrepresentable_constant(oracle.sigma, oracle.support);
    return oracle;
}

Eigen::VectorXd population_beta(const PopulationOracle& oracle, const IndexSet& S) {
    if (S.empty()) return Eigen::VectorXd(0);
    Eigen::LLT<Eigen::MatrixXd> llt(submatrix(oracle.sigma, S, S));
    if (llt.info() != Eigen::Success) throw ModelError("Sigma_S is singular");
    const Eigen::VectorXd cross = oracle.sigma * oracle.beta_star;
    return llt.solve(subvector(cross, S));
}

Eigen::VectorXd population_Z(const PopulationOracle& oracle, const IndexSet& S) {
    Eigen::VectorXd diff = oracle.beta_star;
    const Eigen::VectorXd beta_s = population_beta(oracle, S);
    for (std::size_t a = 0; a < S.size(); ++a) diff(S[a]) -= beta_s(a);
    return oracle.sigma * diff;
}

Eigen::VectorXd population_W(const PopulationOracle& oracle, const IndexSet& S) {
    const int d = oracle.d();
    std::vector<char> selected(d, 0);
    for (int i : S) selected[i] = 1;

    const Eigen::VectorXd z = population_Z(oracle, S);
    int best = -1;
    for (int i : oracle.support) {
        if (selected[i]) continue;
        if (best < 0 || std::abs(z(i)) > std::abs(z(best))) best = i;
    }
    if (best < 0) throw ModelError("W is undefined once S covers the true support");

    const double top = std::abs(z(best));
    Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < d; ++i) {
        if (selected[i]) continue;
        const double zi = std::abs(z(i));
        w(i) = std::max((1.0 - oracle.mu_star) * zi, top - zi);
    }
    return w;
}

double risk_gap(const PopulationOracle& oracle, const IndexSet& S, const Eigen::VectorXd& beta) {
    if (S.empty()) return 0.0;
    const Eigen::VectorXd diff = beta - population_beta(oracle, S);
    return diff.dot(submatrix(oracle.sigma, S, S) * diff);
}

}  // namespace oomp
