#include "oomp/optim.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace oomp {

void validate(const OptimConfig& cfg) {
    if (!(cfg.rho > 0.0)) throw std::invalid_argument("optim: rho must be positive");
    if (!(cfg.M > 0.0)) throw std::invalid_argument("optim: M must be positive");
    if (!(cfg.iteration_scale > 0.0)) throw std::invalid_argument("optim: iteration scale must be positive");
    if (cfg.max_T < 2) throw std::invalid_argument("optim: max_T must be at least 2");
}

double gradient_bound(int k, const OptimConfig& cfg) {
    const double kk = static_cast<double>(k);
    const double m2 = cfg.M * cfg.M / std::sqrt(cfg.rho);
    if (cfg.bound == GradientBound::Compact) return 10.0 * kk * m2 + 2.0 * std::sqrt(kk) * cfg.M;
    return 8.0 * kk * m2 + 4.0 * std::sqrt(kk) * cfg.M;
}

std::uint64_t iteration_count(int k, double delta, double xi, const OptimConfig& cfg) {
    if (k == 0) return 0;
    const double g = gradient_bound(k, cfg);
    const double t = cfg.iteration_scale * 21.0 * g * g * std::log(1.0 / delta) / (cfg.rho * xi);
    const double cap = static_cast<double>(cfg.max_T);
    if (!(t < cap)) return cfg.max_T;
    // With nu_0 = 2 the first average is 2 beta_1; from T = 2 on it is a convex
    // combination of beta_2..beta_T and stays in the ball.
    return std::max<std::uint64_t>(2, static_cast<std::uint64_t>(std::ceil(t)));
}

double projection_radius(double rho) { return 2.0 / std::sqrt(rho); }

Eigen::VectorXd project_ball(const Eigen::VectorXd& v, double radius) {
    const double norm = v.norm();
    if (norm <= radius) return v;
    return v * (radius / norm);
}

OptimResult optim(const IndexSet& S, double delta, double xi, DataSource& src, const OptimConfig& cfg,
                  std::vector<Eigen::VectorXd>* iterates) {
    validate(cfg);
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("optim: delta must lie in (0, 1)");
    if (!(xi > 0.0)) throw std::invalid_argument("optim: xi must be positive");

    const int k = static_cast<int>(S.size());
    OptimResult result;
    result.target_xi = xi;
    result.delta = delta;
    result.beta_tilde = Eigen::VectorXd::Zero(k);
    if (k == 0) return result;

    const std::uint64_t T = iteration_count(k, delta, xi, cfg);
    result.T_used = T;
    result.capped = (T == cfg.max_T);

    const FeatureSet F = FeatureSet::with_response(S, src.d());
    std::vector<int> pos(k);
    for (int a = 0; a < k; ++a) pos[a] = F.position(S[a]);
    const std::size_t y_pos = F.size() - 1;

    const double radius = projection_radius(cfg.rho);
    const double radius2 = radius * radius;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd avg = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd x(k);
    std::vector<double> row(F.size());
    if (iterates) iterates->reserve(iterates->size() + T);

    for (std::uint64_t t = 0; t < T; ++t) {
        const double step = 2.0 / (cfg.rho * static_cast<double>(t + 1));
        const double weight = 2.0 / static_cast<double>(t + 1);
        src.query_new(F, row);
        for (int a = 0; a < k; ++a) x(a) = row[pos[a]];
        const double residual = x.dot(beta) - row[y_pos];
        beta.noalias() -= (2.0 * step * residual) * x;
        const double norm2 = beta.squaredNorm();
        if (norm2 > radius2) beta *= radius / std::sqrt(norm2);
        avg = (1.0 - weight) * avg + weight * beta;
        if (iterates) iterates->push_back(beta);
    }
    result.beta_tilde = avg;
    return result;
}

}  // namespace oomp
