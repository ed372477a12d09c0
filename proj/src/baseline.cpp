#include "oomp/baseline.hpp"

#include "oomp/datasource.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace oomp {

namespace {

constexpr double kOracleZeroTol = 1e-12;
constexpr double kPivotTol = 1e-12;

std::shared_ptr<const ModelSpec> share(const ModelSpec& model) { return std::make_shared<const ModelSpec>(model); }

/// Cholesky factor of gram restricted to S, grown one column at a time.
class GrowingCholesky {
  public:
    explicit GrowingCholesky(int capacity) : l_(Eigen::MatrixXd::Zero(capacity, capacity)) {}

    void add(const Eigen::MatrixXd& gram, const IndexSet& S, int j) {
        const int k = static_cast<int>(S.size());
        Eigen::VectorXd w(k);
        for (int a = 0; a < k; ++a) w(a) = gram(S[a], j);
        if (k > 0) l_.topLeftCorner(k, k).triangularView<Eigen::Lower>().solveInPlace(w);
        const double pivot = gram(j, j) - w.squaredNorm();
        if (!(pivot > kPivotTol * std::max(1.0, gram(j, j)))) {
            throw std::runtime_error("omp: selected columns are rank deficient");
        }
        l_.block(k, 0, 1, k) = w.transpose();
        l_(k, k) = std::sqrt(pivot);
        size_ = k + 1;
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
        const auto l = l_.topLeftCorner(size_, size_).triangularView<Eigen::Lower>();
        Eigen::VectorXd z = l.solve(rhs);
        return l.transpose().solve(z);
    }

  private:
    Eigen::MatrixXd l_;
    int size_ = 0;
};

}  // namespace

BatchData draw_batch(const ModelSpec& model, std::uint64_t n, std::uint64_t seed) {
    const int d = model.d();
    DataSource src(share(model), AccessMode::Stream, seed);
    const FeatureSet all = FeatureSet::all(d);
    BatchData data;
    data.X.resize(static_cast<Eigen::Index>(n), d);
    data.Y.resize(static_cast<Eigen::Index>(n));
    std::vector<double> row(d + 1);
    for (std::uint64_t t = 0; t < n; ++t) {
        src.query_new(all, row);
        for (int j = 0; j < d; ++j) data.X(t, j) = row[j];
        data.Y(t) = row[d];
    }
    return data;
}

MomentData moments(const BatchData& data) {
    if (data.X.rows() != data.Y.size()) throw std::invalid_argument("batch: X and Y differ in rows");
    MomentData m;
    m.gram = data.X.transpose() * data.X;
    m.xty = data.X.transpose() * data.Y;
    m.yty = data.Y.squaredNorm();
    m.n = static_cast<std::uint64_t>(data.X.rows());
    return m;
}

MomentData sample_moments(const ModelSpec& model, std::uint64_t n, std::uint64_t seed, int block_rows) {
    if (block_rows < 1) throw std::invalid_argument("sample_moments: block size must be positive");
    const int d = model.d();
    DataSource src(share(model), AccessMode::Stream, seed);
    const FeatureSet all = FeatureSet::all(d);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d + 1, d + 1);
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    RowMajor block(block_rows, d + 1);

    std::uint64_t done = 0;
    while (done < n) {
        const int rows = static_cast<int>(std::min<std::uint64_t>(block_rows, n - done));
        for (int r = 0; r < rows; ++r) src.query_new(all, std::span<double>(block.row(r).data(), d + 1));
        const auto b = block.topRows(rows);
        acc.selfadjointView<Eigen::Lower>().rankUpdate(b.transpose());
        done += rows;
    }
    const Eigen::MatrixXd full = acc.selfadjointView<Eigen::Lower>();
    MomentData m;
    m.gram = full.topLeftCorner(d, d);
    m.xty = full.col(d).head(d);
    m.yty = full(d, d);
    m.n = n;
    return m;
}

OmpResult omp(const MomentData& data, double eta, std::optional<int> max_steps) {
    const int d = data.d();
    if (data.n < 1) throw std::invalid_argument("omp: needs at least one row");
    if (data.gram.rows() != d || data.gram.cols() != d) throw std::invalid_argument("omp: gram has wrong shape");
    if (!(eta >= 0.0)) throw std::invalid_argument("omp: eta must be nonnegative");
    for (int j = 0; j < d; ++j) {
        if (!(data.gram(j, j) > 0.0)) throw std::invalid_argument("omp: column " + std::to_string(j) + " is zero");
    }
    const int limit = max_steps ? std::min(*max_steps, d) : d;

    OmpResult res;
    res.beta_bar = Eigen::VectorXd(0);
    std::vector<char> chosen(d, 0);
    GrowingCholesky chol(d);
    Eigen::VectorXd corr = data.xty;

    while (static_cast<int>(res.S.size()) < limit) {
        int best = -1;
        for (int j = 0; j < d; ++j) {
            if (chosen[j]) continue;
            if (best < 0 || std::abs(corr(j)) > std::abs(corr(best))) best = j;
        }
        const double top = std::abs(corr(best));
        if (top < eta || top == 0.0) break;

        chol.add(data.gram, res.S, best);
        res.S.push_back(best);
        chosen[best] = 1;
        ++res.iterations;
        res.beta_bar = chol.solve(subvector(data.xty, res.S));

        corr = data.xty;
        for (std::size_t a = 0; a < res.S.size(); ++a) corr.noalias() -= data.gram.col(res.S[a]) * res.beta_bar(a);
    }
    return res;
}

OmpResult omp(const BatchData& data, double eta, std::optional<int> max_steps) {
    if (data.X.rows() < 1) throw std::invalid_argument("omp: needs at least one row");
    return omp(moments(data), eta, max_steps);
}

IndexSet oracle_omp(const PopulationOracle& oracle, std::optional<int> s_star, double mu,
                    const OracleChooser& chooser) {
    if (!(mu >= 0.0 && mu < 1.0)) throw std::invalid_argument("oracle_omp: mu must lie in [0, 1)");
    const int d = oracle.d();
    const int limit = s_star ? std::min(*s_star, d) : d;
    IndexSet S;
    std::vector<char> chosen(d, 0);
    while (static_cast<int>(S.size()) < limit) {
        const Eigen::VectorXd abs_z = population_Z(oracle, S).cwiseAbs();
        int best = -1;
        for (int j = 0; j < d; ++j) {
            if (chosen[j]) continue;
            if (best < 0 || abs_z(j) > abs_z(best)) best = j;
        }
        if (best < 0 || abs_z(best) <= kOracleZeroTol) break;
        int pick = best;
        if (chooser) {
            pick = chooser(abs_z, S, mu);
            if (pick < 0 || pick >= d || chosen[pick] || abs_z(pick) < mu * abs_z(best)) {
                throw std::invalid_argument("oracle_omp: chooser left the admissible band");
            }
        }
        S.push_back(pick);
        chosen[pick] = 1;
    }
    return S;
}

std::uint64_t n_omp(double sigma_noise, int d, double delta, double mu_star, double rho, double beta_min) {
    if (!(mu_star < 1.0) || !(rho > 0.0) || !(beta_min > 0.0)) {
        throw std::invalid_argument("n_omp: needs mu* < 1, rho > 0 and beta_min > 0");
    }
    const double gap = (1.0 - mu_star) * rho * beta_min;
    const double n = 18.0 * sigma_noise * sigma_noise * std::log(4.0 * d / delta) / (gap * gap);
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(n)));
}

std::pair<std::uint64_t, std::uint64_t> omp_complexity_proxies(int s_star, int d, std::uint64_t n) {
    if (s_star < 1 || d < 1 || n < 1) throw std::invalid_argument("omp proxies: inputs must be positive");
    const auto s = static_cast<std::uint64_t>(s_star);
    return {s * static_cast<std::uint64_t>(d) * n, n * s * (s + 1) / 2};
}

}  // namespace oomp
