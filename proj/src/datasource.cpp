#include "oomp/datasource.hpp"

#include "oomp/random.hpp"

#include <algorithm>

namespace oomp {

std::string to_string(AccessMode mode) { return mode == AccessMode::Stream ? "stream" : "db"; }

AccessMode parse_access_mode(const std::string& name) {
    if (name == "stream" || name == "Stream") return AccessMode::Stream;
    if (name == "db" || name == "database" || name == "Database") return AccessMode::Database;
    throw std::invalid_argument("unknown access setting '" + name + "'");
}

FeatureSet FeatureSet::of(std::vector<int> indices, int d) {
    if (indices.empty()) throw std::invalid_argument("feature set must be non-empty");
    std::sort(indices.begin(), indices.end());
    if (std::adjacent_find(indices.begin(), indices.end()) != indices.end()) {
        throw std::invalid_argument("feature set has duplicate indices");
    }
    if (indices.front() < 0 || indices.back() > d) throw std::invalid_argument("feature index out of range");
    FeatureSet f;
    f.indices_ = std::move(indices);
    f.d_ = d;
    return f;
}

FeatureSet FeatureSet::all(int d) {
    std::vector<int> idx(d + 1);
    for (int i = 0; i <= d; ++i) idx[i] = i;
    return of(std::move(idx), d);
}

FeatureSet FeatureSet::response_only(int d) { return of({d}, d); }

FeatureSet FeatureSet::with_response(const IndexSet& S, int d) {
    std::vector<int> idx(S.begin(), S.end());
    idx.push_back(d);
    return of(std::move(idx), d);
}

int FeatureSet::position(int i) const noexcept {
    const auto it = std::lower_bound(indices_.begin(), indices_.end(), i);
    if (it == indices_.end() || *it != i) return -1;
    return static_cast<int>(it - indices_.begin());
}

void QueryLedger::record(const std::string& label, bool fresh, std::uint64_t cost) {
    QueryCounts delta;
    (fresh ? delta.new_calls : delta.old_calls) = 1;
    delta.cost = cost;
    total_ += delta;
    per_subroutine_[label] += delta;
}

QueryCounts QueryLedger::of(const std::string& label) const {
    const auto it = per_subroutine_.find(label);
    return it == per_subroutine_.end() ? QueryCounts{} : it->second;
}

nlohmann::json QueryLedger::to_json() const {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [label, c] : per_subroutine_) {
        out[label] = {{"new_calls", c.new_calls}, {"old_calls", c.old_calls}, {"cost", c.cost}};
    }
    return out;
}

DataSource::DataSource(std::shared_ptr<const ModelSpec> model, AccessMode mode, std::uint64_t seed)
    : model_(std::move(model)), mode_(mode), seed_(seed) {
    if (!model_) throw std::invalid_argument("data source needs a model");
    latent_buf_.resize(model_->d());
    x_buf_.resize(model_->d());
    bucket_ = &ledger_.per_subroutine_[label_];
}

BarrierToken DataSource::begin_subroutine(std::string label) {
    barrier_row_ = next_row_;
    label_ = std::move(label);
    bucket_ = &ledger_.per_subroutine_[label_];
    return {label_, barrier_row_};
}

void DataSource::charge(const FeatureSet& F, bool fresh) {
    const std::uint64_t cost = F.size();
    if (budget_ && ledger_.total_.cost + cost > *budget_) {
        throw BudgetExhausted("query cost budget of " + std::to_string(*budget_) + " exhausted");
    }
    if (deadline_ && (++calls_ & 1023u) == 0 && std::chrono::steady_clock::now() > *deadline_) {
        throw BudgetExhausted("wall-clock deadline reached");
    }
    QueryCounts delta;
    (fresh ? delta.new_calls : delta.old_calls) = 1;
    delta.cost = cost;
    ledger_.total_ += delta;
    *bucket_ += delta;
}

double DataSource::latent(std::uint64_t row_key, int column) const noexcept {
    const double b = model_->cov().halfwidth;
    return b * (2.0 * row_uniform(row_key, static_cast<std::uint64_t>(column)) - 1.0);
}

double DataSource::noise(std::uint64_t row_key) const noexcept {
    const double eta = model_->noise_halfwidth();
    if (eta == 0.0) return 0.0;
    return eta * (2.0 * row_uniform(row_key, static_cast<std::uint64_t>(model_->d())) - 1.0);
}

void DataSource::materialize(std::uint64_t row, const FeatureSet& F, std::span<double> out) {
    const ModelSpec& m = *model_;
    const int d = m.d();
    const auto& idx = F.indices();
    if (out.size() < idx.size()) throw std::invalid_argument("output buffer smaller than feature set");
    const bool want_y = F.has_response();
    const std::uint64_t key = hash_combine(seed_, row);

    if (m.cov().kind == CovarianceKind::Diagonal) {
        for (std::size_t a = 0; a < idx.size(); ++a) {
            if (idx[a] < d) out[a] = latent(key, idx[a]);
        }
        if (want_y) {
            double y = noise(key);
            std::size_t a = 0;
            for (std::size_t k = 0; k < m.support().size(); ++k) {
                const int j = m.support()[k];
                while (idx[a] < j) ++a;
                y += m.coefficients()[k] * (idx[a] == j ? out[a] : latent(key, j));
            }
            out[idx.size() - 1] = y;
        }
        return;
    }

    int needed = -1;
    for (int j : idx) {
        if (j < d) needed = std::max(needed, j);
    }
    if (want_y && !m.support().empty()) needed = std::max(needed, m.support().back());
    const std::size_t prefix = static_cast<std::size_t>(needed + 1);
    for (std::size_t j = 0; j < prefix; ++j) latent_buf_[j] = latent(key, static_cast<int>(j));
    m.transform_prefix(std::span<const double>(latent_buf_.data(), prefix), std::span<double>(x_buf_.data(), prefix));
    for (std::size_t a = 0; a < idx.size(); ++a) {
        if (idx[a] < d) out[a] = x_buf_[idx[a]];
    }
    if (want_y) out[idx.size() - 1] = m.response(std::span<const double>(x_buf_.data(), prefix), noise(key));
}

void DataSource::query_new(const FeatureSet& F, std::span<double> out) {
    if (F.dimension() != d()) throw std::invalid_argument("feature set built for another dimension");
    charge(F, true);
    const std::uint64_t row = next_row_++;
    materialize(row, F, out);
}

std::vector<double> DataSource::query_new(const FeatureSet& F) {
    std::vector<double> out(F.size());
    query_new(F, out);
    return out;
}

void DataSource::query_old(std::uint64_t back, const FeatureSet& F, std::span<double> out) {
    if (mode_ != AccessMode::Database) throw AccessError("query_old is unavailable in the stream setting");
    if (F.dimension() != d()) throw std::invalid_argument("feature set built for another dimension");
    if (back >= rows_since_barrier()) {
        throw AccessError("query_old(" + std::to_string(back) + ") reaches past the subroutine barriers (" +
                          std::to_string(rows_since_barrier()) + " rows available)");
    }
    charge(F, false);
    materialize(next_row_ - 1 - back, F, out);
}

std::vector<double> DataSource::query_old(std::uint64_t back, const FeatureSet& F) {
    std::vector<double> out(F.size());
    query_old(back, F, out);
    return out;
}

}  // namespace oomp
