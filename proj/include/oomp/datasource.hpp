#pragma once

#include "oomp/model.hpp"

#include "json.hpp"

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace oomp {

enum class AccessMode { Stream, Database };

std::string to_string(AccessMode mode);
AccessMode parse_access_mode(const std::string& name);

/// Sorted, duplicate-free subset of {0, ..., d}; index d stands for the response y.
class FeatureSet {
  public:
    static FeatureSet of(std::vector<int> indices, int d);
    static FeatureSet all(int d);
    static FeatureSet response_only(int d);
    /// S plus the response, as queried by the optimizer.
    static FeatureSet with_response(const IndexSet& S, int d);

    const std::vector<int>& indices() const noexcept { return indices_; }
    std::size_t size() const noexcept { return indices_.size(); }
    int dimension() const noexcept { return d_; }
    bool has_response() const noexcept { return !indices_.empty() && indices_.back() == d_; }
    /// Position of feature i within indices(), or -1.
    int position(int i) const noexcept;

  private:
    std::vector<int> indices_;
    int d_ = 0;
};

struct QueryCounts {
    std::uint64_t new_calls = 0;
    std::uint64_t old_calls = 0;
    std::uint64_t cost = 0;

    QueryCounts& operator+=(const QueryCounts& o) noexcept {
        new_calls += o.new_calls;
        old_calls += o.old_calls;
        cost += o.cost;
        return *this;
    }
    friend QueryCounts operator-(QueryCounts a, const QueryCounts& b) noexcept {
        a.new_calls -= b.new_calls;
        a.old_calls -= b.old_calls;
        a.cost -= b.cost;
        return a;
    }
    friend bool operator==(const QueryCounts&, const QueryCounts&) = default;
};

class QueryLedger {
  public:
    void record(const std::string& label, bool fresh, std::uint64_t cost);

    const QueryCounts& total() const noexcept { return total_; }
    const std::map<std::string, QueryCounts>& per_subroutine() const noexcept { return per_subroutine_; }
    QueryCounts of(const std::string& label) const;

    /// {label: {new_calls, old_calls, cost}}
    nlohmann::json to_json() const;

  private:
    friend class DataSource;

    QueryCounts total_;
    std::map<std::string, QueryCounts> per_subroutine_;
};

class AccessError : public std::out_of_range {
  public:
    using std::out_of_range::out_of_range;
};

/// Thrown by a query that would push the ledger past its cost budget or that
/// runs after the wall-clock deadline.
class BudgetExhausted : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct BarrierToken {
    std::string label;
    std::uint64_t first_row = 0;
};

/// Query-new / query-old access to an unbounded i.i.d. sample of the model.
///
/// Row t is a deterministic function of (seed, t): every cell is derived from a
/// counter-based uniform, so the database keeps no row log. query_old re-derives
/// the requested cells of an older row bit-exactly.
class DataSource {
  public:
    DataSource(std::shared_ptr<const ModelSpec> model, AccessMode mode, std::uint64_t seed);
    DataSource(const DataSource&) = delete;
    DataSource& operator=(const DataSource&) = delete;
    DataSource(DataSource&&) noexcept = default;
    DataSource& operator=(DataSource&&) noexcept = default;

    AccessMode mode() const noexcept { return mode_; }
    const ModelSpec& model() const noexcept { return *model_; }
    int d() const noexcept { return model_->d(); }

    /// Draws a fresh row; out receives the cells of F in F's order.
    void query_new(const FeatureSet& F, std::span<double> out);
    std::vector<double> query_new(const FeatureSet& F);

    /// Row `back` positions behind the newest one (0 = newest). Database mode only,
    /// and only rows queried since the current barrier.
    void query_old(std::uint64_t back, const FeatureSet& F, std::span<double> out);
    std::vector<double> query_old(std::uint64_t back, const FeatureSet& F);

    /// Flat barrier: later query_old calls can't reach rows drawn before it, and
    /// costs are attributed to `label` until the next call.
    BarrierToken begin_subroutine(std::string label);

    std::uint64_t rows_since_barrier() const noexcept { return next_row_ - barrier_row_; }
    std::uint64_t rows_drawn() const noexcept { return next_row_; }
    const std::string& current_label() const noexcept { return label_; }
    const QueryLedger& ledger() const noexcept { return ledger_; }

    void set_budget(std::optional<std::uint64_t> cost_cap) noexcept { budget_ = cost_cap; }
    std::optional<std::uint64_t> budget() const noexcept { return budget_; }
    void set_deadline(std::optional<std::chrono::steady_clock::time_point> deadline) noexcept {
        deadline_ = deadline;
    }

  private:
    void charge(const FeatureSet& F, bool fresh);
    void materialize(std::uint64_t row, const FeatureSet& F, std::span<double> out);
    double latent(std::uint64_t row_key, int column) const noexcept;
    double noise(std::uint64_t row_key) const noexcept;

    std::shared_ptr<const ModelSpec> model_;
    AccessMode mode_;
    std::uint64_t seed_;
    std::uint64_t next_row_ = 0;
    std::uint64_t barrier_row_ = 0;
    std::string label_ = "unattributed";
    QueryLedger ledger_;
    std::optional<std::uint64_t> budget_;
    std::optional<std::chrono::steady_clock::time_point> deadline_;
    std::uint64_t calls_ = 0;
    QueryCounts* bucket_ = nullptr;  // per_subroutine_ entry of label_; map nodes are stable
    std::vector<double> latent_buf_;
    std::vector<double> x_buf_;
};

}  // namespace oomp
