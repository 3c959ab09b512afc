#pragma once

// Core domain types shared by every analysis stage.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tsc {

using Cycles = std::int64_t;

/// Raised for malformed input documents (bad JSON, missing fields, wrong types).
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when an input is well-formed but violates a model invariant.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<std::string> diagnostics);
    const std::vector<std::string>& diagnostics() const { return diagnostics_; }

private:
    std::vector<std::string> diagnostics_;
};

/// Closed interval of cycles; both endpoints belong to it.
struct Interval {
    Cycles lo = 0;
    Cycles hi = 0;

    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Ordered sequence of closed intervals.
struct IntervalSeq {
    std::vector<Interval> items;

    IntervalSeq() = default;
    IntervalSeq(std::initializer_list<Interval> list) : items(list) { }
    explicit IntervalSeq(std::vector<Interval> v) : items(std::move(v)) { }

    std::size_t size() const { return items.size(); }
    bool empty() const { return items.empty(); }
    auto begin() const { return items.begin(); }
    auto end() const { return items.end(); }
    const Interval& operator[](std::size_t i) const { return items[i]; }

    /// Smallest single interval covering the whole sequence. Requires non-empty.
    Interval hull() const;

    friend bool operator==(const IntervalSeq&, const IntervalSeq&) = default;
};

enum class CacheScope { Private, Shared };

struct CacheLevelConfig {
    int sets = 1;
    int ways = 1;
    int line_size = 32;
    Cycles hit_latency = 1;
    CacheScope scope = CacheScope::Private;

    std::uint64_t line_of(std::uint64_t address) const { return address / static_cast<std::uint64_t>(line_size); }
    int set_of_line(std::uint64_t line) const { return static_cast<int>(line % static_cast<std::uint64_t>(sets)); }

    friend bool operator==(const CacheLevelConfig&, const CacheLevelConfig&) = default;
};

/// (address / line_size) mod sets
int map_address_to_set(std::uint64_t address, const CacheLevelConfig& level);

struct SystemSpec {
    int core_count = 1;
    CacheLevelConfig l1{2, 4, 32, 1, CacheScope::Private};
    CacheLevelConfig l2{32, 4, 32, 6, CacheScope::Shared};
    Cycles mem_latency = 30;
    Cycles base_cpi = 1;
    std::vector<Cycles> period_table;
    int phase3_threshold = 1024;
    int refinement_passes = 1;

    friend bool operator==(const SystemSpec&, const SystemSpec&) = default;
};

std::vector<std::string> validate(const SystemSpec& system);

struct MemAccess {
    int id = 0;
    std::uint64_t address = 0;

    friend bool operator==(const MemAccess&, const MemAccess&) = default;
};

struct BasicBlock {
    int id = 0;
    int instructions = 0;
    std::vector<MemAccess> accesses;

    friend bool operator==(const BasicBlock&, const BasicBlock&) = default;
};

/// Loop as written in the input; block references are ids.
struct LoopSpec {
    int id = 0;
    int head = 0;
    int tail = 0;
    std::pair<int, int> back_edge{0, 0};
    int min_bound = 1;
    int max_bound = 1;
    std::optional<int> parent;

    friend bool operator==(const LoopSpec&, const LoopSpec&) = default;
};

/// Resolved loop node; block and loop references are indices.
struct LoopNode {
    int head = 0;
    int tail = 0;
    int min_bound = 1;
    int max_bound = 1;
    int parent = -1;             ///< loop index, -1 for outermost
    int depth = 0;               ///< 0 for outermost
    std::vector<int> children;   ///< loop indices
    std::vector<int> body;       ///< all block indices, nested loops included, sorted
};

/// Control-flow graph of one task with its flow facts.
///
/// The raw fields mirror the input document. `finalize()` validates them and
/// builds the index-based view used by the analyses; an unfinalized graph must
/// not be handed to any analysis.
class TaskGraph {
public:
    std::string id;
    int entry_block = 0;
    int exit_block = 0;
    std::vector<BasicBlock> blocks;
    std::vector<std::pair<int, int>> edges;
    std::vector<LoopSpec> loops;
    std::vector<std::pair<int, int>> exclusive_pairs;

    /// Diagnostics for every violated invariant; empty when valid.
    std::vector<std::string> validate() const;
    /// Validates and builds derived indices. Throws ValidationError.
    void finalize();
    bool finalized() const { return finalized_; }

    // Derived view (valid after finalize()).
    int block_index(int block_id) const;
    int entry() const { return entry_idx_; }
    int exit() const { return exit_idx_; }
    const std::vector<int>& succ(int b) const { return succ_[b]; }
    const std::vector<int>& pred(int b) const { return pred_[b]; }
    /// Whether edge u->v (indices) is the back edge of some loop.
    bool is_back_edge(int u, int v) const;
    const std::vector<LoopNode>& loop_nodes() const { return loop_nodes_; }
    /// Innermost enclosing loop index of a block, -1 when outside loops.
    int innermost_loop(int b) const { return innermost_[b]; }
    /// Loop indices ordered innermost-first (children before parents).
    const std::vector<int>& loops_innermost_first() const { return order_; }
    /// Reverse postorder of blocks ignoring back edges.
    const std::vector<int>& topo_order() const { return topo_; }
    /// Flat index of access j of block b.
    int access_flat(int b, int j) const { return access_offset_[b] + j; }
    int access_count() const { return access_offset_.empty() ? 0 : access_offset_.back(); }
    /// (block index, position) of a flat access index.
    std::pair<int, int> access_at(int flat) const { return access_pos_[flat]; }
    /// True when the (unordered) index pair was declared mutually exclusive.
    bool exclusive(int a, int b) const;
    /// Product of max bounds of all loops enclosing b.
    std::int64_t iteration_weight(int b) const;

    friend bool operator==(const TaskGraph& a, const TaskGraph& b) {
        return a.id == b.id && a.entry_block == b.entry_block && a.exit_block == b.exit_block &&
               a.blocks == b.blocks && a.edges == b.edges && a.loops == b.loops &&
               a.exclusive_pairs == b.exclusive_pairs;
    }

private:
    bool finalized_ = false;
    int entry_idx_ = 0;
    int exit_idx_ = 0;
    std::vector<std::vector<int>> succ_, pred_;
    std::vector<LoopNode> loop_nodes_;
    std::vector<int> innermost_;
    std::vector<int> order_;
    std::vector<int> topo_;
    std::vector<int> access_offset_;
    std::vector<std::pair<int, int>> access_pos_;
    std::vector<std::pair<int, int>> back_edges_;
    std::vector<std::pair<int, int>> exclusive_idx_;
};

enum class Trigger { ET, TT };

const char* to_string(Trigger t);

struct ChainSpec {
    std::string id;
    Trigger trigger = Trigger::ET;
    std::vector<std::string> tasks;
    int core = 0;
    std::optional<Cycles> period;
    std::optional<std::vector<Cycles>> offsets;
    int priority = 0;   ///< lower value = higher priority when merging

    friend bool operator==(const ChainSpec&, const ChainSpec&) = default;
};

/// One release of one task of a chain inside the hyperperiod.
struct JobInstance {
    std::string chain;
    int core = 0;
    int task_index = 0;
    int period_index = 0;
    IntervalSeq release;   ///< PRSTime
    Interval lifetime;     ///< [release lo, release hi + task WCET]
};

}  // namespace tsc
