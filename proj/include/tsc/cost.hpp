#pragma once

// Per-block execution cost bounds, loop path costs, virtual-node contraction
// and structural BCET / WCET.

#include <optional>
#include <string>
#include <vector>

#include "tsc/cache_ai.hpp"
#include "tsc/model.hpp"

namespace tsc {

enum class CostMode {
    Best,       ///< refined classification, best case
    Worst,      ///< refined classification, worst case (PS at hit latency)
    InitBest,   ///< every shared-cache access hits
    InitWorst,  ///< every shared-cache access misses
};

/// Lower bound charged for an access that may reach the L2.
enum class BestCasePolicy {
    L1Floor,    ///< an L1-NC access may still hit the L1: charge the L1 hit latency
    SharedHit,  ///< charge the L2 hit latency
};

/// Latency charged for one access. `cls` may be null only for Init* modes,
/// in which case every access is treated as L2-visible.
Cycles access_latency(const AccessClassification* cls, const SystemSpec& sys, CostMode mode,
                      BestCasePolicy policy = BestCasePolicy::L1Floor);

/// instructions * base_cpi + sum of access latencies. Throws std::out_of_range
/// when the classification does not cover the block's accesses.
Cycles block_cost(const TaskGraph& task, int block, const TaskClassification* cls, const SystemSpec& sys,
                  CostMode mode, BestCasePolicy policy = BestCasePolicy::L1Floor);

/// One-time surcharge (mem - l2 hit) of the PS accesses of a block.
Cycles block_ps_surcharge(const TaskGraph& task, int block, const TaskClassification& cls, const SystemSpec& sys);

/// Per-block best / worst costs (indexed by block index).
struct TaskCosts {
    std::vector<Cycles> best;
    std::vector<Cycles> worst;
    std::vector<Cycles> surcharge;
};

/// Initialization costs (Init* modes, optionally with a classification for L1 hits).
TaskCosts init_costs(const TaskGraph& task, const TaskClassification& cls, const SystemSpec& sys,
                     BestCasePolicy policy = BestCasePolicy::L1Floor);
/// Costs under the (refined) classification.
TaskCosts refined_costs(const TaskGraph& task, const TaskClassification& cls, const SystemSpec& sys,
                        BestCasePolicy policy = BestCasePolicy::L1Floor);

/// A node of a contracted level: a block or a child loop's virtual node.
struct CostNode {
    bool is_loop = false;
    int index = 0;  ///< block index or loop index

    friend bool operator==(const CostNode&, const CostNode&) = default;
};

/// DAG of one loop body (back edge removed, children contracted) or of the
/// whole program, with its path cost metrics.
struct LevelSummary {
    int loop = -1;  ///< -1 for the program level
    std::vector<CostNode> nodes;           ///< topological order
    std::vector<std::vector<int>> succ;    ///< node positions
    int source = 0;                        ///< head or entry position
    int sink = 0;                          ///< tail or exit position
    std::vector<Cycles> best, worst, surcharge;
    std::vector<Cycles> short_to;          ///< BBSC(source, x): excludes x
    std::vector<Cycles> long_to;           ///< BBLC(source, x): excludes x
    std::vector<Cycles> surcharge_prefix;  ///< max PS surcharge up to and including x
    Cycles short_total = 0;                ///< LPSC / BCET
    Cycles long_total = 0;                 ///< LPLC / WCET
    Cycles surcharge_total = 0;            ///< surcharge of the level's own blocks

    int position(CostNode n) const;
};

/// Fills the path metrics of a level whose nodes, edges and weights are set.
/// Throws ValidationError when a node is unreachable from the source or the
/// sink is unreachable.
void loop_path_costs(LevelSummary& level);

struct VirtualCost {
    Cycles best = 0;   ///< LPSC * MinBd
    Cycles worst = 0;  ///< LPLC * MaxBd + ps surcharge
};

VirtualCost contract_loop(const LoopNode& loop, const LevelSummary& level);

struct ProgramSummary {
    std::vector<LevelSummary> loops;  ///< by loop index
    LevelSummary top;
    std::vector<VirtualCost> virtual_cost;  ///< by loop index
    Cycles bcet = 0;
    Cycles wcet = 0;

    /// Level and node position of a block.
    std::pair<const LevelSummary*, int> locate_block(const TaskGraph& task, int block) const;
    /// Level containing a loop's virtual node (its parent level) and position.
    std::pair<const LevelSummary*, int> locate_loop(const TaskGraph& task, int loop) const;
};

/// Builds one level. Every child loop of `loop` must already be contracted
/// (present in `virtual_cost`), otherwise std::logic_error.
LevelSummary build_level(const TaskGraph& task, int loop, const TaskCosts& costs,
                         const std::vector<std::optional<VirtualCost>>& virtual_cost);

/// Contracts loops innermost-first and computes structural BCET / WCET.
ProgramSummary program_bounds(const TaskGraph& task, const TaskCosts& costs);

/// Equivalent IPET formulation in LP text format (maximize, flow conservation,
/// loop bound constraints). For cross-checking with an external solver.
std::string export_lp(const TaskGraph& task, const TaskCosts& costs);

}  // namespace tsc
