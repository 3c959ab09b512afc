#pragma once

// Inter-core interference bounds |Mc(m)| for shared-cache accesses.

#include <cstdint>
#include <string>
#include <vector>

#include "tsc/cache_ai.hpp"
#include "tsc/context.hpp"
#include "tsc/overlap.hpp"

namespace tsc {

enum class CountMode {
    Distinct,  ///< distinct L2 lines per block
    Access,    ///< L2-visible access sites per block
};

struct InterferenceOptions {
    CountMode count = CountMode::Distinct;
    bool use_mwis = true;
    bool et_max_rule = false;
    OverlapSemantics semantics = OverlapSemantics::Closed;
    int mwis_cap = 40;
};

struct ExclusionGraph {
    std::vector<std::int64_t> weights;
    std::vector<std::pair<int, int>> edges;
};

/// Exact maximum-weight independent set value for graphs up to `cap`
/// vertices; larger graphs fall back to the sum of weights.
std::int64_t mwis_bound(const ExclusionGraph& g, int cap = 40);

/// Contribution of one block to set `set` of the shared cache.
std::int64_t block_contribution(const TaskGraph& task, const TaskClassification& cls, int block, int set,
                                CountMode mode);

/// A job running on another core, as seen by the interference analysis.
struct ForeignJob {
    const TaskGraph* task = nullptr;
    const TaskClassification* cls = nullptr;
    const JobContext* ctx = nullptr;
    int core = 0;
    Trigger trigger = Trigger::ET;
    Interval release;  ///< hull of the release window
};

/// Window during which foreign insertions into m's set can evict m's line.
/// AH: from the earliest window of any block referencing the line to the end
/// of m's block. PS: the window of the persistence scope loop.
IntervalSeq target_window(const JobContext& job, const TaskClassification& cls, int flat);

/// Foreign blocks with accesses to `set` whose windows may overlap the target.
std::vector<int> collect_overlap_set(const OverlapSite& target, const ForeignJob& f, int set,
                                     OverlapSemantics sem = OverlapSemantics::Closed);

/// Contribution of one foreign job given its overlapping blocks.
std::int64_t job_contribution(const ForeignJob& f, const std::vector<int>& blocks, int set,
                              const InterferenceOptions& opt);

/// Combines per-job contributions of one core (TT sum, ET max within groups
/// of jobs whose release windows intersect).
std::int64_t combine_core(const std::vector<const ForeignJob*>& jobs, const std::vector<std::int64_t>& contrib,
                          bool et_max_rule);

struct InterferenceRecord {
    std::int64_t raw_sum = 0;     ///< sum of block weights over all overlapping blocks
    std::int64_t after_mwis = 0;  ///< sum of per-job contributions
    std::int64_t bound = 0;       ///< final |Mc(m)|
    int jobs = 0;                 ///< foreign jobs contributing
};

/// |Mc(m)| of access `flat` of the target job.
InterferenceRecord interference_bound(const JobContext& target, const TaskClassification& cls, int flat,
                                      const std::vector<ForeignJob>& foreign, const InterferenceOptions& opt);

/// Task-level baseline: every foreign job whose lifetime overlaps the target
/// job's lifetime contributes all its lines in the set.
std::int64_t task_level_bound(const JobContext& target, const TaskClassification& cls, int flat,
                              const std::vector<ForeignJob>& foreign, CountMode mode);

}  // namespace tsc
