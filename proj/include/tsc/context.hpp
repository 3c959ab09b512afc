#pragma once

// Relative and absolute execution windows of blocks and loops.

#include <optional>
#include <string>
#include <vector>

#include "tsc/cost.hpp"
#include "tsc/model.hpp"
#include "tsc/overlap.hpp"

namespace tsc {

/// Job-independent windows of one task, offsets from the job start.
struct TaskContext {
    ProgramSummary summary;
    TaskCosts costs;
    std::vector<IntervalSeq> bbo;       ///< per block: BBOTime
    std::vector<IntervalSeq> lpr;       ///< per loop: LPRTime, empty for outermost loops
    std::vector<IntervalSeq> lpb;       ///< per loop: LPBTime (start times of the virtual node)
    std::vector<IntervalSeq> relative;  ///< per block: normalized start..end windows from the job start
    std::vector<Interval> loop_envelope;  ///< per loop: [earliest start, latest end] of its outermost ancestor
};

/// BBOTime of block b inside its innermost level.
IntervalSeq compute_bbo_time(const TaskGraph& task, const ProgramSummary& ps, const TaskCosts& costs, int block);
/// LPRTime of an inner loop. Throws std::invalid_argument for an outermost loop.
IntervalSeq compute_lpr_time(const TaskGraph& task, const ProgramSummary& ps, int loop);
/// LPBTime of every loop, outermost first.
std::vector<IntervalSeq> compute_lpb_times(const TaskGraph& task, const ProgramSummary& ps,
                                           const std::vector<IntervalSeq>& lpr);

TaskContext compute_task_context(const TaskGraph& task, const TaskCosts& costs);

/// Release window of task `task_index` of a chain in period k.
/// TT: degenerate at k*T + offset. ET: k*T plus prefix sums of the predecessors' bounds.
IntervalSeq compute_prs_time(const ChainSpec& chain, Cycles period, int k, int task_index,
                             const std::vector<Cycles>& bcet, const std::vector<Cycles>& wcet);

/// PRSTime (x) window, normalized.
IntervalSeq compute_bba_time(const IntervalSeq& prs, const IntervalSeq& relative);

/// Absolute windows of one job.
struct JobContext {
    const TaskGraph* task = nullptr;
    const TaskContext* rel = nullptr;
    IntervalSeq prs;
    Interval lifetime;
    std::vector<IntervalSeq> bba;                  ///< per block
    std::vector<IntervalSeq> phase3;               ///< per block, after threshold substitution
    std::vector<std::optional<Interval>> envelope;  ///< per block, outermost-loop envelope

    /// Absolute window of a loop's virtual node: PRSTime (x) LPBTime with hi += BBWC(V).
    IntervalSeq loop_window(int loop) const;
    OverlapSite site(int block) const { return {lifetime, envelope[block], &phase3[block]}; }
};

/// Builds absolute windows; block windows with more than `threshold` intervals
/// are replaced by the enclosing loop's window, moving outward as needed.
JobContext compute_job_context(const TaskGraph& task, const TaskContext& rel, IntervalSeq prs, Interval lifetime,
                               int threshold);

/// CSV rows: job, block, interval index, lo, hi.
std::string context_csv(const std::string& job, const TaskGraph& task, const JobContext& ctx);

}  // namespace tsc
