#include "tsc/context.hpp"

#include <sstream>
#include <stdexcept>

namespace tsc {

namespace {

constexpr std::size_t kLpbCap = 4096;

Cycles surcharge_adj(const LevelSummary& lv, int pos, int iteration) {
    return iteration == 1 ? lv.surcharge_prefix[pos] : lv.surcharge_total;
}

int outermost_ancestor(const TaskGraph& task, int loop) {
    const auto& loops = task.loop_nodes();
    while (loops[loop].parent >= 0)
        loop = loops[loop].parent;
    return loop;
}

}  // namespace

IntervalSeq compute_bbo_time(const TaskGraph& task, const ProgramSummary& ps, const TaskCosts& costs, int block) {
    auto [lv, pos] = ps.locate_block(task, block);
    if (!lv || pos < 0)
        throw std::logic_error("missing cost summary for block");
    const Cycles wc = costs.worst[block];
    if (lv->loop < 0)
        return IntervalSeq{{lv->short_to[pos], lv->long_to[pos] + wc}};
    const int max_bd = task.loop_nodes()[lv->loop].max_bound;
    IntervalSeq out;
    for (int i = 1; i <= max_bd; ++i)
        out.items.push_back({(i - 1) * lv->short_total + lv->short_to[pos],
                             (i - 1) * lv->long_total + lv->long_to[pos] + wc + surcharge_adj(*lv, pos, i)});
    return out;
}

IntervalSeq compute_lpr_time(const TaskGraph& task, const ProgramSummary& ps, int loop) {
    const int parent = task.loop_nodes()[loop].parent;
    if (parent < 0)
        throw std::invalid_argument("LPRTime is undefined for an outermost loop");
    auto [lv, pos] = ps.locate_loop(task, loop);
    const int max_bd = task.loop_nodes()[parent].max_bound;
    IntervalSeq out;
    for (int i = 1; i <= max_bd; ++i)
        out.items.push_back({(i - 1) * lv->short_total + lv->short_to[pos],
                             (i - 1) * lv->long_total + lv->long_to[pos] + surcharge_adj(*lv, pos, i)});
    return out;
}

std::vector<IntervalSeq> compute_lpb_times(const TaskGraph& task, const ProgramSummary& ps,
                                           const std::vector<IntervalSeq>& lpr) {
    const auto& loops = task.loop_nodes();
    const auto& order = task.loops_innermost_first();
    std::vector<IntervalSeq> lpb(loops.size());
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const int l = *it;
        if (loops[l].parent < 0) {
            auto [lv, pos] = ps.locate_loop(task, l);
            lpb[l] = IntervalSeq{{lv->short_to[pos], lv->long_to[pos]}};
        } else {
            lpb[l] = seq_merge(lpr[l], lpb[loops[l].parent]);
            if (lpb[l].size() > kLpbCap)
                lpb[l] = normalize(lpb[l]);
        }
    }
    return lpb;
}

TaskContext compute_task_context(const TaskGraph& task, const TaskCosts& costs) {
    TaskContext tc;
    tc.costs = costs;
    tc.summary = program_bounds(task, costs);
    const auto& loops = task.loop_nodes();
    const int n = static_cast<int>(task.blocks.size());
    tc.lpr.resize(loops.size());
    for (std::size_t l = 0; l < loops.size(); ++l)
        if (loops[l].parent >= 0)
            tc.lpr[l] = compute_lpr_time(task, tc.summary, static_cast<int>(l));
    tc.lpb = compute_lpb_times(task, tc.summary, tc.lpr);
    tc.loop_envelope.resize(loops.size());
    for (std::size_t l = 0; l < loops.size(); ++l) {
        const int o = outermost_ancestor(task, static_cast<int>(l));
        auto [lv, pos] = tc.summary.locate_loop(task, o);
        tc.loop_envelope[l] = {lv->short_to[pos], lv->long_to[pos] + tc.summary.virtual_cost[o].worst};
    }
    tc.bbo.resize(n);
    tc.relative.resize(n);
    for (int b = 0; b < n; ++b) {
        tc.bbo[b] = compute_bbo_time(task, tc.summary, costs, b);
        const int l = task.innermost_loop(b);
        tc.relative[b] = l < 0 ? tc.bbo[b] : normalize(seq_merge(tc.lpb[l], tc.bbo[b]));
    }
    return tc;
}

IntervalSeq compute_prs_time(const ChainSpec& chain, Cycles period, int k, int task_index,
                             const std::vector<Cycles>& bcet, const std::vector<Cycles>& wcet) {
    const Cycles base = static_cast<Cycles>(k) * period;
    if (chain.trigger == Trigger::TT) {
        const Cycles off = chain.offsets ? chain.offsets->at(task_index) : 0;
        return IntervalSeq{{base + off, base + off}};
    }
    Cycles lo = base, hi = base;
    for (int j = 0; j < task_index; ++j) {
        lo += bcet.at(j);
        hi += wcet.at(j);
    }
    return IntervalSeq{{lo, hi}};
}

IntervalSeq compute_bba_time(const IntervalSeq& prs, const IntervalSeq& relative) {
    return normalize(seq_merge(prs, relative));
}

IntervalSeq JobContext::loop_window(int loop) const {
    IntervalSeq w = seq_merge(prs, rel->lpb[loop]);
    const Cycles wc = rel->summary.virtual_cost[loop].worst;
    for (auto& iv : w.items)
        iv.hi += wc;
    return normalize(w);
}

JobContext compute_job_context(const TaskGraph& task, const TaskContext& rel, IntervalSeq prs, Interval lifetime,
                               int threshold) {
    JobContext jc;
    jc.task = &task;
    jc.rel = &rel;
    jc.prs = std::move(prs);
    jc.lifetime = lifetime;
    const int n = static_cast<int>(task.blocks.size());
    const auto& loops = task.loop_nodes();
    jc.bba.resize(n);
    jc.phase3.resize(n);
    jc.envelope.resize(n);
    for (int b = 0; b < n; ++b) {
        jc.bba[b] = compute_bba_time(jc.prs, rel.relative[b]);
        const int l = task.innermost_loop(b);
        if (l >= 0) {
            const Interval& e = rel.loop_envelope[l];
            const Interval p = jc.prs.hull();
            jc.envelope[b] = Interval{p.lo + e.lo, p.hi + e.hi};
        }
        IntervalSeq w = jc.bba[b];
        for (int s = l; static_cast<int>(w.size()) > threshold && s >= 0; s = loops[s].parent)
            w = jc.loop_window(s);
        jc.phase3[b] = std::move(w);
    }
    return jc;
}

std::string context_csv(const std::string& job, const TaskGraph& task, const JobContext& ctx) {
    std::ostringstream os;
    for (std::size_t b = 0; b < ctx.bba.size(); ++b)
        for (std::size_t i = 0; i < ctx.bba[b].size(); ++i)
            os << job << ',' << task.blocks[b].id << ',' << i << ',' << ctx.bba[b][i].lo << ','
               << ctx.bba[b][i].hi << '\n';
    return os.str();
}

}  // namespace tsc
