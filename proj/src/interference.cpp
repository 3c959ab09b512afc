#include "tsc/interference.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <set>
#include <unordered_map>

namespace tsc {

namespace {

class MwisSolver {
public:
    MwisSolver(const std::vector<std::int64_t>& w, const std::vector<std::uint64_t>& adj) : w_(w), adj_(adj) { }

    std::int64_t solve(std::uint64_t mask) {
        std::int64_t base = 0;
        // peel isolated and non-positive vertices
        for (std::uint64_t m = mask; m;) {
            const int v = std::countr_zero(m);
            m &= m - 1;
            if (w_[v] <= 0) {
                mask &= ~(1ull << v);
            } else if (!(adj_[v] & mask)) {
                base += w_[v];
                mask &= ~(1ull << v);
            }
        }
        if (!mask)
            return base;
        if (auto it = memo_.find(mask); it != memo_.end())
            return base + it->second;
        int pick = -1, deg = -1;
        for (std::uint64_t m = mask; m; m &= m - 1) {
            const int v = std::countr_zero(m);
            const int d = std::popcount(adj_[v] & mask);
            if (d > deg) {
                deg = d;
                pick = v;
            }
        }
        const std::uint64_t without = mask & ~(1ull << pick);
        const std::int64_t r =
            std::max(solve(without), w_[pick] + solve(without & ~adj_[pick]));
        memo_.emplace(mask, r);
        return base + r;
    }

private:
    const std::vector<std::int64_t>& w_;
    const std::vector<std::uint64_t>& adj_;
    std::unordered_map<std::uint64_t, std::int64_t> memo_;
};

bool visible(const AccessClassification& a) { return a.l2_visible(); }

}  // namespace

std::int64_t mwis_bound(const ExclusionGraph& g, int cap) {
    const int n = static_cast<int>(g.weights.size());
    std::int64_t sum = 0;
    for (auto w : g.weights)
        sum += std::max<std::int64_t>(w, 0);
    if (n > cap || n > 64)
        return sum;
    std::vector<std::uint64_t> adj(n, 0);
    for (auto [a, b] : g.edges) {
        if (a == b)
            continue;
        adj[a] |= 1ull << b;
        adj[b] |= 1ull << a;
    }
    MwisSolver s(g.weights, adj);
    const std::uint64_t all = n == 64 ? ~0ull : (1ull << n) - 1;
    return s.solve(all);
}

std::int64_t block_contribution(const TaskGraph& task, const TaskClassification& cls, int block, int set,
                                CountMode mode) {
    std::set<std::uint64_t> lines;
    std::int64_t sites = 0;
    for (std::size_t j = 0; j < task.blocks[block].accesses.size(); ++j) {
        const auto& a = cls.accesses[task.access_flat(block, static_cast<int>(j))];
        if (!visible(a) || a.l2_set != set)
            continue;
        lines.insert(a.l2_line);
        ++sites;
    }
    return mode == CountMode::Distinct ? static_cast<std::int64_t>(lines.size()) : sites;
}

IntervalSeq target_window(const JobContext& job, const TaskClassification& cls, int flat) {
    const auto& m = cls.accesses[flat];
    if (m.l2 == Chmc::PS)
        return job.loop_window(m.scope_loop);
    Cycles lo = job.bba[m.block].items.front().lo;
    for (const auto& a : cls.accesses)
        if (a.l2_line == m.l2_line)
            lo = std::min(lo, job.bba[a.block].items.front().lo);
    return IntervalSeq{{lo, job.bba[m.block].items.back().hi}};
}

std::vector<int> collect_overlap_set(const OverlapSite& target, const ForeignJob& f, int set, OverlapSemantics sem) {
    std::vector<int> out;
    if (!intervals_overlap(target.lifetime, f.ctx->lifetime))
        return out;
    for (int b = 0; b < static_cast<int>(f.task->blocks.size()); ++b) {
        if (block_contribution(*f.task, *f.cls, b, set, CountMode::Access) == 0)
            continue;
        if (hierarchical_overlap(target, f.ctx->site(b), sem).result)
            out.push_back(b);
    }
    return out;
}

std::int64_t job_contribution(const ForeignJob& f, const std::vector<int>& blocks, int set,
                              const InterferenceOptions& opt) {
    if (blocks.empty())
        return 0;
    ExclusionGraph g;
    for (int b : blocks)
        g.weights.push_back(block_contribution(*f.task, *f.cls, b, set, opt.count));
    std::int64_t bound = 0;
    if (opt.use_mwis) {
        // exclusivity only holds within one pass; blocks inside loops may run in different iterations
        for (std::size_t i = 0; i < blocks.size(); ++i)
            for (std::size_t j = i + 1; j < blocks.size(); ++j)
                if (f.task->innermost_loop(blocks[i]) < 0 && f.task->innermost_loop(blocks[j]) < 0 &&
                    f.task->exclusive(blocks[i], blocks[j]))
                    g.edges.push_back({static_cast<int>(i), static_cast<int>(j)});
        bound = mwis_bound(g, opt.mwis_cap);
    } else {
        bound = std::accumulate(g.weights.begin(), g.weights.end(), std::int64_t{0});
    }
    if (opt.count == CountMode::Distinct) {
        std::set<std::uint64_t> lines;
        for (int b : blocks)
            for (std::size_t j = 0; j < f.task->blocks[b].accesses.size(); ++j) {
                const auto& a = f.cls->accesses[f.task->access_flat(b, static_cast<int>(j))];
                if (visible(a) && a.l2_set == set)
                    lines.insert(a.l2_line);
            }
        bound = std::min<std::int64_t>(bound, static_cast<std::int64_t>(lines.size()));
    }
    return bound;
}

std::int64_t combine_core(const std::vector<const ForeignJob*>& jobs, const std::vector<std::int64_t>& contrib,
                          bool et_max_rule) {
    std::int64_t total = 0;
    std::vector<int> et;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (contrib[i] == 0)
            continue;
        if (et_max_rule && jobs[i]->trigger == Trigger::ET)
            et.push_back(static_cast<int>(i));
        else
            total += contrib[i];
    }
    // connected components of intersecting release windows
    std::sort(et.begin(), et.end(), [&](int a, int b) {
        return jobs[a]->release.lo < jobs[b]->release.lo ||
               (jobs[a]->release.lo == jobs[b]->release.lo && a < b);
    });
    std::size_t i = 0;
    while (i < et.size()) {
        Cycles reach = jobs[et[i]]->release.hi;
        std::int64_t best = contrib[et[i]];
        std::size_t j = i + 1;
        while (j < et.size() && jobs[et[j]]->release.lo <= reach) {
            reach = std::max(reach, jobs[et[j]]->release.hi);
            best = std::max(best, contrib[et[j]]);
            ++j;
        }
        total += best;
        i = j;
    }
    return total;
}

InterferenceRecord interference_bound(const JobContext& target, const TaskClassification& cls, int flat,
                                      const std::vector<ForeignJob>& foreign, const InterferenceOptions& opt) {
    InterferenceRecord rec;
    const auto& m = cls.accesses[flat];
    const IntervalSeq window = target_window(target, cls, flat);
    const OverlapSite site{target.lifetime, std::nullopt, &window};
    std::vector<int> cores;
    for (const auto& f : foreign)
        cores.push_back(f.core);
    std::sort(cores.begin(), cores.end());
    cores.erase(std::unique(cores.begin(), cores.end()), cores.end());
    for (int c : cores) {
        std::vector<const ForeignJob*> jobs;
        std::vector<std::int64_t> contrib;
        for (const auto& f : foreign) {
            if (f.core != c)
                continue;
            auto blocks = collect_overlap_set(site, f, m.l2_set, opt.semantics);
            if (blocks.empty())
                continue;
            for (int b : blocks)
                rec.raw_sum += block_contribution(*f.task, *f.cls, b, m.l2_set, opt.count);
            const auto v = job_contribution(f, blocks, m.l2_set, opt);
            rec.after_mwis += v;
            if (v > 0)
                ++rec.jobs;
            jobs.push_back(&f);
            contrib.push_back(v);
        }
        rec.bound += combine_core(jobs, contrib, opt.et_max_rule);
    }
    return rec;
}

std::int64_t task_level_bound(const JobContext& target, const TaskClassification& cls, int flat,
                              const std::vector<ForeignJob>& foreign, CountMode mode) {
    const int set = cls.accesses[flat].l2_set;
    std::int64_t total = 0;
    for (const auto& f : foreign) {
        if (!intervals_overlap(target.lifetime, f.ctx->lifetime))
            continue;
        std::set<std::uint64_t> lines;
        std::int64_t sites = 0;
        for (const auto& a : f.cls->accesses)
            if (visible(a) && a.l2_set == set) {
                lines.insert(a.l2_line);
                ++sites;
            }
        total += mode == CountMode::Distinct ? static_cast<std::int64_t>(lines.size()) : sites;
    }
    return total;
}

}  // namespace tsc
