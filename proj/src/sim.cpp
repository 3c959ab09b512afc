#include "tsc/sim.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace tsc {

const char* to_string(HitLevel h) {
    switch (h) {
    case HitLevel::L1: return "L1";
    case HitLevel::L2: return "L2";
    case HitLevel::Mem: return "MEM";
    }
    return "?";
}

namespace {

class LruCache {
public:
    explicit LruCache(const CacheLevelConfig& c) : cfg_(c), sets_(static_cast<std::size_t>(c.sets)) { }

    bool access(std::uint64_t address) {
        const std::uint64_t line = cfg_.line_of(address);
        auto& s = sets_[static_cast<std::size_t>(cfg_.set_of_line(line))];
        auto it = std::find(s.begin(), s.end(), line);
        const bool hit = it != s.end();
        if (hit)
            s.erase(it);
        else if (static_cast<int>(s.size()) == cfg_.ways)
            s.pop_back();
        s.insert(s.begin(), line);
        return hit;
    }
    void clear() {
        for (auto& s : sets_)
            s.clear();
    }

private:
    CacheLevelConfig cfg_;
    std::vector<std::vector<std::uint64_t>> sets_;
};

struct LoopRoles {
    std::vector<int> head_of, tail_of;  // block -> loop index or -1

    explicit LoopRoles(const TaskGraph& t) : head_of(t.blocks.size(), -1), tail_of(t.blocks.size(), -1) {
        const auto& loops = t.loop_nodes();
        for (std::size_t l = 0; l < loops.size(); ++l) {
            head_of[loops[l].head] = static_cast<int>(l);
            tail_of[loops[l].tail] = static_cast<int>(l);
        }
    }
};

Cycles release_of(const WorkloadBundle& b, const JobInstance& inst) {
    const auto& c = *std::find_if(b.chains.begin(), b.chains.end(), [&](const ChainSpec& x) { return x.id == inst.chain; });
    const Cycles base = static_cast<Cycles>(inst.period_index) * *c.period;
    if (c.trigger == Trigger::TT)
        return base + c.offsets->at(inst.task_index);
    return base;
}

}  // namespace

std::vector<int> draw_path(const TaskGraph& task, const TaskAnalysis& ta, PathPolicy policy, std::mt19937_64& rng) {
    const auto& loops = task.loop_nodes();
    const LoopRoles roles(task);
    std::vector<int> count(loops.size(), 0), done(loops.size(), 0), path;
    auto weight = [&](int from, int s) {
        const int l = roles.head_of[s];
        if (l >= 0 && !task.is_back_edge(from, s))
            return ta.ctx->summary.virtual_cost[l].worst;
        return ta.init.worst[s];
    };
    int b = task.entry();
    while (true) {
        path.push_back(b);
        if (b == task.exit())
            break;
        std::vector<int> cand;
        const int tl = roles.tail_of[b];
        int next = -1;
        if (tl >= 0 && done[tl] < count[tl]) {
            next = loops[tl].head;
            ++done[tl];
        } else {
            for (int s : task.succ(b))
                if (!task.is_back_edge(b, s))
                    cand.push_back(s);
            if (policy == PathPolicy::WorstBiased) {
                next = cand.front();
                for (int s : cand)
                    if (weight(b, s) > weight(b, next))
                        next = s;
            } else {
                next = cand[std::uniform_int_distribution<std::size_t>(0, cand.size() - 1)(rng)];
            }
            if (const int l = roles.head_of[next]; l >= 0) {
                count[l] = policy == PathPolicy::WorstBiased
                               ? loops[l].max_bound
                               : std::uniform_int_distribution<int>(loops[l].min_bound, loops[l].max_bound)(rng);
                done[l] = 1;
            }
        }
        b = next;
    }
    return path;
}

std::optional<std::vector<std::vector<int>>> enumerate_task_paths(const TaskGraph& task, std::int64_t limit) {
    const auto& loops = task.loop_nodes();
    const LoopRoles roles(task);
    std::vector<std::vector<int>> out;
    std::vector<int> count(loops.size(), 0), done(loops.size(), 0), path;
    bool overflow = false;
    std::function<void(int)> go = [&](int b) {
        if (overflow)
            return;
        path.push_back(b);
        if (b == task.exit()) {
            if (static_cast<std::int64_t>(out.size()) >= limit)
                overflow = true;
            else
                out.push_back(path);
        } else if (const int tl = roles.tail_of[b]; tl >= 0 && done[tl] < count[tl]) {
            ++done[tl];
            go(loops[tl].head);
            --done[tl];
        } else {
            for (int s : task.succ(b)) {
                if (task.is_back_edge(b, s))
                    continue;
                if (const int l = roles.head_of[s]; l >= 0) {
                    const int sc = count[l], sd = done[l];
                    for (int c = loops[l].min_bound; c <= loops[l].max_bound; ++c) {
                        count[l] = c;
                        done[l] = 1;
                        go(s);
                    }
                    count[l] = sc;
                    done[l] = sd;
                } else {
                    go(s);
                }
            }
        }
        path.pop_back();
    };
    go(task.entry());
    if (overflow)
        return std::nullopt;
    return out;
}

SimTrace simulate_paths(const WorkloadBundle& b, const Analysis& a, const std::vector<std::vector<int>>& paths,
                        bool record_accesses) {
    SimTrace tr;
    tr.jobs.resize(a.jobs.size());
    const SystemSpec& sys = b.system;
    constexpr Cycles kIdle = std::numeric_limits<Cycles>::max();

    struct Core {
        std::vector<int> jobs;
        std::size_t next_job = 0;
        int job = -1;
        std::size_t pos = 0, acc = 0;
        Cycles t = 0, block_start = 0, free = 0, pending = 0;
        LruCache l1;
    };
    std::vector<Core> cores;
    for (int c = 0; c < sys.core_count; ++c)
        cores.push_back({{}, 0, -1, 0, 0, 0, 0, 0, 0, LruCache(sys.l1)});
    for (std::size_t j = 0; j < a.jobs.size(); ++j) {
        cores[a.jobs[j].inst.core].jobs.push_back(static_cast<int>(j));
        tr.jobs[j].path = paths.at(j);
    }
    LruCache l2(sys.l2);

    // moves a core forward to its next access; returns its time or kIdle
    auto advance = [&](Core& c) -> Cycles {
        while (true) {
            if (c.job < 0) {
                if (c.next_job == c.jobs.size())
                    return kIdle;
                c.job = c.jobs[c.next_job++];
                const auto& inst = a.jobs[c.job].inst;
                auto& jt = tr.jobs[c.job];
                const bool chained = inst.task_index > 0 &&
                                     b.chains[a.jobs[c.job].chain].trigger == Trigger::ET;
                jt.release = chained ? c.free : release_of(b, inst);
                jt.start = std::max(jt.release, c.free);
                if (jt.start > jt.release)
                    tr.overruns.push_back(job_name(inst));
                c.l1.clear();
                c.pos = c.acc = 0;
                c.t = c.block_start = jt.start;
            }
            auto& jt = tr.jobs[c.job];
            if (c.pos == jt.path.size()) {
                jt.finish = c.t;
                c.free = c.t;
                c.job = -1;
                continue;
            }
            const auto& bb = a.tasks[a.jobs[c.job].task].task->blocks[jt.path[c.pos]];
            if (c.acc < bb.accesses.size()) {
                c.pending = c.t + sys.base_cpi;
                return c.pending;
            }
            c.t += static_cast<Cycles>(bb.instructions - static_cast<int>(bb.accesses.size())) * sys.base_cpi;
            jt.blocks.push_back({jt.path[c.pos], c.block_start, c.t});
            ++c.pos;
            c.acc = 0;
            c.block_start = c.t;
        }
    };

    std::vector<Cycles> next(cores.size());
    for (std::size_t c = 0; c < cores.size(); ++c)
        next[c] = advance(cores[c]);
    while (true) {
        const auto it = std::min_element(next.begin(), next.end());
        if (*it == kIdle)
            break;
        const std::size_t ci = static_cast<std::size_t>(it - next.begin());
        Core& c = cores[ci];
        const TaskGraph& task = *a.tasks[a.jobs[c.job].task].task;
        auto& jt = tr.jobs[c.job];
        const int blk = jt.path[c.pos];
        const auto& acc = task.blocks[blk].accesses[c.acc];
        c.t = c.pending;
        HitLevel lvl;
        if (c.l1.access(acc.address)) {
            lvl = HitLevel::L1;
            c.t += sys.l1.hit_latency;
        } else {
            ++tr.l2_accesses;
            if (l2.access(acc.address)) {
                ++tr.l2_hits;
                lvl = HitLevel::L2;
                c.t += sys.l2.hit_latency;
            } else {
                lvl = HitLevel::Mem;
                c.t += sys.mem_latency;
            }
        }
        if (record_accesses)
            tr.accesses.push_back({c.pending, c.job, blk, task.access_flat(blk, static_cast<int>(c.acc)),
                                   static_cast<int>(jt.blocks.size()), lvl});
        ++c.acc;
        next[ci] = advance(c);
    }
    return tr;
}

SimTrace simulate(const WorkloadBundle& b, const Analysis& a, const SimConfig& cfg) {
    std::vector<std::vector<int>> paths(a.jobs.size());
    for (std::size_t j = 0; j < a.jobs.size(); ++j) {
        const auto& ja = a.jobs[j];
        std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                          static_cast<std::uint32_t>(ja.inst.core), static_cast<std::uint32_t>(j)};
        std::mt19937_64 rng(seq);
        paths[j] = draw_path(*a.tasks[ja.task].task, a.tasks[ja.task], cfg.policy, rng);
    }
    return simulate_paths(b, a, paths, cfg.record_accesses);
}

std::int64_t simulate_all_paths(const WorkloadBundle& b, const Analysis& a,
                                const std::function<void(const SimTrace&)>& visit, std::int64_t limit) {
    std::vector<std::vector<std::vector<int>>> per_task(a.tasks.size());
    for (std::size_t t = 0; t < a.tasks.size(); ++t) {
        auto p = enumerate_task_paths(*a.tasks[t].task, limit);
        if (!p)
            throw std::length_error("task '" + a.tasks[t].task->id + "' has too many paths");
        per_task[t] = std::move(*p);
    }
    std::int64_t total = 1;
    for (const auto& ja : a.jobs) {
        total *= static_cast<std::int64_t>(per_task[ja.task].size());
        if (total > limit)
            throw std::length_error("too many path combinations for exhaustive simulation");
    }
    std::vector<std::size_t> odo(a.jobs.size(), 0);
    std::vector<std::vector<int>> paths(a.jobs.size());
    for (std::int64_t n = 0; n < total; ++n) {
        for (std::size_t j = 0; j < a.jobs.size(); ++j)
            paths[j] = per_task[a.jobs[j].task][odo[j]];
        visit(simulate_paths(b, a, paths));
        for (std::size_t j = 0; j < odo.size(); ++j) {
            if (++odo[j] < per_task[a.jobs[j].task].size())
                break;
            odo[j] = 0;
        }
    }
    return total;
}

std::vector<Violation> check_safety(const SimTrace& trace, const WorkloadBundle& b, const Analysis& a) {
    std::vector<Violation> out;
    for (const auto& o : trace.overruns)
        out.push_back({"overrun", o, "job started after its release"});
    auto num = [](Cycles v) { return std::to_string(v); };

    for (auto m : a.modes)
        for (std::size_t j = 0; j < a.jobs.size(); ++j) {
            const auto& jt = trace.jobs[j];
            const auto& r = a.result(m, static_cast<int>(j));
            const Cycles lat = jt.finish - jt.start;
            if (lat > r.wcet)
                out.push_back({"job-latency", job_name(a.jobs[j].inst),
                               std::string(to_string(m)) + " wcet " + num(r.wcet) + " < observed " + num(lat)});
            if (lat < r.bcet)
                out.push_back({"job-bcet", job_name(a.jobs[j].inst),
                               std::string(to_string(m)) + " bcet " + num(r.bcet) + " > observed " + num(lat)});
        }

    for (const auto& cr : a.chains) {
        std::size_t ci = 0;
        while (b.chains[ci].id != cr.chain)
            ++ci;
        const auto& c = b.chains[ci];
        const int n = static_cast<int>(c.tasks.size());
        std::size_t base = 0;
        while (a.jobs[base].chain != static_cast<int>(ci))
            ++base;
        for (std::size_t k = 0; k < cr.latencies.size(); ++k) {
            const Cycles observed = trace.jobs[base + k * n + n - 1].finish - static_cast<Cycles>(k) * *c.period;
            if (observed > cr.latencies[k] || observed > cr.mel)
                out.push_back({"chain-latency", cr.chain + "/k" + std::to_string(k),
                               std::string(to_string(cr.mode)) + " bound " + num(cr.latencies[k]) + " < observed " +
                                   num(observed)});
        }
    }

    const AnalysisMode cm = a.mode_position(AnalysisMode::TSC) >= 0 ? AnalysisMode::TSC : a.modes.front();
    // persistence scope entries per job occurrence
    std::vector<std::vector<std::vector<int>>> epoch(a.jobs.size());
    for (std::size_t j = 0; j < a.jobs.size(); ++j) {
        const TaskGraph& t = *a.tasks[a.jobs[j].task].task;
        std::vector<int> cur(t.loop_nodes().size(), 0);
        int prev = -1;
        for (const auto& o : trace.jobs[j].blocks) {
            for (std::size_t l = 0; l < cur.size(); ++l)
                if (t.loop_nodes()[l].head == o.block && !(prev >= 0 && t.is_back_edge(prev, o.block)))
                    ++cur[l];
            epoch[j].push_back(cur);
            prev = o.block;
        }
    }
    std::map<std::tuple<int, int, int>, int> ps_misses;
    for (const auto& e : trace.accesses) {
        const auto& acc = a.result(cm, e.job).cls.accesses[e.flat];
        const std::string where = job_name(a.jobs[e.job].inst);
        if (acc.l1 == Chmc::AH && e.level != HitLevel::L1)
            out.push_back({"l1-ah-miss", where, "access " + std::to_string(acc.access_id)});
        if (acc.refined == Chmc::AH && e.level == HitLevel::Mem)
            out.push_back({"ah-miss", where, "access " + std::to_string(acc.access_id) + " at cycle " + num(e.cycle)});
        if (acc.refined == Chmc::PS && e.level == HitLevel::Mem) {
            const int ep = epoch[e.job][e.occurrence][acc.scope_loop];
            if (++ps_misses[{e.job, e.flat, ep}] > 1)
                out.push_back({"ps-miss", where, "access " + std::to_string(acc.access_id) + " at cycle " + num(e.cycle)});
        }
    }

    for (std::size_t j = 0; j < a.jobs.size(); ++j) {
        const auto& ctx = a.jobs[j].ctx;
        for (const auto& o : trace.jobs[j].blocks) {
            bool ok = false;
            for (const auto& iv : ctx.bba[o.block])
                if (iv.lo <= o.start && o.end <= iv.hi) {
                    ok = true;
                    break;
                }
            if (!ok)
                out.push_back({"coverage", job_name(a.jobs[j].inst),
                               "block " + std::to_string(ctx.task->blocks[o.block].id) + " ran [" + num(o.start) +
                                   ", " + num(o.end) + "]"});
        }
    }
    return out;
}

bool inject_fault(Analysis& a, Fault f) {
    const int pos = a.mode_position(AnalysisMode::TSC);
    if (pos < 0 || a.jobs.empty())
        return false;
    if (f == Fault::ShrinkWindow) {
        auto& ctx = a.jobs.front().ctx;
        const int entry = ctx.task->entry();
        if (ctx.bba[entry].items.empty())
            return false;
        const Cycles lo = ctx.bba[entry].items.front().lo;
        ctx.bba[entry] = IntervalSeq{Interval{lo, lo}};
        return true;
    }
    bool changed = false;
    for (auto& r : a.results[pos])
        for (auto& acc : r.cls.accesses)
            if (acc.l2_visible() && acc.refined != acc.l2) {
                acc.refined = acc.l2;
                acc.interference = 0;
                changed = true;
            }
    return changed;
}

std::optional<double> trace_hit_ratio(const SimTrace& trace) {
    if (trace.l2_accesses == 0)
        return std::nullopt;
    return static_cast<double>(trace.l2_hits) / static_cast<double>(trace.l2_accesses);
}

void attach_simulated_hit_ratio(Analysis& a, const SimTrace& trace) {
    std::map<std::string, std::pair<std::int64_t, std::int64_t>> per_chain;
    for (const auto& e : trace.accesses) {
        if (e.level == HitLevel::L1)
            continue;
        auto& p = per_chain[a.jobs[e.job].inst.chain];
        ++p.second;
        p.first += e.level == HitLevel::L2;
    }
    for (auto& cr : a.chains) {
        auto it = per_chain.find(cr.chain);
        if (it != per_chain.end() && it->second.second > 0)
            cr.simulated_hit_ratio = static_cast<double>(it->second.first) / static_cast<double>(it->second.second);
    }
}

std::string trace_csv(const SimTrace& trace, const Analysis& a) {
    std::ostringstream os;
    os << "cycle,core,job,block,access,level\n";
    for (const auto& e : trace.accesses) {
        const auto& ja = a.jobs[e.job];
        const auto& t = *a.tasks[ja.task].task;
        auto [blk, pos] = t.access_at(e.flat);
        os << e.cycle << ',' << ja.inst.core << ',' << job_name(ja.inst) << ',' << t.blocks[blk].id << ','
           << t.blocks[blk].accesses[pos].id << ',' << to_string(e.level) << '\n';
    }
    return os.str();
}

}  // namespace tsc
