#include "tsc/cost.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace tsc {

Cycles access_latency(const AccessClassification* cls, const SystemSpec& sys, CostMode mode, BestCasePolicy policy) {
    if (cls && cls->l1 == Chmc::AH)
        return sys.l1.hit_latency;
    const Cycles floor = policy == BestCasePolicy::L1Floor ? sys.l1.hit_latency : sys.l2.hit_latency;
    switch (mode) {
    case CostMode::InitBest:
    case CostMode::Best:
        return floor;
    case CostMode::InitWorst:
        return sys.mem_latency;
    case CostMode::Worst:
        if (!cls)
            throw std::invalid_argument("worst-case cost needs a classification");
        return cls->refined == Chmc::NC ? sys.mem_latency : sys.l2.hit_latency;
    }
    return sys.mem_latency;
}

Cycles block_cost(const TaskGraph& task, int block, const TaskClassification* cls, const SystemSpec& sys,
                  CostMode mode, BestCasePolicy policy) {
    const auto& bb = task.blocks.at(block);
    Cycles c = static_cast<Cycles>(bb.instructions) * sys.base_cpi;
    for (std::size_t j = 0; j < bb.accesses.size(); ++j) {
        const AccessClassification* a = nullptr;
        if (cls) {
            const int f = task.access_flat(block, static_cast<int>(j));
            if (f >= static_cast<int>(cls->accesses.size()) || cls->accesses[f].access_id != bb.accesses[j].id)
                throw std::out_of_range("no classification for access " + std::to_string(bb.accesses[j].id));
            a = &cls->accesses[f];
        } else if (mode == CostMode::Best || mode == CostMode::Worst) {
            throw std::invalid_argument("refined cost modes need a classification");
        }
        c += access_latency(a, sys, mode, policy);
    }
    return c;
}

Cycles block_ps_surcharge(const TaskGraph& task, int block, const TaskClassification& cls, const SystemSpec& sys) {
    Cycles s = 0;
    for (std::size_t j = 0; j < task.blocks[block].accesses.size(); ++j)
        if (cls.accesses[task.access_flat(block, static_cast<int>(j))].refined == Chmc::PS)
            s += sys.mem_latency - sys.l2.hit_latency;
    return s;
}

TaskCosts init_costs(const TaskGraph& task, const TaskClassification& cls, const SystemSpec& sys,
                     BestCasePolicy policy) {
    TaskCosts tc;
    const int n = static_cast<int>(task.blocks.size());
    tc.best.resize(n);
    tc.worst.resize(n);
    tc.surcharge.assign(n, 0);
    for (int b = 0; b < n; ++b) {
        tc.best[b] = block_cost(task, b, &cls, sys, CostMode::InitBest, policy);
        tc.worst[b] = block_cost(task, b, &cls, sys, CostMode::InitWorst, policy);
    }
    return tc;
}

TaskCosts refined_costs(const TaskGraph& task, const TaskClassification& cls, const SystemSpec& sys,
                        BestCasePolicy policy) {
    TaskCosts tc;
    const int n = static_cast<int>(task.blocks.size());
    tc.best.resize(n);
    tc.worst.resize(n);
    tc.surcharge.resize(n);
    for (int b = 0; b < n; ++b) {
        tc.best[b] = block_cost(task, b, &cls, sys, CostMode::Best, policy);
        tc.worst[b] = block_cost(task, b, &cls, sys, CostMode::Worst, policy);
        tc.surcharge[b] = block_ps_surcharge(task, b, cls, sys);
    }
    return tc;
}

int LevelSummary::position(CostNode n) const {
    auto it = std::find(nodes.begin(), nodes.end(), n);
    return it == nodes.end() ? -1 : static_cast<int>(it - nodes.begin());
}

void loop_path_costs(LevelSummary& lv) {
    const int n = static_cast<int>(lv.nodes.size());
    constexpr Cycles unreached = std::numeric_limits<Cycles>::min();
    std::vector<Cycles> sh(n, std::numeric_limits<Cycles>::max()), lg(n, unreached), sp(n, unreached);
    sh[lv.source] = 0;
    lg[lv.source] = 0;
    sp[lv.source] = 0;
    // nodes are stored in topological order
    for (int u = 0; u < n; ++u) {
        if (lg[u] == unreached)
            continue;
        const Cycles prefix_u = sp[u] + lv.surcharge[u];
        for (int v : lv.succ[u]) {
            if (v <= u)
                throw std::logic_error("level nodes not in topological order");
            sh[v] = std::min(sh[v], sh[u] + lv.best[u]);
            lg[v] = std::max(lg[v], lg[u] + lv.worst[u]);
            sp[v] = std::max(sp[v], prefix_u);
        }
    }
    std::vector<std::string> diags;
    for (int u = 0; u < n; ++u)
        if (lg[u] == unreached)
            diags.push_back("node " + std::to_string(u) + " unreachable within its level");
    if (!diags.empty())
        throw ValidationError(std::move(diags));
    lv.short_to = std::move(sh);
    lv.long_to = std::move(lg);
    lv.surcharge_prefix.resize(n);
    for (int u = 0; u < n; ++u)
        lv.surcharge_prefix[u] = sp[u] + lv.surcharge[u];
    lv.short_total = lv.short_to[lv.sink] + lv.best[lv.sink];
    lv.long_total = lv.long_to[lv.sink] + lv.worst[lv.sink];
    lv.surcharge_total = 0;
    for (int u = 0; u < n; ++u)
        if (!lv.nodes[u].is_loop)
            lv.surcharge_total += lv.surcharge[u];
}

VirtualCost contract_loop(const LoopNode& loop, const LevelSummary& level) {
    return {level.short_total * loop.min_bound, level.long_total * loop.max_bound + level.surcharge_total};
}

namespace {

// Representative of block b at the level of `loop` (-1 = program level):
// the block itself, or the child loop of that level containing it.
std::optional<CostNode> representative(const TaskGraph& task, int loop, int b) {
    const auto& loops = task.loop_nodes();
    int l = task.innermost_loop(b);
    if (l == loop)
        return CostNode{false, b};
    while (l >= 0 && loops[l].parent != loop)
        l = loops[l].parent;
    if (l < 0)
        return std::nullopt;  // not inside this level
    return CostNode{true, l};
}

}  // namespace

LevelSummary build_level(const TaskGraph& task, int loop, const TaskCosts& costs,
                         const std::vector<std::optional<VirtualCost>>& virtual_cost) {
    const auto& loops = task.loop_nodes();
    LevelSummary lv;
    lv.loop = loop;
    // topological order of nodes follows the task order of blocks / loop heads
    for (int b : task.topo_order()) {
        auto r = representative(task, loop, b);
        if (!r)
            continue;
        if (r->is_loop && loops[r->index].head != b)
            continue;
        lv.nodes.push_back(*r);
    }
    const int n = static_cast<int>(lv.nodes.size());
    lv.succ.assign(n, {});
    lv.best.resize(n);
    lv.worst.resize(n);
    lv.surcharge.assign(n, 0);
    for (int i = 0; i < n; ++i) {
        const auto& nd = lv.nodes[i];
        if (nd.is_loop) {
            if (!virtual_cost[nd.index])
                throw std::logic_error("loop contracted before its child loops");
            lv.best[i] = virtual_cost[nd.index]->best;
            lv.worst[i] = virtual_cost[nd.index]->worst;
        } else {
            lv.best[i] = costs.best[nd.index];
            lv.worst[i] = costs.worst[nd.index];
            lv.surcharge[i] = costs.surcharge[nd.index];
        }
    }
    for (int u = 0; u < static_cast<int>(task.blocks.size()); ++u)
        for (int v : task.succ(u)) {
            if (task.is_back_edge(u, v))
                continue;
            auto ru = representative(task, loop, u);
            auto rv = representative(task, loop, v);
            if (!ru || !rv || *ru == *rv)
                continue;
            const int pu = lv.position(*ru), pv = lv.position(*rv);
            if (std::find(lv.succ[pu].begin(), lv.succ[pu].end(), pv) == lv.succ[pu].end())
                lv.succ[pu].push_back(pv);
        }
    if (loop >= 0) {
        lv.source = lv.position({false, loops[loop].head});
        lv.sink = lv.position({false, loops[loop].tail});
    } else {
        lv.source = lv.position({false, task.entry()});
        lv.sink = lv.position({false, task.exit()});
    }
    loop_path_costs(lv);
    return lv;
}

ProgramSummary program_bounds(const TaskGraph& task, const TaskCosts& costs) {
    const auto& loops = task.loop_nodes();
    ProgramSummary ps;
    ps.loops.resize(loops.size());
    std::vector<std::optional<VirtualCost>> vc(loops.size());
    for (int l : task.loops_innermost_first()) {
        ps.loops[l] = build_level(task, l, costs, vc);
        vc[l] = contract_loop(loops[l], ps.loops[l]);
    }
    ps.top = build_level(task, -1, costs, vc);
    ps.virtual_cost.resize(loops.size());
    for (std::size_t l = 0; l < loops.size(); ++l)
        ps.virtual_cost[l] = *vc[l];
    ps.bcet = ps.top.short_total;
    ps.wcet = ps.top.long_total;
    return ps;
}

std::pair<const LevelSummary*, int> ProgramSummary::locate_block(const TaskGraph& task, int block) const {
    const int l = task.innermost_loop(block);
    const LevelSummary* lv = l < 0 ? &top : &loops[l];
    return {lv, lv->position({false, block})};
}

std::pair<const LevelSummary*, int> ProgramSummary::locate_loop(const TaskGraph& task, int loop) const {
    const int p = task.loop_nodes()[loop].parent;
    const LevelSummary* lv = p < 0 ? &top : &loops[p];
    return {lv, lv->position({true, loop})};
}

std::string export_lp(const TaskGraph& task, const TaskCosts& costs) {
    std::ostringstream os;
    const int n = static_cast<int>(task.blocks.size());
    auto x = [&](int b) { return "x" + std::to_string(task.blocks[b].id); };
    auto e = [&](int u, int v) {
        return "e" + std::to_string(task.blocks[u].id) + "_" + std::to_string(task.blocks[v].id);
    };
    os << "\\ IPET formulation of task " << task.id << "\n";
    os << "Maximize\n obj:";
    for (int b = 0; b < n; ++b)
        os << (b ? " + " : " ") << costs.worst[b] << " " << x(b);
    os << "\nSubject To\n";
    os << " entry: " << x(task.entry()) << " = 1\n";
    for (int b = 0; b < n; ++b) {
        if (b != task.entry()) {
            os << " in" << task.blocks[b].id << ":";
            for (int p : task.pred(b))
                os << " + " << e(p, b);
            os << " - " << x(b) << " = 0\n";
        }
        if (b != task.exit()) {
            os << " out" << task.blocks[b].id << ":";
            for (int s : task.succ(b))
                os << " + " << e(b, s);
            os << " - " << x(b) << " = 0\n";
        }
    }
    const auto& loops = task.loop_nodes();
    for (std::size_t l = 0; l < loops.size(); ++l) {
        const auto& L = loops[l];
        // head executions <= MaxBd * entries into the loop
        os << " bound" << l << ": " << x(L.head);
        for (int p : task.pred(L.head))
            if (!task.is_back_edge(p, L.head))
                os << " - " << L.max_bound << " " << e(p, L.head);
        os << " <= 0\n";
    }
    os << "General\n";
    for (int b = 0; b < n; ++b)
        os << " " << x(b);
    os << "\nEnd\n";
    return os.str();
}

}  // namespace tsc
