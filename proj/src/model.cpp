#include "tsc/model.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <sstream>

namespace tsc {

namespace {

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) {
        if (!out.empty())
            out += "; ";
        out += l;
    }
    return out;
}

bool is_pow2(long v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

ValidationError::ValidationError(std::vector<std::string> diagnostics)
    : std::runtime_error(join_lines(diagnostics)), diagnostics_(std::move(diagnostics)) { }

Interval IntervalSeq::hull() const {
    Interval h = items.front();
    for (const auto& it : items) {
        h.lo = std::min(h.lo, it.lo);
        h.hi = std::max(h.hi, it.hi);
    }
    return h;
}

int map_address_to_set(std::uint64_t address, const CacheLevelConfig& level) {
    return level.set_of_line(level.line_of(address));
}

const char* to_string(Trigger t) { return t == Trigger::ET ? "ET" : "TT"; }

std::vector<std::string> validate(const SystemSpec& s) {
    std::vector<std::string> d;
    auto level = [&](const CacheLevelConfig& c, const char* name) {
        if (!is_pow2(c.sets) || !is_pow2(c.ways) || !is_pow2(c.line_size))
            d.push_back(std::string(name) + ": sets, ways and line size must be powers of two");
        if (c.hit_latency < 1)
            d.push_back(std::string(name) + ": hit latency must be >= 1");
    };
    if (s.core_count < 1)
        d.push_back("system: core count must be >= 1");
    level(s.l1, "l1");
    level(s.l2, "l2");
    if (!(s.mem_latency > s.l2.hit_latency && s.l2.hit_latency > s.l1.hit_latency))
        d.push_back("system: latencies must satisfy mem > l2 hit > l1 hit");
    if (s.base_cpi < 1)
        d.push_back("system: base cpi must be >= 1");
    for (std::size_t i = 1; i < s.period_table.size(); ++i)
        if (s.period_table[i] <= s.period_table[i - 1]) {
            d.push_back("system: period table must be strictly increasing");
            break;
        }
    if (!s.period_table.empty() && s.period_table.front() <= 0)
        d.push_back("system: periods must be positive");
    if (s.phase3_threshold < 1)
        d.push_back("system: phase3 threshold must be >= 1");
    if (s.refinement_passes < 1)
        d.push_back("system: refinement passes must be >= 1");
    return d;
}

// ---------------------------------------------------------------------------
// TaskGraph validation

namespace {

struct Resolved {
    std::map<int, int> idx;   // block id -> index
    std::vector<std::vector<int>> succ, pred;
};

// Natural loop of back edge tail->head: head plus every block reaching tail
// without passing through head.
std::vector<int> natural_loop(const Resolved& r, int head, int tail) {
    std::vector<char> in(r.succ.size(), 0);
    in[head] = 1;
    std::vector<int> stack;
    if (!in[tail]) {
        in[tail] = 1;
        stack.push_back(tail);
    }
    while (!stack.empty()) {
        int b = stack.back();
        stack.pop_back();
        for (int p : r.pred[b])
            if (!in[p]) {
                in[p] = 1;
                stack.push_back(p);
            }
    }
    std::vector<int> body;
    for (std::size_t i = 0; i < in.size(); ++i)
        if (in[i])
            body.push_back(static_cast<int>(i));
    return body;
}

}  // namespace

std::vector<std::string> TaskGraph::validate() const {
    std::vector<std::string> d;
    const std::string where = "task '" + id + "': ";
    auto err = [&](const std::string& m) { d.push_back(where + m); };

    Resolved r;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (!r.idx.emplace(blocks[i].id, static_cast<int>(i)).second)
            err("duplicate block id " + std::to_string(blocks[i].id));
        const auto& b = blocks[i];
        if (b.instructions < static_cast<int>(b.accesses.size()))
            err("block " + std::to_string(b.id) + " has fewer instructions than accesses");
    }
    {
        std::set<int> ids;
        for (const auto& b : blocks)
            for (const auto& a : b.accesses)
                if (!ids.insert(a.id).second)
                    err("duplicate access id " + std::to_string(a.id));
    }
    if (blocks.empty()) {
        err("no blocks");
        return d;
    }
    if (!r.idx.count(entry_block))
        err("entry block " + std::to_string(entry_block) + " does not exist");
    if (!r.idx.count(exit_block))
        err("exit block " + std::to_string(exit_block) + " does not exist");

    r.succ.assign(blocks.size(), {});
    r.pred.assign(blocks.size(), {});
    std::set<std::pair<int, int>> seen;
    for (auto [u, v] : edges) {
        if (!r.idx.count(u) || !r.idx.count(v)) {
            err("edge " + std::to_string(u) + "->" + std::to_string(v) + " references an unknown block");
            continue;
        }
        if (!seen.insert({u, v}).second) {
            err("duplicate edge " + std::to_string(u) + "->" + std::to_string(v));
            continue;
        }
        r.succ[r.idx[u]].push_back(r.idx[v]);
        r.pred[r.idx[v]].push_back(r.idx[u]);
    }
    if (!d.empty())
        return d;

    const int entry_i = r.idx[entry_block];
    const int exit_i = r.idx[exit_block];
    if (!r.pred[entry_i].empty())
        err("entry block has predecessors");
    if (!r.succ[exit_i].empty())
        err("exit block has successors");

    // Loops.
    std::map<int, int> loop_idx;
    for (std::size_t i = 0; i < loops.size(); ++i)
        if (!loop_idx.emplace(loops[i].id, static_cast<int>(i)).second)
            err("duplicate loop id " + std::to_string(loops[i].id));
    std::vector<std::vector<int>> bodies(loops.size());
    std::set<std::pair<int, int>> back;
    std::set<int> heads, tails;
    bool loops_ok = true;
    for (std::size_t i = 0; i < loops.size(); ++i) {
        const auto& L = loops[i];
        const std::string ln = "loop " + std::to_string(L.id) + ": ";
        if (!r.idx.count(L.head) || !r.idx.count(L.tail)) {
            err(ln + "head or tail block does not exist");
            loops_ok = false;
            continue;
        }
        if (L.back_edge != std::make_pair(L.tail, L.head) || !seen.count(L.back_edge)) {
            err(ln + "back edge must be an existing edge tail->head");
            loops_ok = false;
            continue;
        }
        if (L.min_bound < 0 || L.min_bound > L.max_bound || L.max_bound < 1)
            err(ln + "bounds must satisfy 0 <= min <= max and max >= 1");
        if (!heads.insert(L.head).second)
            err(ln + "block " + std::to_string(L.head) + " heads more than one loop");
        if (!tails.insert(L.tail).second)
            err(ln + "block " + std::to_string(L.tail) + " is the tail of more than one loop");
        if (L.parent && !loop_idx.count(*L.parent))
            err(ln + "unknown parent loop " + std::to_string(*L.parent));
        back.insert(L.back_edge);
        const int h = r.idx[L.head], t = r.idx[L.tail];
        bodies[i] = natural_loop(r, h, t);
    }
    if (!loops_ok || !d.empty())
        return d;

    for (std::size_t i = 0; i < loops.size(); ++i) {
        const auto& L = loops[i];
        const std::string ln = "loop " + std::to_string(L.id) + ": ";
        const int h = r.idx[L.head], t = r.idx[L.tail];
        std::vector<char> in(blocks.size(), 0);
        for (int b : bodies[i])
            in[b] = 1;
        bool tail_exits = false;
        for (int u = 0; u < static_cast<int>(blocks.size()); ++u)
            for (int v : r.succ[u]) {
                if (in[v] && !in[u] && v != h)
                    err(ln + "irreducible: body entered at non-head block " + std::to_string(blocks[v].id));
                if (v == h && in[u] && u != t)
                    err(ln + "irreducible: more than one back edge into head");
                if (in[u] && !in[v]) {
                    if (u != t)
                        err(ln + "loop exit from non-tail block " + std::to_string(blocks[u].id));
                    else
                        tail_exits = true;
                }
            }
        if (!tail_exits)
            err(ln + "tail has no exit edge");
    }
    if (!d.empty())
        return d;

    // Nesting must agree with the declared parents.
    for (std::size_t i = 0; i < loops.size(); ++i) {
        const std::string ln = "loop " + std::to_string(loops[i].id) + ": ";
        int smallest = -1;
        for (std::size_t j = 0; j < loops.size(); ++j) {
            if (i == j)
                continue;
            const auto& a = bodies[i];
            const auto& b = bodies[j];
            bool a_in_b = std::includes(b.begin(), b.end(), a.begin(), a.end());
            bool b_in_a = std::includes(a.begin(), a.end(), b.begin(), b.end());
            std::vector<int> common;
            std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
            if (!common.empty() && !a_in_b && !b_in_a)
                err(ln + "body partially overlaps loop " + std::to_string(loops[j].id));
            if (a_in_b && !b_in_a) {
                if (smallest < 0 || bodies[j].size() < bodies[smallest].size())
                    smallest = static_cast<int>(j);
            }
            if (a_in_b && b_in_a)
                err(ln + "same body as loop " + std::to_string(loops[j].id));
        }
        std::optional<int> expect;
        if (smallest >= 0)
            expect = loops[smallest].id;
        if (expect != loops[i].parent)
            err(ln + "declared parent does not match loop nesting");
    }
    if (!d.empty())
        return d;

    // Acyclic once back edges are removed; reachability.
    std::vector<int> indeg(blocks.size(), 0);
    for (int u = 0; u < static_cast<int>(blocks.size()); ++u)
        for (int v : r.succ[u])
            if (!back.count({blocks[u].id, blocks[v].id}))
                ++indeg[v];
    std::queue<int> q;
    for (int b = 0; b < static_cast<int>(blocks.size()); ++b)
        if (indeg[b] == 0)
            q.push(b);
    int visited = 0;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        ++visited;
        for (int v : r.succ[u])
            if (!back.count({blocks[u].id, blocks[v].id}) && --indeg[v] == 0)
                q.push(v);
    }
    if (visited != static_cast<int>(blocks.size())) {
        err("irreducible: cycle not covered by a declared loop back edge");
        return d;
    }
    auto reach = [&](int from, const std::vector<std::vector<int>>& adj) {
        std::vector<char> seen_b(blocks.size(), 0);
        std::vector<int> st{from};
        seen_b[from] = 1;
        while (!st.empty()) {
            int u = st.back();
            st.pop_back();
            for (int v : adj[u])
                if (!seen_b[v]) {
                    seen_b[v] = 1;
                    st.push_back(v);
                }
        }
        return seen_b;
    };
    auto fwd = reach(entry_i, r.succ);
    auto bwd = reach(exit_i, r.pred);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        if (!fwd[b])
            err("block " + std::to_string(blocks[b].id) + " unreachable from entry");
        else if (!bwd[b])
            err("block " + std::to_string(blocks[b].id) + " cannot reach exit");
    }

    // Exclusive pairs: existing, distinct, and never on one acyclic path.
    std::vector<std::vector<int>> dag(blocks.size());
    for (int u = 0; u < static_cast<int>(blocks.size()); ++u)
        for (int v : r.succ[u])
            if (!back.count({blocks[u].id, blocks[v].id}))
                dag[u].push_back(v);
    for (auto [a, b] : exclusive_pairs) {
        const std::string pn = "exclusive pair (" + std::to_string(a) + "," + std::to_string(b) + "): ";
        if (!r.idx.count(a) || !r.idx.count(b)) {
            err(pn + "unknown block");
            continue;
        }
        if (a == b) {
            err(pn + "block paired with itself");
            continue;
        }
        int ia = r.idx[a], ib = r.idx[b];
        if (reach(ia, dag)[ib] || reach(ib, dag)[ia])
            err(pn + "blocks lie on a common path");
    }
    return d;
}

void TaskGraph::finalize() {
    auto diags = validate();
    if (!diags.empty())
        throw ValidationError(std::move(diags));

    const int n = static_cast<int>(blocks.size());
    std::map<int, int> idx;
    for (int i = 0; i < n; ++i)
        idx[blocks[i].id] = i;
    succ_.assign(n, {});
    pred_.assign(n, {});
    for (auto [u, v] : edges) {
        succ_[idx[u]].push_back(idx[v]);
        pred_[idx[v]].push_back(idx[u]);
    }
    for (auto& s : succ_)
        std::sort(s.begin(), s.end());
    for (auto& p : pred_)
        std::sort(p.begin(), p.end());
    entry_idx_ = idx[entry_block];
    exit_idx_ = idx[exit_block];

    Resolved r{idx, succ_, pred_};
    std::map<int, int> lidx;
    for (std::size_t i = 0; i < loops.size(); ++i)
        lidx[loops[i].id] = static_cast<int>(i);
    loop_nodes_.assign(loops.size(), {});
    back_edges_.clear();
    for (std::size_t i = 0; i < loops.size(); ++i) {
        auto& L = loop_nodes_[i];
        L.head = idx[loops[i].head];
        L.tail = idx[loops[i].tail];
        L.min_bound = loops[i].min_bound;
        L.max_bound = loops[i].max_bound;
        L.parent = loops[i].parent ? lidx[*loops[i].parent] : -1;
        L.body = natural_loop(r, L.head, L.tail);
        back_edges_.emplace_back(L.tail, L.head);
    }
    for (std::size_t i = 0; i < loops.size(); ++i)
        if (loop_nodes_[i].parent >= 0)
            loop_nodes_[loop_nodes_[i].parent].children.push_back(static_cast<int>(i));
    for (auto& L : loop_nodes_) {
        int dpt = 0;
        for (int p = L.parent; p >= 0; p = loop_nodes_[p].parent)
            ++dpt;
        L.depth = dpt;
    }
    innermost_.assign(n, -1);
    for (int b = 0; b < n; ++b) {
        int best = -1;
        for (std::size_t i = 0; i < loop_nodes_.size(); ++i) {
            const auto& body = loop_nodes_[i].body;
            if (std::binary_search(body.begin(), body.end(), b) &&
                (best < 0 || body.size() < loop_nodes_[best].body.size()))
                best = static_cast<int>(i);
        }
        innermost_[b] = best;
    }
    order_.resize(loop_nodes_.size());
    for (std::size_t i = 0; i < order_.size(); ++i)
        order_[i] = static_cast<int>(i);
    std::stable_sort(order_.begin(), order_.end(),
                     [&](int a, int b) { return loop_nodes_[a].depth > loop_nodes_[b].depth; });

    // Deterministic topological order over forward edges.
    std::vector<int> indeg(n, 0);
    for (int u = 0; u < n; ++u)
        for (int v : succ_[u])
            if (!is_back_edge(u, v))
                ++indeg[v];
    std::priority_queue<int, std::vector<int>, std::greater<>> q;
    for (int b = 0; b < n; ++b)
        if (indeg[b] == 0)
            q.push(b);
    topo_.clear();
    while (!q.empty()) {
        int u = q.top();
        q.pop();
        topo_.push_back(u);
        for (int v : succ_[u])
            if (!is_back_edge(u, v) && --indeg[v] == 0)
                q.push(v);
    }

    access_offset_.assign(n + 1, 0);
    access_pos_.clear();
    for (int b = 0; b < n; ++b) {
        access_offset_[b + 1] = access_offset_[b] + static_cast<int>(blocks[b].accesses.size());
        for (int j = 0; j < static_cast<int>(blocks[b].accesses.size()); ++j)
            access_pos_.emplace_back(b, j);
    }
    exclusive_idx_.clear();
    for (auto [a, b] : exclusive_pairs) {
        int ia = idx[a], ib = idx[b];
        exclusive_idx_.emplace_back(std::min(ia, ib), std::max(ia, ib));
    }
    std::sort(exclusive_idx_.begin(), exclusive_idx_.end());
    finalized_ = true;
}

int TaskGraph::block_index(int block_id) const {
    for (std::size_t i = 0; i < blocks.size(); ++i)
        if (blocks[i].id == block_id)
            return static_cast<int>(i);
    return -1;
}

bool TaskGraph::is_back_edge(int u, int v) const {
    return std::find(back_edges_.begin(), back_edges_.end(), std::make_pair(u, v)) != back_edges_.end();
}

bool TaskGraph::exclusive(int a, int b) const {
    return std::binary_search(exclusive_idx_.begin(), exclusive_idx_.end(),
                              std::make_pair(std::min(a, b), std::max(a, b)));
}

std::int64_t TaskGraph::iteration_weight(int b) const {
    std::int64_t w = 1;
    for (int l = innermost_[b]; l >= 0; l = loop_nodes_[l].parent)
        w *= loop_nodes_[l].max_bound;
    return w;
}

}  // namespace tsc
