#pragma once

// Independent reference implementations used as test oracles.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <vector>

#include "tsc/model.hpp"

namespace oracle {

using tsc::Cycles;

/// Incremental task construction by block index.
struct Builder {
    tsc::TaskGraph t;
    int next_access = 0;

    explicit Builder(std::string id = "t") { t.id = std::move(id); }

    int block(int instructions, std::vector<std::uint64_t> addrs = {}) {
        tsc::BasicBlock b;
        b.id = static_cast<int>(t.blocks.size());
        b.instructions = std::max<int>(instructions, static_cast<int>(addrs.size()));
        for (auto a : addrs)
            b.accesses.push_back({next_access++, a});
        t.blocks.push_back(b);
        return b.id;
    }
    void edge(int u, int v) { t.edges.push_back({u, v}); }
    void loop(int head, int tail, int min_bd, int max_bd, std::optional<int> parent = std::nullopt) {
        tsc::LoopSpec l;
        l.id = static_cast<int>(t.loops.size());
        l.head = head;
        l.tail = tail;
        l.back_edge = {tail, head};
        l.min_bound = min_bd;
        l.max_bound = max_bd;
        l.parent = parent;
        t.loops.push_back(l);
        edge(tail, head);
    }
    tsc::TaskGraph done(int entry, int exit) {
        t.entry_block = entry;
        t.exit_block = exit;
        t.finalize();
        return t;
    }
};

/// b1(10) -> loop{ head 5 -> A 4 | B 7 -> tail 2 } x[lo,hi] -> b3(6)
inline tsc::TaskGraph diamond_program(int lo = 3, int hi = 3) {
    Builder b("diamond");
    int b1 = b.block(10), h = b.block(5), a = b.block(4), bb = b.block(7), tl = b.block(2), b3 = b.block(6);
    b.edge(b1, h);
    b.edge(h, a);
    b.edge(h, bb);
    b.edge(a, tl);
    b.edge(bb, tl);
    b.edge(tl, b3);
    b.loop(h, tl, lo, hi);
    b.t.exclusive_pairs.push_back({a, bb});
    return b.done(b1, b3);
}

struct RandomTaskParams {
    int max_depth = 2;
    int max_bound = 3;
    int max_regions = 3;
    int max_instr = 6;
    int max_accesses = 2;
    int line_pool = 12;
    int line_size = 32;
};

/// Random structured task: sequences of blocks, diamonds and loops.
class RandomTask {
public:
    RandomTask(std::mt19937_64& rng, RandomTaskParams p) : rng_(rng), p_(p) { }

    tsc::TaskGraph make(const std::string& id) {
        b_ = Builder(id);
        int entry = new_block();
        auto [f, l] = sequence(0, -1);
        b_.edge(entry, f);
        int exit = new_block();
        b_.edge(l, exit);
        return b_.done(entry, exit);
    }

private:
    int uni(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    int new_block() {
        std::vector<std::uint64_t> addrs;
        const int n = uni(0, p_.max_accesses);
        for (int i = 0; i < n; ++i)
            addrs.push_back(static_cast<std::uint64_t>(uni(0, p_.line_pool - 1)) * p_.line_size + uni(0, 3) * 4);
        return b_.block(uni(static_cast<int>(addrs.size()), p_.max_instr), addrs);
    }

    std::pair<int, int> sequence(int depth, int parent) {
        const int n = uni(1, p_.max_regions);
        std::pair<int, int> out{-1, -1};
        for (int i = 0; i < n; ++i) {
            auto r = region(depth, parent);
            if (out.first < 0)
                out.first = r.first;
            else
                b_.edge(out.second, r.first);
            out.second = r.second;
        }
        return out;
    }

    std::pair<int, int> region(int depth, int parent) {
        const int kind = uni(0, depth < p_.max_depth ? 2 : 1);
        if (kind == 0) {
            int x = new_block();
            return {x, x};
        }
        if (kind == 1) {
            int br = new_block(), a = new_block(), c = new_block(), j = new_block();
            b_.edge(br, a);
            b_.edge(br, c);
            b_.edge(a, j);
            b_.edge(c, j);
            b_.t.exclusive_pairs.push_back({a, c});
            return {br, j};
        }
        int h = new_block();
        const int id = static_cast<int>(b_.t.loops.size());
        // reserve the loop slot so the child can name its parent
        b_.t.loops.push_back({});
        auto [f, l] = sequence(depth + 1, id);
        int tl = new_block();
        b_.edge(h, f);
        b_.edge(l, tl);
        const int lo = uni(1, p_.max_bound);
        tsc::LoopSpec spec;
        spec.id = id;
        spec.head = h;
        spec.tail = tl;
        spec.back_edge = {tl, h};
        spec.min_bound = lo;
        spec.max_bound = uni(lo, p_.max_bound);
        if (parent >= 0)
            spec.parent = parent;
        b_.t.loops[id] = spec;
        b_.edge(tl, h);
        return {h, tl};
    }

    std::mt19937_64& rng_;
    RandomTaskParams p_;
    Builder b_;
};

/// Calls `visit` with every block sequence of a complete execution, loop
/// iteration counts ranging over [MinBd, MaxBd]. Returns false when more than
/// `limit` paths exist (enumeration stops).
inline bool enumerate_paths(const tsc::TaskGraph& t, const std::function<void(const std::vector<int>&)>& visit,
                            long limit = 200000) {
    const auto& loops = t.loop_nodes();
    std::map<int, int> head_of, tail_of;
    for (std::size_t l = 0; l < loops.size(); ++l) {
        head_of[loops[l].head] = static_cast<int>(l);
        tail_of[loops[l].tail] = static_cast<int>(l);
    }
    std::vector<int> iter(loops.size(), 0), path;
    long count = 0;
    std::function<bool(int)> go = [&](int b) -> bool {
        path.push_back(b);
        bool ok = true;
        if (b == t.exit()) {
            if (++count > limit)
                ok = false;
            else
                visit(path);
        } else {
            for (int s : t.succ(b)) {
                auto tl = tail_of.find(b);
                const bool back = tl != tail_of.end() && loops[tl->second].head == s;
                int saved = 0, lp = -1;
                if (back) {
                    lp = tl->second;
                    if (iter[lp] >= loops[lp].max_bound)
                        continue;
                    saved = iter[lp];
                    ++iter[lp];
                } else {
                    if (tl != tail_of.end() && iter[tl->second] < loops[tl->second].min_bound)
                        continue;
                    auto hd = head_of.find(s);
                    if (hd != head_of.end()) {
                        lp = hd->second;
                        saved = iter[lp];
                        iter[lp] = 1;
                    }
                }
                ok = go(s);
                if (lp >= 0)
                    iter[lp] = saved;
                if (!ok)
                    break;
            }
        }
        path.pop_back();
        return ok;
    };
    return go(t.entry());
}

/// Reference set-associative LRU cache.
class Lru {
public:
    Lru(int sets, int ways) : ways_(ways), sets_(sets), lines_(sets) { }
    /// Returns true on hit; the line becomes most recently used.
    bool access(std::uint64_t line) {
        auto& s = lines_[line % sets_];
        auto it = std::find(s.begin(), s.end(), line);
        const bool hit = it != s.end();
        if (hit)
            s.erase(it);
        s.insert(s.begin(), line);
        if (static_cast<int>(s.size()) > ways_)
            s.pop_back();
        return hit;
    }
    bool contains(std::uint64_t line) const {
        const auto& s = lines_[line % sets_];
        return std::find(s.begin(), s.end(), line) != s.end();
    }
    void clear() {
        for (auto& s : lines_)
            s.clear();
    }

private:
    int ways_;
    std::uint64_t sets_;
    std::vector<std::vector<std::uint64_t>> lines_;
};

/// Concrete standalone execution of one path on private L1 / shared L2
/// (non-inclusive: an L1 hit leaves the L2 untouched).
struct Occurrence {
    int block;
    Cycles start, end;
};
struct AccessEvent {
    int flat;
    int occurrence;
    bool l1_hit;
    bool l2_hit;  ///< meaningful when !l1_hit
};
struct Replay {
    std::vector<Occurrence> occ;
    std::vector<AccessEvent> acc;
    Cycles total = 0;
};

inline Replay replay(const tsc::TaskGraph& t, const std::vector<int>& path, const tsc::SystemSpec& sys, Lru& l1,
                     Lru& l2) {
    Replay r;
    Cycles now = 0;
    for (int b : path) {
        const Cycles start = now;
        const auto& bb = t.blocks[b];
        now += static_cast<Cycles>(bb.instructions) * sys.base_cpi;
        for (std::size_t j = 0; j < bb.accesses.size(); ++j) {
            AccessEvent e{t.access_flat(b, static_cast<int>(j)), static_cast<int>(r.occ.size()), false, false};
            const auto a = bb.accesses[j].address;
            e.l1_hit = l1.access(a / sys.l1.line_size);
            if (e.l1_hit) {
                now += sys.l1.hit_latency;
            } else {
                e.l2_hit = l2.access(a / sys.l2.line_size);
                now += e.l2_hit ? sys.l2.hit_latency : sys.mem_latency;
            }
            r.acc.push_back(e);
        }
        r.occ.push_back({b, start, now});
    }
    r.total = now;
    return r;
}

/// Exhaustive maximum-weight independent set by subset enumeration.
inline std::int64_t mwis_brute(const std::vector<std::int64_t>& w, const std::vector<std::pair<int, int>>& edges) {
    const int n = static_cast<int>(w.size());
    std::int64_t best = 0;
    for (std::uint32_t m = 0; m < (1u << n); ++m) {
        bool ok = true;
        for (auto [a, b] : edges)
            if ((m >> a & 1u) && (m >> b & 1u)) {
                ok = false;
                break;
            }
        if (!ok)
            continue;
        std::int64_t s = 0;
        for (int i = 0; i < n; ++i)
            if (m >> i & 1u)
                s += w[i];
        best = std::max(best, s);
    }
    return best;
}

/// All-pairs interval overlap.
inline bool overlap_brute(const tsc::IntervalSeq& a, const tsc::IntervalSeq& b) {
    for (const auto& x : a)
        for (const auto& y : b)
            if (std::max(x.lo, y.lo) <= std::min(x.hi, y.hi))
                return true;
    return false;
}

}  // namespace oracle
