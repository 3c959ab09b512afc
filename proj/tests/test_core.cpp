#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "tsc/cache_ai.hpp"
#include "tsc/context.hpp"
#include "tsc/cost.hpp"
#include "tsc/overlap.hpp"

using namespace tsc;

namespace {

SystemSpec tiny_system() {
    SystemSpec s;
    s.core_count = 2;
    s.l1 = {2, 2, 32, 1, CacheScope::Private};
    s.l2 = {4, 2, 32, 6, CacheScope::Shared};
    s.mem_latency = 30;
    return s;
}

IntervalSeq random_seq(std::mt19937_64& rng, int max_len, Cycles max_val) {
    std::uniform_int_distribution<int> len(1, max_len);
    std::uniform_int_distribution<Cycles> val(0, max_val);
    std::vector<Interval> v(len(rng));
    for (auto& iv : v) {
        Cycles a = val(rng), b = val(rng);
        iv = {std::min(a, b), std::max(a, b)};
    }
    std::sort(v.begin(), v.end(), [](auto& x, auto& y) { return x.lo < y.lo || (x.lo == y.lo && x.hi < y.hi); });
    return IntervalSeq(v);
}

bool covered(const IntervalSeq& s, Cycles lo, Cycles hi) {
    for (const auto& iv : s)
        if (iv.lo <= lo && hi <= iv.hi)
            return true;
    return false;
}

}  // namespace

TEST_CASE("model rejects malformed graphs") {
    oracle::Builder b;
    int x = b.block(1), y = b.block(1);
    b.edge(x, y);
    b.t.entry_block = x;
    b.t.exit_block = y;
    CHECK(b.t.validate().empty());
    b.t.blocks[1].id = 0;
    CHECK_FALSE(b.t.validate().empty());

    oracle::Builder c;
    int h = c.block(1), m = c.block(1), t = c.block(1), e = c.block(1);
    c.edge(h, m);
    c.edge(m, t);
    c.edge(m, e);  // exit from a non-tail block
    c.edge(t, e);
    c.loop(h, t, 1, 2);
    c.t.entry_block = h;
    c.t.exit_block = e;
    CHECK_THROWS_AS(c.t.finalize(), ValidationError);
}

TEST_CASE("interval merge and normalize") {
    CHECK(seq_merge({{0, 2}}, {{10, 20}, {30, 40}}) == IntervalSeq{{10, 22}, {30, 42}});
    IntervalSeq b{{3, 4}, {9, 12}};
    CHECK(seq_merge({{0, 0}}, b) == b);
    CHECK(seq_merge({{0, 1}, {2, 3}, {5, 6}}, {{0, 0}, {1, 1}, {2, 2}, {3, 3}}).size() == 12);
    CHECK(normalize({{0, 5}, {3, 8}}) == IntervalSeq{{0, 8}});
    CHECK(normalize({{0, 5}, {5, 8}}) == IntervalSeq{{0, 8}});
    CHECK(normalize({{0, 1}, {3, 4}}) == IntervalSeq{{0, 1}, {3, 4}});
}

TEST_CASE("seq_overlap examples and brute-force agreement") {
    CHECK_FALSE(seq_overlap({{0, 5}, {10, 15}}, {{6, 9}}));
    CHECK(seq_overlap({{0, 5}}, {{5, 8}}));
    CHECK_FALSE(seq_overlap({{0, 5}}, {{5, 8}}, OverlapSemantics::Strict));
    std::mt19937_64 rng(7);
    for (int i = 0; i < 2000; ++i) {
        auto a = random_seq(rng, 16, 200), b = random_seq(rng, 16, 200);
        const bool expect = oracle::overlap_brute(a, b);
        REQUIRE(seq_overlap(a, b) == expect);
        REQUIRE(seq_overlap(b, a) == expect);
        REQUIRE(seq_overlap(normalize(a), b) == expect);
        REQUIRE(seq_overlap(a, a));
    }
}

TEST_CASE("hierarchical overlap phases") {
    IntervalSeq w1{{143, 158}}, w2{{150, 160}};
    OverlapSite a{{0, 100}, std::nullopt, &w1}, b{{200, 300}, std::nullopt, &w2};
    auto v = hierarchical_overlap(a, b);
    CHECK_FALSE(v.result);
    CHECK(v.decided_at == OverlapPhase::Job);

    OverlapSite c{{0, 300}, Interval{10, 52}, &w1}, d{{50, 300}, Interval{60, 90}, &w2};
    v = hierarchical_overlap(c, d);
    CHECK_FALSE(v.result);
    CHECK(v.decided_at == OverlapPhase::OuterLoop);

    OverlapSite e{{0, 300}, std::nullopt, &w1}, f{{0, 300}, std::nullopt, &w2};
    v = hierarchical_overlap(e, f);
    CHECK(v.result);
    CHECK(v.decided_at == OverlapPhase::Block);
}

TEST_CASE("refine_chmc boundary cases") {
    CHECK(refine_chmc(Chmc::AH, 3, 2, 4) == Chmc::NC);
    CHECK(refine_chmc(Chmc::AH, 3, 1, 4) == Chmc::AH);
    CHECK(refine_chmc(Chmc::AH, 1, 0, 4) == Chmc::AH);
    CHECK(refine_chmc(Chmc::PS, 4, 1, 4) == Chmc::NC);
    CHECK(refine_chmc(Chmc::NC, 1, 0, 4) == Chmc::NC);
    CHECK(refine_chmc(Chmc::Bypass, 1, 9, 4) == Chmc::Bypass);
}

TEST_CASE("cache classification examples") {
    SystemSpec sys = tiny_system();
    sys.l1 = {1, 1, 32, 1, CacheScope::Private};
    oracle::Builder b;
    // lines 0 and 1 share the single L1 way, so both re-references miss L1
    int x = b.block(3, {0, 32, 0, 32});
    auto t = b.done(x, x);
    auto cls = classify_task(t, sys);
    CHECK(cls.accesses[0].l1 == Chmc::NC);
    CHECK(cls.accesses[0].l2 == Chmc::NC);
    CHECK(cls.accesses[2].l2 == Chmc::AH);
    CHECK(cls.accesses[2].l2_age == 1);

    oracle::Builder c;
    int e = c.block(1), h = c.block(1, {64}), tl = c.block(1), ex = c.block(1);
    c.edge(e, h);
    c.edge(h, tl);
    c.edge(tl, ex);
    c.loop(h, tl, 2, 4);
    auto lt = c.done(e, ex);
    auto lc = classify_task(lt, tiny_system());
    CHECK(lc.accesses[0].l2 == Chmc::PS);
    CHECK(lc.accesses[0].scope_loop == 0);
}

TEST_CASE("cache analysis agrees with concrete LRU replay") {
    std::mt19937_64 rng(11);
    const SystemSpec sys = tiny_system();
    int checked_paths = 0;
    for (int n = 0; n < 60; ++n) {
        oracle::RandomTask gen(rng, {});
        auto t = gen.make("t" + std::to_string(n));
        auto cls = classify_task(t, sys);
        const int nb = static_cast<int>(t.blocks.size());
        CHECK(cls.l1_iterations <= nb * sys.l1.ways);
        CHECK(cls.l2_iterations <= nb * sys.l2.ways);
        oracle::Lru l1(sys.l1.sets, sys.l1.ways), l2(sys.l2.sets, sys.l2.ways);
        std::uniform_int_distribution<int> pre(0, 40);
        oracle::enumerate_paths(
            t,
            [&](const std::vector<int>& path) {
                ++checked_paths;
                l1.clear();
                l2.clear();
                for (int i = 0; i < 6; ++i)
                    l2.access(static_cast<std::uint64_t>(pre(rng)));
                auto r = oracle::replay(t, path, sys, l1, l2);
                std::vector<int> epoch(t.loop_nodes().size(), 0);
                std::map<std::pair<int, int>, int> ps_miss;
                int prev = -1;
                std::size_t ai = 0;
                for (std::size_t o = 0; o < r.occ.size(); ++o) {
                    const int blk = r.occ[o].block;
                    for (std::size_t l = 0; l < epoch.size(); ++l)
                        if (t.loop_nodes()[l].head == blk && !(prev >= 0 && t.is_back_edge(prev, blk)))
                            ++epoch[l];
                    for (; ai < r.acc.size() && r.acc[ai].occurrence == static_cast<int>(o); ++ai) {
                        const auto& e = r.acc[ai];
                        const auto& c = cls.accesses[e.flat];
                        if (c.l1 == Chmc::AH)
                            REQUIRE(e.l1_hit);
                        if (c.reach == L2Access::Always)
                            REQUIRE_FALSE(e.l1_hit);
                        if (e.l1_hit)
                            continue;
                        if (c.l2 == Chmc::AH)
                            REQUIRE(e.l2_hit);
                        if (c.l2 == Chmc::PS && !e.l2_hit)
                            REQUIRE(++ps_miss[{e.flat, epoch[c.scope_loop]}] <= 1);
                    }
                    prev = blk;
                }
            },
            20000);
    }
    CHECK(checked_paths > 1000);
}

TEST_CASE("block cost latencies") {
    SystemSpec sys;
    oracle::Builder b;
    int x = b.block(1, {0});
    auto t = b.done(x, x);
    CHECK(block_cost(t, x, nullptr, sys, CostMode::InitWorst) == 31);
    CHECK(block_cost(t, x, nullptr, sys, CostMode::InitBest, BestCasePolicy::SharedHit) == 7);
    CHECK(block_cost(t, x, nullptr, sys, CostMode::InitBest) == 2);
    TaskClassification cls = classify_task(t, sys);
    cls.accesses[0].l1 = Chmc::AH;
    CHECK(block_cost(t, x, &cls, sys, CostMode::InitWorst) == 2);
    oracle::Builder c;
    int y = c.block(3);
    auto u = c.done(y, y);
    for (auto m : {CostMode::InitBest, CostMode::InitWorst})
        CHECK(block_cost(u, y, nullptr, sys, m) == 3);
}

TEST_CASE("diamond loop path costs and bounds") {
    auto t = oracle::diamond_program();
    TaskCosts costs;
    for (const auto& bb : t.blocks) {
        costs.best.push_back(bb.instructions);
        costs.worst.push_back(bb.instructions);
    }
    costs.surcharge.assign(t.blocks.size(), 0);
    auto ps = program_bounds(t, costs);
    const auto& lv = ps.loops[0];
    CHECK(lv.short_total == 11);
    CHECK(lv.long_total == 14);
    auto [l, tail] = ps.locate_block(t, 4);
    CHECK(l->short_to[tail] == 9);
    CHECK(l->long_to[tail] == 12);
    CHECK(l->short_to[l->source] == 0);
    CHECK(ps.virtual_cost[0].best == 33);
    CHECK(ps.virtual_cost[0].worst == 42);
    CHECK(ps.bcet == 49);
    CHECK(ps.wcet == 58);

    costs.surcharge[2] = 24;
    auto ps2 = program_bounds(t, costs);
    CHECK(ps2.virtual_cost[0].worst == 66);
    CHECK(ps2.wcet == 82);

    const auto lp = export_lp(t, costs);
    CHECK(lp.find("Maximize") != std::string::npos);
    CHECK(lp.find("bound0: x1 - 3 e0_1 <= 0") != std::string::npos);
}

TEST_CASE("diamond contexts") {
    auto t = oracle::diamond_program();
    TaskCosts costs;
    for (const auto& bb : t.blocks) {
        costs.best.push_back(bb.instructions);
        costs.worst.push_back(bb.instructions);
    }
    costs.surcharge.assign(t.blocks.size(), 0);
    auto ctx = compute_task_context(t, costs);
    CHECK(ctx.bbo[4].size() == 3);
    CHECK(ctx.bbo[4][1] == Interval{20, 28});
    CHECK(ctx.bbo[1][0] == Interval{0, 5});
    CHECK(ctx.bbo[5] == IntervalSeq{{43, 58}});
    CHECK(ctx.lpb[0] == IntervalSeq{{10, 10}});
    CHECK(ctx.loop_envelope[0] == Interval{10, 52});

    ChainSpec tt{"c", Trigger::TT, {"a", "b"}, 0, 100, std::vector<Cycles>{0, 30}, 0};
    CHECK(compute_prs_time(tt, 100, 2, 1, {}, {}) == IntervalSeq{{230, 230}});
    ChainSpec et{"e", Trigger::ET, {"a", "b"}, 0, 100, std::nullopt, 0};
    CHECK(compute_prs_time(et, 100, 3, 0, {8}, {12}) == IntervalSeq{{300, 300}});
    CHECK(compute_prs_time(et, 100, 0, 1, {8}, {12}) == IntervalSeq{{8, 12}});

    CHECK(compute_bba_time({{100, 100}}, ctx.relative[5]) == IntervalSeq{{143, 158}});
    CHECK(compute_bba_time({{8, 12}}, ctx.relative[5]) == IntervalSeq{{51, 70}});
    auto job = compute_job_context(t, ctx, {{0, 0}}, {0, 58}, 1024);
    CHECK(job.bba[1][0] == Interval{10, 15});
    CHECK(job.loop_window(0) == IntervalSeq{{10, 52}});
    auto coarse = compute_job_context(t, ctx, {{0, 0}}, {0, 58}, 1);
    CHECK(coarse.phase3[4] == IntervalSeq{{10, 52}});
}

TEST_CASE("nested loop start times") {
    oracle::Builder b;
    int e = b.block(10), oh = b.block(3), ih = b.block(2), it = b.block(1), ot = b.block(1), x = b.block(1);
    b.edge(e, oh);
    b.edge(oh, ih);
    b.edge(ih, it);
    b.edge(it, ot);
    b.edge(ot, x);
    b.loop(oh, ot, 2, 2);
    b.loop(ih, it, 1, 2, 0);
    auto t = b.done(e, x);
    TaskCosts costs;
    for (const auto& bb : t.blocks) {
        costs.best.push_back(bb.instructions);
        costs.worst.push_back(bb.instructions);
    }
    costs.surcharge.assign(t.blocks.size(), 0);
    auto ctx = compute_task_context(t, costs);
    CHECK(ctx.lpr[1][0] == Interval{3, 3});
    CHECK(ctx.lpb[0] == IntervalSeq{{10, 10}});
    CHECK(ctx.lpb[1].size() == 2);
    CHECK(ctx.lpb[1][0] == Interval{13, 13});
    CHECK_THROWS_AS(compute_lpr_time(t, ctx.summary, 0), std::invalid_argument);
}

TEST_CASE("bounds and windows cover every unrolled path") {
    std::mt19937_64 rng(23);
    const SystemSpec sys = tiny_system();
    for (int n = 0; n < 40; ++n) {
        oracle::RandomTask gen(rng, {});
        auto t = gen.make("t" + std::to_string(n));
        auto cls = classify_task(t, sys);
        auto init = init_costs(t, cls, sys);
        auto refined = refined_costs(t, cls, sys);
        auto ictx = compute_task_context(t, init);
        auto rctx = compute_task_context(t, refined);
        for (int b = 0; b < static_cast<int>(t.blocks.size()); ++b) {
            const int l = t.innermost_loop(b);
            CHECK(ictx.bbo[b].size() == static_cast<std::size_t>(l < 0 ? 1 : t.loop_nodes()[l].max_bound));
        }
        CHECK(rctx.summary.wcet <= ictx.summary.wcet);

        Cycles min_best = std::numeric_limits<Cycles>::max(), max_worst = 0;
        oracle::Lru l1(sys.l1.sets, sys.l1.ways), l2(sys.l2.sets, sys.l2.ways);
        oracle::enumerate_paths(
            t,
            [&](const std::vector<int>& path) {
                Cycles sb = 0, sw = 0;
                for (int b : path) {
                    sb += init.best[b];
                    sw += init.worst[b];
                }
                min_best = std::min(min_best, sb);
                max_worst = std::max(max_worst, sw);
                l1.clear();
                l2.clear();
                auto r = oracle::replay(t, path, sys, l1, l2);
                REQUIRE(r.total <= rctx.summary.wcet);
                REQUIRE(r.total >= rctx.summary.bcet);
                for (const auto& o : r.occ) {
                    REQUIRE(covered(ictx.relative[o.block], o.start, o.end));
                    REQUIRE(covered(rctx.relative[o.block], o.start, o.end));
                }
            },
            20000);
        CHECK(ictx.summary.bcet == min_best);
        CHECK(ictx.summary.wcet == max_worst);
    }
}
