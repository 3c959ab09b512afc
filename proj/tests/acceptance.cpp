// Acceptance gate: one PASS/FAIL line per criterion, exit 1 on any failure.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "tsc/cli.hpp"

using namespace tsc;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS" : "FAIL") << "  " << id << ". " << name << ": " << detail << std::endl;
    failures += ok ? 0 : 1;
}

bool covered(const IntervalSeq& s, Cycles lo, Cycles hi) {
    for (const auto& iv : s)
        if (iv.lo <= lo && hi <= iv.hi)
            return true;
    return false;
}

std::vector<BundleOutcome> safety_rows;

void criteria_safety_and_dominance() {
    SweepParams p;
    p.seed = 1;
    p.bundles = 100;
    p.paths_per_job = 50;
    p.worst_run = true;
    const auto t0 = Clock::now();
    safety_rows = run_sweep(p);
    const double dt = seconds_since(t0);
    std::int64_t viol = 0, dom = 0, chains = 0;
    for (const auto& r : safety_rows) {
        viol += r.violations;
        dom += r.dominance_failures;
        chains += static_cast<std::int64_t>(r.chains.size() / 3);
        for (const auto& v : r.samples)
            std::cout << "      seed " << r.seed << ": " << v.kind << " " << v.job << " " << v.detail << "\n";
    }
    std::ostringstream d1;
    d1 << viol << " violations over " << safety_rows.size() << " bundles x 51 runs in " << dt << " s";
    report(1, "safety", viol == 0 && dt < 600, d1.str());
    std::ostringstream d2;
    d2 << dom << " dominance failures over " << chains << " chains";
    report(2, "dominance", dom == 0, d2.str());
}

std::map<AnalysisMode, double> mean_rmel(const std::vector<BundleOutcome>& rows) {
    std::map<AnalysisMode, std::pair<double, int>> acc;
    for (const auto& r : rows)
        for (const auto& c : r.chains)
            if (c.rmel) {
                acc[c.mode].first += *c.rmel;
                ++acc[c.mode].second;
            }
    std::map<AnalysisMode, double> out;
    for (const auto& [m, s] : acc)
        out[m] = s.second ? s.first / s.second : 0.0;
    return out;
}

void criterion_rmel_direction() {
    std::ostringstream d;
    bool ok = true;
    for (int cores : {2, 4}) {
        SweepParams p;
        p.seed = 1000;
        p.bundles = 40;
        p.gen.cores = cores;
        p.gen.utilization = 0.9;
        p.gen.collision = 0.8;
        p.paths_per_job = 5;
        p.worst_run = true;
        const auto rows = run_sweep(p);
        std::int64_t dom = 0, viol = 0;
        for (const auto& r : rows) {
            dom += r.dominance_failures;
            viol += r.violations;
        }
        auto m = mean_rmel(rows);
        const bool dir = m[AnalysisMode::TSC] < m[AnalysisMode::TLT];
        ok = ok && dir && dom == 0 && viol == 0;
        d << cores << " cores: TSC " << m[AnalysisMode::TSC] << " TLT " << m[AnalysisMode::TLT]
          << " dominance failures " << dom << " violations " << viol << "; ";
    }
    report(3, "directional RMEL", ok, d.str());
}

IntervalSeq random_seq(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> len(1, 64);
    std::uniform_int_distribution<Cycles> val(0, 1000000);
    const Cycles width = std::array<Cycles, 3>{10, 1000, 100000}[std::uniform_int_distribution<int>(0, 2)(rng)];
    std::vector<Interval> v(static_cast<std::size_t>(len(rng)));
    for (auto& iv : v) {
        const Cycles lo = val(rng);
        iv = {lo, std::min<Cycles>(1000000, lo + std::uniform_int_distribution<Cycles>(0, width)(rng))};
    }
    std::sort(v.begin(), v.end(), [](auto& x, auto& y) { return x.lo < y.lo || (x.lo == y.lo && x.hi < y.hi); });
    return IntervalSeq(v);
}

void criterion_seq_overlap() {
    std::mt19937_64 rng(4);
    std::vector<std::pair<IntervalSeq, IntervalSeq>> pairs;
    for (int i = 0; i < 10000; ++i) {
        auto a = random_seq(rng);
        pairs.emplace_back(std::move(a), random_seq(rng));
    }
    int bad = 0, positive = 0;
    const auto t0 = Clock::now();
    for (const auto& [a, b] : pairs) {
        const bool got = seq_overlap(a, b);
        positive += got;
        bad += got != oracle::overlap_brute(a, b);
    }
    const double dt = seconds_since(t0);
    std::ostringstream d;
    d << bad << " disagreements on 10000 pairs (" << positive << " overlapping) in " << dt << " s";
    report(4, "interval sequence overlap", bad == 0 && dt < 5, d.str());
}

void criterion_mwis() {
    std::mt19937_64 rng(5);
    int bad = 0;
    for (int it = 0; it < 1000; ++it) {
        const int n = std::uniform_int_distribution<int>(1, 20)(rng);
        const double dens = std::array<double, 3>{0.1, 0.3, 0.6}[it % 3];
        ExclusionGraph g;
        for (int v = 0; v < n; ++v)
            g.weights.push_back(std::uniform_int_distribution<int>(0, 50)(rng));
        for (int u = 0; u < n; ++u)
            for (int v = u + 1; v < n; ++v)
                if (std::bernoulli_distribution(dens)(rng))
                    g.edges.push_back({u, v});
        bad += mwis_bound(g) != oracle::mwis_brute(g.weights, g.edges);
    }
    const auto pair = mwis_bound({{5, 8}, {{0, 1}}});
    std::ostringstream d;
    d << bad << " disagreements on 1000 graphs; max(5,8) example gives " << pair;
    report(5, "MWIS exactness", bad == 0 && pair == 8, d.str());
}

void criterion_refine() {
    const bool a = refine_chmc(Chmc::AH, 3, 2, 4) == Chmc::NC;
    const bool b = refine_chmc(Chmc::AH, 3, 1, 4) == Chmc::AH;
    const bool c = refine_chmc(Chmc::AH, 1, 0, 4) == Chmc::AH;
    std::ostringstream d;
    d << "age3/Mc2 -> NC " << a << ", age3/Mc1 -> AH " << b << ", age1/Mc0 -> AH " << c;
    report(6, "interference refinement", a && b && c, d.str());
}

SystemSpec small_system() {
    SystemSpec s;
    s.l1 = {2, 2, 32, 1, CacheScope::Private};
    s.l2 = {4, 2, 32, 6, CacheScope::Shared};
    return s;
}

int branch_count(const TaskGraph& t) {
    int n = 0;
    for (int b = 0; b < static_cast<int>(t.blocks.size()); ++b) {
        int fwd = 0;
        for (int s : t.succ(b))
            fwd += !t.is_back_edge(b, s);
        n += fwd > 1;
    }
    return n;
}

void criterion_context() {
    // worked diamond values against unrolled enumeration: [first start, last end],
    // the tail relative to loop entry
    auto dia = oracle::diamond_program();
    TaskCosts plain;
    for (const auto& bb : dia.blocks) {
        plain.best.push_back(bb.instructions);
        plain.worst.push_back(bb.instructions);
    }
    plain.surcharge.assign(dia.blocks.size(), 0);
    const auto dctx = compute_task_context(dia, plain);
    Interval tail2{std::numeric_limits<Cycles>::max(), 0}, post{tail2}, total{tail2};
    SystemSpec bare;
    oracle::enumerate_paths(dia, [&](const std::vector<int>& path) {
        Cycles now = 0;
        int tails = 0;
        Cycles loop_entry = 0;
        for (int b : path) {
            const Cycles end = now + dia.blocks[b].instructions * bare.base_cpi;
            if (b == 1 && loop_entry == 0)
                loop_entry = now;
            if (b == 4 && ++tails == 2)
                tail2 = {std::min(tail2.lo, now - loop_entry), std::max(tail2.hi, end - loop_entry)};
            if (b == 5)
                post = {std::min(post.lo, now), std::max(post.hi, end)};
            now = end;
        }
        total = {std::min(total.lo, now), std::max(total.hi, now)};
    }, 1000);
    const bool worked = dctx.bbo[4][1] == tail2 && tail2 == Interval{20, 28} && dctx.bbo[5] == IntervalSeq{post} &&
                        post == Interval{43, 58} && total == Interval{49, 58} && dctx.summary.bcet == 49 &&
                        dctx.summary.wcet == 58;

    std::mt19937_64 rng(17);
    const SystemSpec sys = small_system();
    int programs = 0, occurrences = 0, misses = 0, paths = 0;
    while (programs < 20) {
        oracle::RandomTaskParams rp;
        rp.max_depth = 1;
        rp.max_bound = 4;
        rp.max_regions = 3;
        auto t = oracle::RandomTask(rng, rp).make("p" + std::to_string(programs));
        if (t.loop_nodes().size() != 1 || branch_count(t) > 3)
            continue;
        ++programs;
        const auto cls = classify_task(t, sys);
        const auto ctx = compute_task_context(t, init_costs(t, cls, sys));
        const auto job = compute_job_context(t, ctx, {{0, 0}}, {0, ctx.summary.wcet}, sys.phase3_threshold);
        oracle::Lru l1(sys.l1.sets, sys.l1.ways), l2(sys.l2.sets, sys.l2.ways);
        oracle::enumerate_paths(t, [&](const std::vector<int>& path) {
            ++paths;
            l1.clear();
            l2.clear();
            for (const auto& o : oracle::replay(t, path, sys, l1, l2).occ) {
                ++occurrences;
                misses += !covered(job.bba[o.block], o.start, o.end);
            }
        }, 100000);
    }
    std::ostringstream d;
    d << misses << " uncovered of " << occurrences << " occurrences on " << paths << " paths of 20 programs; diamond "
      << "tail#2 [" << tail2.lo << "," << tail2.hi << "] post [" << post.lo << "," << post.hi << "] BCET/WCET "
      << dctx.summary.bcet << "/" << dctx.summary.wcet;
    report(7, "context windows", misses == 0 && worked, d.str());
}

void criterion_cache_ai() {
    std::mt19937_64 rng(29);
    const SystemSpec sys = small_system();
    int ah_bad = 0, ps_bad = 0, iter_bad = 0, paths = 0, ah = 0, ps = 0;
    for (int n = 0; n < 50; ++n) {
        auto t = oracle::RandomTask(rng, {}).make("t" + std::to_string(n));
        const auto cls = classify_task(t, sys);
        const int nb = static_cast<int>(t.blocks.size());
        iter_bad += cls.l1_iterations > nb * sys.l1.ways || cls.l2_iterations > nb * sys.l2.ways;
        for (const auto& c : cls.accesses) {
            ah += c.l1 == Chmc::AH || c.l2 == Chmc::AH;
            ps += c.l2 == Chmc::PS;
        }
        oracle::Lru l1(sys.l1.sets, sys.l1.ways), l2(sys.l2.sets, sys.l2.ways);
        oracle::enumerate_paths(t, [&](const std::vector<int>& path) {
            ++paths;
            l1.clear();
            l2.clear();
            const auto r = oracle::replay(t, path, sys, l1, l2);
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
                    if (c.l1 == Chmc::AH && !e.l1_hit)
                        ++ah_bad;
                    if (e.l1_hit)
                        continue;
                    if (c.l2 == Chmc::AH && !e.l2_hit)
                        ++ah_bad;
                    if (c.l2 == Chmc::PS && !e.l2_hit && ++ps_miss[{e.flat, epoch[c.scope_loop]}] > 1)
                        ++ps_bad;
                }
                prev = blk;
            }
        }, 100000);
    }
    std::ostringstream d;
    d << ah_bad << " AH misses, " << ps_bad << " extra PS misses, " << iter_bad << " slow fixed points; " << ah
      << " AH and " << ps << " PS accesses over " << paths << " paths";
    report(8, "cache classification", ah_bad == 0 && ps_bad == 0 && iter_bad == 0, d.str());
}

TaskGraph large_program(std::mt19937_64& rng, int& edges) {
    oracle::Builder b("large");
    std::uniform_int_distribution<int> instr(1, 12), addr(0, 255), bound(1, 8);
    auto blk = [&] { return b.block(instr(rng), {static_cast<std::uint64_t>(addr(rng)) * 32}); };
    const int entry = blk();
    int prev = entry;
    for (int l = 0; l < 10; ++l) {
        const int head = blk();
        b.edge(prev, head);
        int cur = head;
        const int three_way = 2 + (l >= 2 ? 1 : 0), two_way = l >= 2 ? 2 : 3;
        for (int d = 0; d < three_way + two_way; ++d) {
            const int arms = d < three_way ? 3 : 2;
            std::vector<int> arm;
            for (int k = 0; k < arms; ++k)
                arm.push_back(blk());
            const int join = blk();
            for (int a : arm) {
                b.edge(cur, a);
                b.edge(a, join);
            }
            cur = join;
        }
        const int tail = blk();
        b.edge(cur, tail);
        const int lo = bound(rng);
        b.loop(head, tail, lo, std::max(lo, bound(rng)));
        prev = tail;
    }
    const int exit = blk();
    b.edge(prev, exit);
    edges = static_cast<int>(b.t.edges.size());
    return b.done(entry, exit);
}

void criterion_scalability() {
    std::mt19937_64 rng(31);
    int edges = 0;
    const auto t = large_program(rng, edges);
    SystemSpec sys;
    const auto cls = classify_task(t, sys);
    const auto costs = init_costs(t, cls, sys);
    const auto t0 = Clock::now();
    const auto ctx = compute_task_context(t, costs);
    const auto job = compute_job_context(t, ctx, {{0, 100}}, {0, 100 + ctx.summary.wcet}, sys.phase3_threshold);
    const double dt = seconds_since(t0);
    std::ostringstream d;
    d << "P=" << t.loop_nodes().size() << " V=" << t.blocks.size() << " E=" << edges << " in " << dt << " s";
    report(9, "context scalability", dt < 1.0 && job.bba.size() == t.blocks.size(), d.str());
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) {
            std::ifstream f(e.path(), std::ios::binary);
            std::ostringstream ss;
            ss << f.rdbuf();
            out[fs::relative(e.path(), root).string()] = ss.str();
        }
    return out;
}

void criterion_determinism() {
    const fs::path root = fs::temp_directory_path() / "tsc_acceptance_determinism";
    fs::remove_all(root);
    std::ostringstream sink;
    auto run = [&](std::vector<std::string> args) { return run_cli(args, sink, sink); };
    const std::string gen = (root / "gen").string(), out = (root / "out").string();
    bool ok = true;
    int files = 0;
    for (const std::string seed : {"3", "8"}) {
        ok &= run({"generate", "--seed", seed, "--cores", "4", "--tasks-per-chain", "4", "--output", gen}) == 0;
        const auto g1 = read_tree(gen);
        fs::remove_all(gen);
        ok &= run({"generate", "--seed", seed, "--cores", "4", "--tasks-per-chain", "4", "--output", gen}) == 0;
        ok &= g1 == read_tree(gen);
        std::vector<std::map<std::string, std::string>> trees;
        for (const std::string jobs : {"1", "8", "1"}) {
            fs::remove_all(out);
            ok &= run({"analyze", "--bundle", gen, "--mode", "all", "--debug", "--jobs", jobs, "--output", out}) == 0;
            trees.push_back(read_tree(out));
        }
        ok &= trees[0] == trees[1] && trees[0] == trees[2];
        files += static_cast<int>(g1.size() + trees[0].size());
        fs::remove_all(gen);
    }
    fs::remove_all(root);
    std::ostringstream d;
    d << (ok ? "identical" : "different") << " bytes across repeated runs and --jobs 1/8 (" << files
      << " files compared)";
    report(10, "determinism", ok, d.str());
}

}  // namespace

int main() {
    criteria_safety_and_dominance();
    criterion_rmel_direction();
    criterion_seq_overlap();
    criterion_mwis();
    criterion_refine();
    criterion_context();
    criterion_cache_ai();
    criterion_scalability();
    criterion_determinism();
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
