#include "tsc/latency.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "tsc/parallel.hpp"

namespace tsc {

using ojson = nlohmann::ordered_json;

const char* to_string(AnalysisMode m) {
    switch (m) {
    case AnalysisMode::TSC: return "TSC";
    case AnalysisMode::TLT: return "TLT";
    case AnalysisMode::NCT: return "NCT";
    }
    return "?";
}

AnalysisMode parse_mode(const std::string& s) {
    std::string u = s;
    for (auto& c : u)
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (u == "TSC")
        return AnalysisMode::TSC;
    if (u == "TLT")
        return AnalysisMode::TLT;
    if (u == "NCT")
        return AnalysisMode::NCT;
    throw std::invalid_argument("unknown mode '" + s + "'");
}

Cycles hyperperiod(const std::vector<ChainSpec>& chains) {
    Cycles h = 1;
    for (const auto& c : chains) {
        if (!c.period || *c.period <= 0)
            throw ValidationError({"chain '" + c.id + "': period must be positive"});
        const Cycles g = std::gcd(h, *c.period);
        const Cycles f = *c.period / g;
        if (h > std::numeric_limits<Cycles>::max() / f)
            throw ValidationError({"hyperperiod overflows the cycle counter"});
        h *= f;
    }
    return h;
}

std::vector<JobInstance> enumerate_instances(const ChainSpec& chain, Cycles H, const std::vector<Cycles>& bcet,
                                             const std::vector<Cycles>& wcet) {
    std::vector<JobInstance> out;
    const Cycles T = *chain.period;
    const int nsi = static_cast<int>(H / T);
    for (int k = 0; k < nsi; ++k)
        for (int i = 0; i < static_cast<int>(chain.tasks.size()); ++i) {
            JobInstance j;
            j.chain = chain.id;
            j.core = chain.core;
            j.task_index = i;
            j.period_index = k;
            j.release = compute_prs_time(chain, T, k, i, bcet, wcet);
            const Interval r = j.release.hull();
            j.lifetime = {r.lo, r.hi + wcet[i]};
            out.push_back(std::move(j));
        }
    return out;
}

int Analysis::mode_position(AnalysisMode m) const {
    auto it = std::find(modes.begin(), modes.end(), m);
    return it == modes.end() ? -1 : static_cast<int>(it - modes.begin());
}

const JobResult& Analysis::result(AnalysisMode m, int job) const {
    const int p = mode_position(m);
    if (p < 0)
        throw std::out_of_range(std::string("mode ") + to_string(m) + " was not analyzed");
    return results[p][job];
}

std::string job_name(const JobInstance& j) {
    return j.chain + "/k" + std::to_string(j.period_index) + "/t" + std::to_string(j.task_index);
}

std::pair<double, double> predicted_hits(const TaskGraph& task, const TaskClassification& cls) {
    double hits = 0, visible = 0;
    for (const auto& a : cls.accesses) {
        if (!a.l2_visible())
            continue;
        const double w = static_cast<double>(task.iteration_weight(a.block));
        visible += w;
        if (a.refined == Chmc::AH)
            hits += w;
        else if (a.refined == Chmc::PS)
            hits += w - 1;
    }
    return {hits, visible};
}

JobResult analyze_instance(const Analysis& a, const WorkloadBundle& b, int job, AnalysisMode mode,
                           const std::vector<ForeignJob>& foreign, const AnalysisOptions& opt) {
    const auto& ja = a.jobs[job];
    const auto& ta = a.tasks[ja.task];
    const TaskGraph& t = *ta.task;
    JobResult r;
    r.cls = ta.cls;
    r.records.resize(r.cls.accesses.size());
    for (std::size_t f = 0; f < r.cls.accesses.size(); ++f) {
        auto& acc = r.cls.accesses[f];
        if (!acc.l2_visible())
            continue;
        if (mode == AnalysisMode::NCT) {
            acc.refined = Chmc::NC;
            continue;
        }
        if (acc.l2 != Chmc::AH && acc.l2 != Chmc::PS)
            continue;
        if (mode == AnalysisMode::TLT) {
            const auto v = task_level_bound(ja.ctx, ta.cls, static_cast<int>(f), foreign, opt.interference.count);
            r.records[f] = {v, v, v, 0};
        } else {
            r.records[f] = interference_bound(ja.ctx, ta.cls, static_cast<int>(f), foreign, opt.interference);
        }
        acc.interference = static_cast<int>(std::min<std::int64_t>(r.records[f].bound, 1 << 30));
        acc.refined = refine_chmc(acc.l2, acc.l2_age, acc.interference, b.system.l2.ways);
    }
    const auto costs = refined_costs(t, r.cls, b.system, opt.best_case);
    const auto ps = program_bounds(t, costs);
    r.bcet = ps.bcet;
    r.wcet = ps.wcet;
    std::tie(r.weighted_hits, r.weighted_visible) = predicted_hits(t, r.cls);
    return r;
}

Cycles mel_et(const std::vector<Cycles>& instance_sums) {
    return instance_sums.empty() ? 0 : *std::max_element(instance_sums.begin(), instance_sums.end());
}

Cycles mel_tt(Cycles tail_offset, const std::vector<Cycles>& tail_wcets) {
    return tail_wcets.empty() ? 0 : tail_offset + *std::max_element(tail_wcets.begin(), tail_wcets.end());
}

namespace {

JobContext shifted(const JobContext& c, Cycles d) {
    JobContext s = c;
    auto shift = [d](IntervalSeq& q) {
        for (auto& iv : q.items) {
            iv.lo += d;
            iv.hi += d;
        }
    };
    shift(s.prs);
    s.lifetime.lo += d;
    s.lifetime.hi += d;
    for (auto& q : s.bba)
        shift(q);
    for (auto& q : s.phase3)
        shift(q);
    for (auto& e : s.envelope)
        if (e) {
            e->lo += d;
            e->hi += d;
        }
    return s;
}

// Foreign jobs of every target, including copies shifted by one hyperperiod.
std::vector<std::vector<ForeignJob>> foreign_sets(const Analysis& a, const WorkloadBundle& b,
                                                  const std::vector<JobContext>& minus,
                                                  const std::vector<JobContext>& plus) {
    std::vector<ForeignJob> all;
    for (std::size_t j = 0; j < a.jobs.size(); ++j) {
        const auto& ja = a.jobs[j];
        const auto& ta = a.tasks[ja.task];
        for (const JobContext* c : {&minus[j], &ja.ctx, &plus[j]})
            all.push_back({ta.task, &ta.cls, c, ja.inst.core, b.chains[ja.chain].trigger, c->prs.hull()});
    }
    std::vector<std::vector<ForeignJob>> out(a.jobs.size());
    for (std::size_t j = 0; j < a.jobs.size(); ++j)
        for (const auto& f : all)
            if (f.core != a.jobs[j].inst.core && intervals_overlap(f.ctx->lifetime, a.jobs[j].ctx.lifetime))
                out[j].push_back(f);
    return out;
}

void run_mode(Analysis& a, const WorkloadBundle& b, int pos, const AnalysisOptions& opt) {
    std::vector<JobContext> minus, plus;
    for (const auto& ja : a.jobs) {
        minus.push_back(shifted(ja.ctx, -a.hyperperiod));
        plus.push_back(shifted(ja.ctx, a.hyperperiod));
    }
    const auto foreign = foreign_sets(a, b, minus, plus);
    std::vector<JobResult> res(a.jobs.size());
    parallel_for(a.jobs.size(), opt.workers,
                 [&](std::size_t j) { res[j] = analyze_instance(a, b, static_cast<int>(j), a.modes[pos], foreign[j], opt); });
    if (a.results[pos].empty()) {
        a.results[pos] = std::move(res);
        return;
    }
    for (std::size_t j = 0; j < res.size(); ++j)
        if (res[j].wcet < a.results[pos][j].wcet)
            a.results[pos][j] = std::move(res[j]);
}

// Rebuilds job contexts from the refined costs of the given results.
void refine_contexts(Analysis& a, const WorkloadBundle& b, const std::vector<JobResult>& res, const AnalysisOptions& opt) {
    std::vector<std::shared_ptr<const TaskContext>> rel(a.jobs.size());
    parallel_for(a.jobs.size(), opt.workers, [&](std::size_t j) {
        const auto& ta = a.tasks[a.jobs[j].task];
        rel[j] = std::make_shared<const TaskContext>(
            compute_task_context(*ta.task, refined_costs(*ta.task, res[j].cls, b.system, opt.best_case)));
    });
    for (std::size_t j = 0; j < a.jobs.size(); ++j) {
        auto& ja = a.jobs[j];
        const auto& chain = b.chains[ja.chain];
        std::vector<Cycles> bc, wc;
        const std::size_t first = j - static_cast<std::size_t>(ja.inst.task_index);
        for (int i = 0; i < ja.inst.task_index; ++i) {
            bc.push_back(res[first + i].bcet);
            wc.push_back(res[first + i].wcet);
        }
        IntervalSeq prs = compute_prs_time(chain, *chain.period, ja.inst.period_index, ja.inst.task_index, bc, wc);
        const Interval r = prs.hull();
        ja.inst.release = prs;
        ja.inst.lifetime = {r.lo, r.hi + res[j].wcet};
        ja.rel = rel[j];
        ja.ctx = compute_job_context(*a.tasks[ja.task].task, *ja.rel, prs, ja.inst.lifetime,
                                     b.system.phase3_threshold);
    }
}

}  // namespace

Analysis analyze_workload(const WorkloadBundle& b, const AnalysisOptions& opt) {
    Analysis a;
    for (auto m : {AnalysisMode::TSC, AnalysisMode::TLT, AnalysisMode::NCT})
        if (std::find(opt.modes.begin(), opt.modes.end(), m) != opt.modes.end())
            a.modes.push_back(m);
    a.tasks.resize(b.tasks.size());
    parallel_for(b.tasks.size(), opt.workers, [&](std::size_t i) {
        auto& ta = a.tasks[i];
        ta.task = &b.tasks[i];
        ta.cls = classify_task(b.tasks[i], b.system);
        ta.init = init_costs(b.tasks[i], ta.cls, b.system, opt.best_case);
        ta.ctx = std::make_shared<const TaskContext>(compute_task_context(b.tasks[i], ta.init));
        ta.bcet = ta.ctx->summary.bcet;
        ta.wcet = ta.ctx->summary.wcet;
    });
    a.hyperperiod = hyperperiod(b.chains);
    for (std::size_t ci = 0; ci < b.chains.size(); ++ci) {
        const auto& c = b.chains[ci];
        std::vector<Cycles> bc, wc;
        std::vector<int> idx;
        for (const auto& t : c.tasks) {
            idx.push_back(b.task_index(t));
            bc.push_back(a.tasks[idx.back()].bcet);
            wc.push_back(a.tasks[idx.back()].wcet);
        }
        for (auto& inst : enumerate_instances(c, a.hyperperiod, bc, wc)) {
            JobAnalysis ja;
            ja.task = idx[inst.task_index];
            ja.chain = static_cast<int>(ci);
            ja.rel = a.tasks[ja.task].ctx;
            ja.inst = std::move(inst);
            a.jobs.push_back(std::move(ja));
        }
    }
    parallel_for(a.jobs.size(), opt.workers, [&](std::size_t j) {
        auto& ja = a.jobs[j];
        ja.ctx = compute_job_context(*a.tasks[ja.task].task, *ja.rel, ja.inst.release, ja.inst.lifetime,
                                     b.system.phase3_threshold);
    });

    a.results.resize(a.modes.size());
    for (std::size_t p = 0; p < a.modes.size(); ++p)
        run_mode(a, b, static_cast<int>(p), opt);
    // further passes tighten the TSC windows with the previous pass's bounds
    const int tsc = a.mode_position(AnalysisMode::TSC);
    if (tsc >= 0) {
        for (int pass = 1; pass < b.system.refinement_passes; ++pass) {
            refine_contexts(a, b, a.results[tsc], opt);
            run_mode(a, b, tsc, opt);
        }
    }

    for (std::size_t ci = 0; ci < b.chains.size(); ++ci) {
        const auto& c = b.chains[ci];
        const int n = static_cast<int>(c.tasks.size());
        std::size_t base = 0;
        while (base < a.jobs.size() && a.jobs[base].chain != static_cast<int>(ci))
            ++base;
        const int nsi = static_cast<int>(a.hyperperiod / *c.period);
        for (auto m : a.modes) {
            ChainResult cr;
            cr.chain = c.id;
            cr.mode = m;
            double hits = 0, vis = 0;
            std::vector<Cycles> tail;
            for (int k = 0; k < nsi; ++k) {
                Cycles sum = 0;
                for (int i = 0; i < n; ++i) {
                    const auto& r = a.result(m, static_cast<int>(base + k * n + i));
                    sum += r.wcet;
                    hits += r.weighted_hits;
                    vis += r.weighted_visible;
                }
                const Cycles tw = a.result(m, static_cast<int>(base + k * n + n - 1)).wcet;
                tail.push_back(tw);
                cr.latencies.push_back(c.trigger == Trigger::ET ? sum : c.offsets->back() + tw);
            }
            cr.mel = c.trigger == Trigger::ET ? mel_et(cr.latencies) : mel_tt(c.offsets->back(), tail);
            if (vis > 0)
                cr.predicted_hit_ratio = hits / vis;
            a.chains.push_back(std::move(cr));
        }
    }
    compute_metrics(a);
    return a;
}

void compute_metrics(Analysis& a) {
    for (auto& cr : a.chains) {
        auto nct = std::find_if(a.chains.begin(), a.chains.end(), [&](const ChainResult& o) {
            return o.chain == cr.chain && o.mode == AnalysisMode::NCT;
        });
        if (nct != a.chains.end() && nct->mel > 0)
            cr.rmel = static_cast<double>(cr.mel) / static_cast<double>(nct->mel);
    }
}

namespace {

ojson opt_num(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

ojson seq_json(const IntervalSeq& s) {
    ojson j = ojson::array();
    for (const auto& iv : s)
        j.push_back({iv.lo, iv.hi});
    return j;
}

}  // namespace

std::string report_json(const Analysis& a) {
    ojson j;
    j["hyperperiod"] = a.hyperperiod;
    j["modes"] = ojson::array();
    for (auto m : a.modes)
        j["modes"].push_back(to_string(m));
    j["tasks"] = ojson::array();
    for (const auto& t : a.tasks) {
        ojson tj;
        tj["task"] = t.task->id;
        tj["bcet"] = t.bcet;
        tj["cip_wcet"] = t.wcet;
        tj["l1_sweeps"] = t.cls.l1_iterations;
        tj["l2_sweeps"] = t.cls.l2_iterations;
        j["tasks"].push_back(tj);
    }
    j["chains"] = ojson::array();
    for (const auto& c : a.chains) {
        ojson cj;
        cj["chain"] = c.chain;
        cj["mode"] = to_string(c.mode);
        cj["mel"] = c.mel;
        cj["rmel"] = opt_num(c.rmel);
        cj["predicted_hit_ratio"] = opt_num(c.predicted_hit_ratio);
        cj["simulated_hit_ratio"] = opt_num(c.simulated_hit_ratio);
        cj["latencies"] = c.latencies;
        j["chains"].push_back(cj);
    }
    j["jobs"] = ojson::array();
    for (std::size_t i = 0; i < a.jobs.size(); ++i) {
        const auto& ja = a.jobs[i];
        ojson jj;
        jj["job"] = job_name(ja.inst);
        jj["task"] = a.tasks[ja.task].task->id;
        jj["core"] = ja.inst.core;
        jj["release"] = seq_json(ja.inst.release);
        jj["lifetime"] = {ja.inst.lifetime.lo, ja.inst.lifetime.hi};
        ojson rj;
        for (auto m : a.modes) {
            const auto& r = a.result(m, static_cast<int>(i));
            int ah = 0, ps = 0, nc = 0;
            for (const auto& acc : r.cls.accesses) {
                ah += acc.refined == Chmc::AH;
                ps += acc.refined == Chmc::PS;
                nc += acc.refined == Chmc::NC;
            }
            rj[to_string(m)] = {{"bcet", r.bcet}, {"wcet", r.wcet}, {"ah", ah}, {"ps", ps}, {"nc", nc}};
        }
        jj["results"] = rj;
        j["jobs"].push_back(jj);
    }
    return j.dump(2) + "\n";
}

std::string report_csv(const Analysis& a) {
    std::ostringstream os;
    auto num = [](const std::optional<double>& v) {
        if (!v)
            return std::string();
        std::ostringstream s;
        s.precision(6);
        s << std::fixed << *v;
        return s.str();
    };
    os << "chain,mode,mel,rmel,predicted_hit_ratio,simulated_hit_ratio\n";
    for (const auto& c : a.chains)
        os << c.chain << ',' << to_string(c.mode) << ',' << c.mel << ',' << num(c.rmel) << ','
           << num(c.predicted_hit_ratio) << ',' << num(c.simulated_hit_ratio) << '\n';
    return os.str();
}

std::string interference_csv(const Analysis& a) {
    std::ostringstream os;
    os << "job,access,set,raw_sum,after_mwis,bound,refined\n";
    const int p = a.mode_position(AnalysisMode::TSC);
    if (p < 0)
        return os.str();
    for (std::size_t j = 0; j < a.jobs.size(); ++j) {
        const auto& r = a.results[p][j];
        for (std::size_t f = 0; f < r.cls.accesses.size(); ++f) {
            const auto& acc = r.cls.accesses[f];
            if (acc.l2 != Chmc::AH && acc.l2 != Chmc::PS)
                continue;
            const auto& rec = r.records[f];
            os << job_name(a.jobs[j].inst) << ',' << acc.access_id << ',' << acc.l2_set << ',' << rec.raw_sum << ','
               << rec.after_mwis << ',' << rec.bound << ',' << to_string(acc.refined) << '\n';
        }
    }
    return os.str();
}

}  // namespace tsc
