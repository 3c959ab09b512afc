#include "tsc/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "tsc/parallel.hpp"

#ifndef TSC_VERSION
#define TSC_VERSION "0.0.0"
#endif

namespace tsc {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr std::size_t kSampleLimit = 5;

const ChainResult* find_chain(const Analysis& a, const std::string& chain, AnalysisMode m) {
    for (const auto& c : a.chains)
        if (c.chain == chain && c.mode == m)
            return &c;
    return nullptr;
}

void write_file(const fs::path& p, const std::string& text) {
    if (p.has_parent_path())
        fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot write " + p.string());
    f << text;
}

std::string fixed(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(6) << v;
    return os.str();
}

std::string manifest(const std::string& command, const std::vector<std::string>& inputs,
                     const std::vector<AnalysisMode>& modes, std::optional<std::uint64_t> seed,
                     const std::string& output) {
    ojson j;
    j["command"] = command;
    j["inputs"] = inputs;
    j["modes"] = ojson::array();
    for (auto m : modes)
        j["modes"].push_back(to_string(m));
    j["seed"] = seed ? ojson(*seed) : ojson(nullptr);
    j["output"] = output;
    j["version"] = TSC_VERSION;
    return j.dump(2) + "\n";
}

std::vector<AnalysisMode> parse_modes(const std::string& s) {
    if (s == "all")
        return {AnalysisMode::TSC, AnalysisMode::TLT, AnalysisMode::NCT};
    return {parse_mode(s)};
}

struct BundleInputs {
    std::string bundle, system;
    std::vector<std::string> tasks, chains;

    void add_to(CLI::App* app) {
        app->add_option("--bundle", bundle, "directory with system.json, tasks/ and chains/");
        app->add_option("--system", system, "system file");
        app->add_option("--tasks", tasks, "task files or directories");
        app->add_option("--chains", chains, "chain files or directories");
    }

    std::vector<std::string> list() const {
        std::vector<std::string> out;
        if (!bundle.empty())
            out.push_back(bundle);
        if (!system.empty())
            out.push_back(system);
        out.insert(out.end(), tasks.begin(), tasks.end());
        out.insert(out.end(), chains.begin(), chains.end());
        return out;
    }

    WorkloadBundle load() const {
        fs::path sys = system;
        std::vector<fs::path> ts(tasks.begin(), tasks.end()), cs(chains.begin(), chains.end());
        if (!bundle.empty()) {
            const fs::path d = bundle;
            if (sys.empty())
                sys = d / "system.json";
            if (ts.empty())
                ts.push_back(d / "tasks");
            if (cs.empty())
                cs.push_back(d / "chains");
        }
        if (sys.empty() || ts.empty() || cs.empty())
            throw CLI::ValidationError("inputs", "need --bundle or all of --system, --tasks, --chains");
        return parse_workload(sys, ts, cs);
    }
};

std::optional<Fault> parse_fault(const std::string& s) {
    if (s == "none")
        return std::nullopt;
    if (s == "interference")
        return Fault::DropInterference;
    return Fault::ShrinkWindow;
}

std::string sweep_csv(const std::vector<BundleOutcome>& rows) {
    std::ostringstream os;
    os << "seed,chain,mode,mel,rmel,predicted_hit_ratio,simulated_hit_ratio\n";
    auto opt = [](const std::optional<double>& v) { return v ? fixed(*v) : std::string(); };
    for (const auto& r : rows)
        for (const auto& c : r.chains)
            os << r.seed << ',' << c.chain << ',' << to_string(c.mode) << ',' << c.mel << ',' << opt(c.rmel) << ','
               << opt(c.predicted_hit_ratio) << ',' << opt(c.simulated_hit_ratio) << '\n';
    return os.str();
}

}  // namespace

std::int64_t dominance_failures(const Analysis& a) {
    std::int64_t bad = 0;
    for (const auto& c : a.chains) {
        if (c.mode != AnalysisMode::TLT)
            continue;
        const auto* tsc = find_chain(a, c.chain, AnalysisMode::TSC);
        const auto* nct = find_chain(a, c.chain, AnalysisMode::NCT);
        if (tsc && tsc->mel > c.mel)
            ++bad;
        if (nct && c.mel > nct->mel)
            ++bad;
        if (tsc && tsc->predicted_hit_ratio.value_or(0) < c.predicted_hit_ratio.value_or(0) - 1e-12)
            ++bad;
    }
    return bad;
}

std::vector<BundleOutcome> run_sweep(const SweepParams& p) {
    std::vector<BundleOutcome> out(static_cast<std::size_t>(p.bundles));
    parallel_for(out.size(), p.workers, [&](std::size_t i) {
        BundleOutcome& r = out[i];
        r.seed = p.seed + i;
        const WorkloadBundle b = generate_workload(r.seed, p.gen);
        AnalysisOptions opt = p.analysis;
        opt.workers = 1;
        Analysis a = analyze_workload(b, opt);
        r.dominance_failures = dominance_failures(a);
        if (p.fault)
            inject_fault(a, *p.fault);
        const int runs = p.paths_per_job + (p.worst_run ? 1 : 0);
        SimTrace first;
        for (int k = 0; k < runs; ++k) {
            SimConfig cfg;
            cfg.seed = r.seed * 1000003ULL + static_cast<std::uint64_t>(k);
            cfg.policy = k < p.paths_per_job ? PathPolicy::Random : PathPolicy::WorstBiased;
            SimTrace tr = simulate(b, a, cfg);
            auto v = check_safety(tr, b, a);
            r.violations += static_cast<std::int64_t>(v.size());
            for (auto& x : v)
                if (r.samples.size() < kSampleLimit)
                    r.samples.push_back(std::move(x));
            if (k == 0)
                first = std::move(tr);
        }
        if (runs > 0)
            attach_simulated_hit_ratio(a, first);
        r.chains = a.chains;
    });
    return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Time-sensitive shared-cache interference analysis for cause-effect chains", "tsc"};
    app.require_subcommand(1);
    app.set_version_flag("--version", TSC_VERSION);

    // generate
    std::uint64_t seed = 1;
    GenParams gen;
    std::string output;
    auto* g = app.add_subcommand("generate", "write a seeded synthetic workload");
    g->add_option("--seed", seed, "generator seed");
    g->add_option("--cores", gen.cores, "number of cores")->check(CLI::Range(1, 64));
    g->add_option("--tasks-per-chain", gen.tasks_per_chain, "tasks per chain")->check(CLI::IsMember({1, 2, 4}));
    g->add_option("--utilization", gen.utilization, "target chain utilization")->check(CLI::Range(0.01, 1.0));
    g->add_option("--collision", gen.collision, "probability of a shared hot L2 set")->check(CLI::Range(0.0, 1.0));
    g->add_option("--output", output, "output directory")->required();

    // analyze
    BundleInputs in;
    std::string mode = "all", counting = "distinct";
    int jobs = 1;
    bool debug = false;
    auto* an = app.add_subcommand("analyze", "compute chain latency bounds");
    in.add_to(an);
    an->add_option("--mode", mode, "analysis mode")->check(CLI::IsMember({"tsc", "tlt", "nct", "all"}));
    an->add_option("--counting", counting, "interference counting")->check(CLI::IsMember({"distinct", "access"}));
    an->add_option("--output", output, "output directory")->required();
    an->add_option("--jobs", jobs, "worker threads")->check(CLI::Range(1, 1024));
    an->add_flag("--debug", debug, "also write classification, context and interference tables");

    // simulate
    std::string policy = "random";
    auto* sm = app.add_subcommand("simulate", "run the bundle on the cache simulator and check safety");
    in.add_to(sm);
    sm->add_option("--seed", seed, "path seed");
    sm->add_option("--sim-policy", policy, "path policy")->check(CLI::IsMember({"random", "worst"}));
    sm->add_option("--output", output, "output directory")->required();
    sm->add_option("--jobs", jobs, "worker threads")->check(CLI::Range(1, 1024));

    // verify / compare
    int seeds = 0, paths = 50;
    std::string sweep_policy = "both", fault = "none";
    auto add_sweep = [&](CLI::App* c) {
        c->add_option("--seeds", seeds, "number of bundles")->required()->check(CLI::Range(1, 1000000));
        c->add_option("--seed", seed, "first bundle seed");
        c->add_option("--cores", gen.cores, "number of cores")->check(CLI::Range(1, 64));
        c->add_option("--tasks-per-chain", gen.tasks_per_chain, "tasks per chain")->check(CLI::IsMember({1, 2, 4}));
        c->add_option("--utilization", gen.utilization, "target chain utilization")->check(CLI::Range(0.01, 1.0));
        c->add_option("--collision", gen.collision, "probability of a shared hot L2 set")->check(CLI::Range(0.0, 1.0));
        c->add_option("--counting", counting, "interference counting")->check(CLI::IsMember({"distinct", "access"}));
        c->add_option("--jobs", jobs, "worker threads")->check(CLI::Range(1, 1024));
    };
    auto* vf = app.add_subcommand("verify", "check analysis safety on seeded bundles by simulation");
    add_sweep(vf);
    vf->add_option("--sim-policy", sweep_policy, "path policy")->check(CLI::IsMember({"random", "worst", "both"}));
    vf->add_option("--paths-per-job", paths, "random paths per job")->check(CLI::NonNegativeNumber);
    vf->add_option("--inject-fault", fault, "corrupt the analysis on purpose")
        ->check(CLI::IsMember({"none", "interference", "window"}));
    auto* cp = app.add_subcommand("compare", "per-bundle RMEL rows for TSC, TLT and NCT");
    add_sweep(cp);
    cp->add_option("--output", output, "output directory")->required();

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (g->parsed()) {
            const WorkloadBundle b = generate_workload(seed, gen);
            const auto files = write_workload(b, output);
            write_file(fs::path(output) / "manifest.json", manifest("generate", {}, {}, seed, output));
            out << "wrote " << files.size() << " files to " << output << "\n";
            return 0;
        }

        AnalysisOptions opt;
        opt.modes = parse_modes(mode);
        opt.interference.count = counting == "access" ? CountMode::Access : CountMode::Distinct;
        opt.workers = jobs;

        if (an->parsed() || sm->parsed()) {
            const WorkloadBundle b = in.load();
            if (sm->parsed())
                opt.modes = {AnalysisMode::TSC, AnalysisMode::TLT, AnalysisMode::NCT};
            Analysis a = analyze_workload(b, opt);
            const fs::path dir = output;
            if (an->parsed()) {
                write_file(dir / "report.json", report_json(a));
                write_file(dir / "report.csv", report_csv(a));
                if (debug) {
                    std::string ctx;
                    for (const auto& t : a.tasks)
                        write_file(dir / "classification" / (t.task->id + ".csv"), classification_csv(*t.task, t.cls));
                    for (const auto& j : a.jobs)
                        ctx += context_csv(job_name(j.inst), *a.tasks[j.task].task, j.ctx);
                    write_file(dir / "contexts.csv", ctx);
                    if (a.mode_position(AnalysisMode::TSC) >= 0)
                        write_file(dir / "interference.csv", interference_csv(a));
                }
                write_file(dir / "manifest.json", manifest("analyze", in.list(), opt.modes, std::nullopt, output));
                out << report_csv(a);
                return 0;
            }
            SimConfig cfg;
            cfg.seed = seed;
            cfg.policy = policy == "worst" ? PathPolicy::WorstBiased : PathPolicy::Random;
            const SimTrace tr = simulate(b, a, cfg);
            attach_simulated_hit_ratio(a, tr);
            const auto v = check_safety(tr, b, a);
            std::ostringstream vs;
            vs << "kind,job,detail\n";
            for (const auto& x : v)
                vs << x.kind << ',' << x.job << ",\"" << x.detail << "\"\n";
            write_file(dir / "trace.csv", trace_csv(tr, a));
            write_file(dir / "report.json", report_json(a));
            write_file(dir / "report.csv", report_csv(a));
            write_file(dir / "violations.csv", vs.str());
            write_file(dir / "manifest.json", manifest("simulate", in.list(), opt.modes, seed, output));
            out << v.size() << " violations\n";
            return v.empty() ? 0 : 3;
        }

        SweepParams sp;
        sp.seed = seed;
        sp.bundles = seeds;
        sp.gen = gen;
        sp.analysis = opt;
        sp.analysis.modes = {AnalysisMode::TSC, AnalysisMode::TLT, AnalysisMode::NCT};
        sp.workers = jobs;
        if (vf->parsed()) {
            sp.paths_per_job = sweep_policy == "worst" ? 0 : paths;
            sp.worst_run = sweep_policy != "random";
            sp.fault = parse_fault(fault);
        } else {
            sp.paths_per_job = 1;
            sp.worst_run = false;
        }
        const auto rows = run_sweep(sp);

        if (vf->parsed()) {
            std::int64_t viol = 0, dom = 0;
            for (const auto& r : rows) {
                viol += r.violations;
                dom += r.dominance_failures;
                for (const auto& x : r.samples)
                    out << "seed " << r.seed << ": " << x.kind << " " << x.job << " " << x.detail << "\n";
            }
            out << viol << " violations / " << rows.size() << " bundles\n";
            out << dom << " dominance failures / " << rows.size() << " bundles\n";
            return viol == 0 && dom == 0 ? 0 : 3;
        }

        std::map<AnalysisMode, std::pair<double, int>> mean;
        for (const auto& r : rows)
            for (const auto& c : r.chains)
                if (c.rmel) {
                    mean[c.mode].first += *c.rmel;
                    ++mean[c.mode].second;
                }
        ojson summary;
        summary["bundles"] = rows.size();
        for (const auto& [m, s] : mean) {
            const double avg = s.second ? s.first / s.second : 0.0;
            summary["mean_rmel"][to_string(m)] = std::stod(fixed(avg));
            out << "mean RMEL " << to_string(m) << " " << fixed(avg) << "\n";
        }
        const fs::path dir = output;
        write_file(dir / "rmel.csv", sweep_csv(rows));
        write_file(dir / "summary.json", summary.dump(2) + "\n");
        write_file(dir / "manifest.json",
                   manifest("compare", {}, sp.analysis.modes, seed, output));
        return 0;
    } catch (const SchemaError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const CLI::ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace tsc
