#pragma once

// Per-instance refinement, TSC-WCETs over the hyperperiod, chain MEL and baselines.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tsc/cache_ai.hpp"
#include "tsc/context.hpp"
#include "tsc/cost.hpp"
#include "tsc/ingest.hpp"
#include "tsc/interference.hpp"

namespace tsc {

enum class AnalysisMode { TSC, TLT, NCT };

const char* to_string(AnalysisMode m);
/// Throws std::invalid_argument for unknown names ("tsc", "tlt", "nct", case-insensitive).
AnalysisMode parse_mode(const std::string& s);

struct AnalysisOptions {
    std::vector<AnalysisMode> modes{AnalysisMode::TSC, AnalysisMode::TLT, AnalysisMode::NCT};
    InterferenceOptions interference;
    BestCasePolicy best_case = BestCasePolicy::L1Floor;
    int workers = 1;
};

/// Least common multiple of the chain periods. Throws ValidationError on overflow.
Cycles hyperperiod(const std::vector<ChainSpec>& chains);

/// Every job of a chain in [0, H); release windows use the given per-task bounds.
std::vector<JobInstance> enumerate_instances(const ChainSpec& chain, Cycles H, const std::vector<Cycles>& bcet,
                                             const std::vector<Cycles>& wcet);

/// Step-1 data of one task.
struct TaskAnalysis {
    const TaskGraph* task = nullptr;
    TaskClassification cls;
    TaskCosts init;
    std::shared_ptr<const TaskContext> ctx;
    Cycles bcet = 0;
    Cycles wcet = 0;  ///< CIP-WCET
};

struct JobAnalysis {
    JobInstance inst;
    int task = 0;   ///< index into Analysis::tasks
    int chain = 0;  ///< index into WorkloadBundle::chains
    std::shared_ptr<const TaskContext> rel;
    JobContext ctx;
};

struct JobResult {
    TaskClassification cls;  ///< refined
    std::vector<InterferenceRecord> records;  ///< by flat access index
    Cycles bcet = 0;
    Cycles wcet = 0;
    double weighted_hits = 0;
    double weighted_visible = 0;
};

struct ChainResult {
    std::string chain;
    AnalysisMode mode = AnalysisMode::TSC;
    std::vector<Cycles> latencies;  ///< per scheduling instance
    Cycles mel = 0;
    std::optional<double> rmel;
    std::optional<double> predicted_hit_ratio;
    std::optional<double> simulated_hit_ratio;
};

/// Full analysis of a bundle. Holds pointers into the bundle, which must outlive it.
struct Analysis {
    Cycles hyperperiod = 0;
    std::vector<AnalysisMode> modes;
    std::vector<TaskAnalysis> tasks;
    std::vector<JobAnalysis> jobs;
    std::vector<std::vector<JobResult>> results;  ///< [mode position][job]
    std::vector<ChainResult> chains;              ///< chain-major, mode-minor

    int mode_position(AnalysisMode m) const;  ///< -1 when absent
    const JobResult& result(AnalysisMode m, int job) const;
};

/// Refined classification and TSC-WCET of one job.
JobResult analyze_instance(const Analysis& a, const WorkloadBundle& b, int job, AnalysisMode mode,
                           const std::vector<ForeignJob>& foreign, const AnalysisOptions& opt);

Cycles mel_et(const std::vector<Cycles>& instance_sums);
Cycles mel_tt(Cycles tail_offset, const std::vector<Cycles>& tail_wcets);

/// Loop-weighted predicted hit ratio: AH counts every execution, PS all but one.
std::pair<double, double> predicted_hits(const TaskGraph& task, const TaskClassification& cls);

Analysis analyze_workload(const WorkloadBundle& b, const AnalysisOptions& opt);

/// Fills RMEL from the NCT results when present.
void compute_metrics(Analysis& a);

std::string report_json(const Analysis& a);
/// chain, mode, mel, rmel, predicted_hit_ratio, simulated_hit_ratio
std::string report_csv(const Analysis& a);
/// job, access, set, raw_sum, after_mwis, bound, refined (TSC mode)
std::string interference_csv(const Analysis& a);

std::string job_name(const JobInstance& j);

}  // namespace tsc
