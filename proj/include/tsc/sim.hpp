#pragma once

// Concrete execution of a bundle on private L1 / shared L2 LRU caches.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tsc/ingest.hpp"
#include "tsc/latency.hpp"

namespace tsc {

enum class PathPolicy { Random, WorstBiased };

struct SimConfig {
    PathPolicy policy = PathPolicy::Random;
    std::uint64_t seed = 0;
    bool record_accesses = true;
};

enum class HitLevel : std::uint8_t { L1, L2, Mem };

const char* to_string(HitLevel h);

struct AccessEvent {
    Cycles cycle = 0;
    int job = 0;
    int block = 0;   ///< block index
    int flat = 0;    ///< flat access index
    int occurrence = 0;  ///< index into JobTrace::blocks
    HitLevel level = HitLevel::Mem;
};

struct BlockOccurrence {
    int block = 0;
    Cycles start = 0;
    Cycles end = 0;
};

struct JobTrace {
    Cycles release = 0;
    Cycles start = 0;
    Cycles finish = 0;
    std::vector<int> path;
    std::vector<BlockOccurrence> blocks;
};

struct SimTrace {
    std::vector<JobTrace> jobs;      ///< indexed like Analysis::jobs
    std::vector<AccessEvent> accesses;  ///< global time order
    std::int64_t l2_accesses = 0;
    std::int64_t l2_hits = 0;
    std::vector<std::string> overruns;  ///< jobs that could not start at their release
};

/// One execution path of a task: loop iteration counts in [MinBd, MaxBd].
std::vector<int> draw_path(const TaskGraph& task, const TaskAnalysis& ta, PathPolicy policy, std::mt19937_64& rng);

/// Simulates one hyperperiod with per-job paths drawn from (seed, core, job).
SimTrace simulate(const WorkloadBundle& b, const Analysis& a, const SimConfig& cfg);

/// Simulates with explicit per-job paths.
SimTrace simulate_paths(const WorkloadBundle& b, const Analysis& a, const std::vector<std::vector<int>>& paths,
                        bool record_accesses = true);

/// Every combination of job paths. Throws std::length_error above `limit` combinations.
std::int64_t simulate_all_paths(const WorkloadBundle& b, const Analysis& a,
                                const std::function<void(const SimTrace&)>& visit, std::int64_t limit = 100000);

/// All paths of one task, or nullopt when there are more than `limit`.
std::optional<std::vector<std::vector<int>>> enumerate_task_paths(const TaskGraph& task, std::int64_t limit);

struct Violation {
    std::string kind;
    std::string job;
    std::string detail;
};

/// Job / chain latency, AH hits, PS misses per scope entry and window coverage
/// for every analyzed mode (AH / PS checks use TSC when present).
std::vector<Violation> check_safety(const SimTrace& trace, const WorkloadBundle& b, const Analysis& a);

enum class Fault { DropInterference, ShrinkWindow };

/// Deliberate corruption of TSC results for checker self-tests.
/// DropInterference resets |Mc| to 0 on contended accesses; ShrinkWindow
/// collapses the entry-block window of the first job. Returns false when
/// nothing could be corrupted.
bool inject_fault(Analysis& a, Fault f);

/// L2 hits / L2 accesses, absent without L2 traffic.
std::optional<double> trace_hit_ratio(const SimTrace& trace);

/// Sets ChainResult::simulated_hit_ratio from the trace.
void attach_simulated_hit_ratio(Analysis& a, const SimTrace& trace);

/// cycle, core, job, block, access, level
std::string trace_csv(const SimTrace& trace, const Analysis& a);

}  // namespace tsc
