#pragma once

// Workload files, validation, period / offset assignment and synthetic generation.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tsc/model.hpp"

namespace tsc {

struct WorkloadBundle {
    SystemSpec system;
    std::vector<TaskGraph> tasks;
    std::vector<ChainSpec> chains;

    /// Throws std::out_of_range for unknown ids.
    const TaskGraph& task(const std::string& id) const;
    int task_index(const std::string& id) const;

    friend bool operator==(const WorkloadBundle&, const WorkloadBundle&) = default;
};

// JSON text <-> model. `where` prefixes diagnostics (usually the file path).
SystemSpec parse_system(const std::string& text, const std::string& where = "system");
std::vector<TaskGraph> parse_tasks(const std::string& text, const std::string& where = "tasks");
std::vector<ChainSpec> parse_chains(const std::string& text, const std::string& where = "chains");

std::string serialize_system(const SystemSpec& s);
std::string serialize_task(const TaskGraph& t);
std::string serialize_chain(const ChainSpec& c);

/// Reads the files (a directory stands for its *.json files in name order),
/// then validates and prepares the bundle. Throws SchemaError / ValidationError.
WorkloadBundle parse_workload(const std::filesystem::path& system, const std::vector<std::filesystem::path>& tasks,
                              const std::vector<std::filesystem::path>& chains);

/// Writes system.json, tasks/<id>.json and chains/<id>.json under `dir`.
std::vector<std::filesystem::path> write_workload(const WorkloadBundle& b, const std::filesystem::path& dir);

/// Smallest table entry >= total WCET. Throws ValidationError when none fits.
Cycles assign_period(Cycles total_wcet, const std::vector<Cycles>& table);
/// Prefix sums of the WCETs.
std::vector<Cycles> assign_tt_offsets(const std::vector<Cycles>& wcets);
/// Priority-ordered concatenation of the chains of one core.
ChainSpec merge_core_chains(std::vector<ChainSpec> chains, const std::map<std::string, Cycles>& cip_wcet);

/// Context-independent pessimistic WCET of every task (all L2-visible accesses miss).
std::map<std::string, Cycles> cip_wcets(const WorkloadBundle& b);

/// Finalizes tasks, checks references, merges chains per core, fills missing
/// periods and TT offsets, and checks schedulability.
void prepare_workload(WorkloadBundle& b);

struct GenParams {
    int cores = 2;
    int tasks_per_chain = 2;  ///< 1, 2 or 4
    int max_blocks = 8;
    int max_depth = 2;
    int max_bound = 8;
    int max_instructions = 12;
    int max_accesses = 3;
    double utilization = 0.6;
    double collision = 0.3;  ///< probability that an access targets a shared hot set
    double reuse = 0.5;      ///< probability that an access re-references an earlier line
    double tt_fraction = 0.5;
    SystemSpec system;
};

/// Deterministic synthetic bundle with explicit periods and offsets.
WorkloadBundle generate_workload(std::uint64_t seed, const GenParams& params);

}  // namespace tsc
