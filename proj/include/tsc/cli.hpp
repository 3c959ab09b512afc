#pragma once

// Command-line front end and the seeded sweeps behind verify / compare.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tsc/ingest.hpp"
#include "tsc/latency.hpp"
#include "tsc/sim.hpp"

namespace tsc {

struct SweepParams {
    std::uint64_t seed = 1;  ///< first bundle seed
    int bundles = 1;
    GenParams gen;
    AnalysisOptions analysis;
    int paths_per_job = 50;  ///< random runs per bundle
    bool worst_run = true;   ///< one extra worst-biased run
    std::optional<Fault> fault;
    int workers = 1;  ///< bundles analyzed concurrently
};

struct BundleOutcome {
    std::uint64_t seed = 0;
    std::int64_t violations = 0;
    std::int64_t dominance_failures = 0;
    std::vector<Violation> samples;  ///< first few violations
    std::vector<ChainResult> chains;
};

/// Mode-ordering checks on one analysis: MEL(TSC) <= MEL(TLT) <= MEL(NCT)
/// and predicted hit ratio TSC >= TLT. Returns the number of failures.
std::int64_t dominance_failures(const Analysis& a);

/// Generates, analyzes, simulates and checks `bundles` seeded workloads.
/// Results are in seed order regardless of `workers`.
std::vector<BundleOutcome> run_sweep(const SweepParams& p);

/// Entry point; args exclude the program name. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tsc
