#pragma once

// Abstract-interpretation cache analysis.
//
// Step 1 classifies every access under exclusive use of the shared cache:
// L1 must analysis (AH / NC), then an L2 must analysis filtered by the L1
// outcome, then a loop-scope persistence check. Step 2 (`refine_chmc`)
// downgrades AH / PS accesses once the inter-core interference is known.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tsc/model.hpp"

namespace tsc {

enum class Chmc { AH, PS, NC, Bypass };

const char* to_string(Chmc c);

/// How an access reaches the L2 given its L1 behaviour.
enum class L2Access {
    Always,     ///< certain L1 miss (first reference since the job release)
    Uncertain,  ///< may hit or miss L1
    Never,      ///< L1 always hit
};

struct AccessClassification {
    int access_id = 0;
    int block = 0;      ///< block index
    int position = 0;   ///< position inside the block
    std::uint64_t l2_line = 0;
    int l2_set = 0;
    Chmc l1 = Chmc::NC;
    L2Access reach = L2Access::Uncertain;
    Chmc l2 = Chmc::NC;
    int l2_age = 0;           ///< upper bound on LRU age, 0 unless AH/PS
    int scope_loop = -1;      ///< persistence scope (loop index) for PS
    int interference = 0;     ///< |Mc(m)|
    Chmc refined = Chmc::NC;  ///< after interference refinement

    bool l2_visible() const { return l1 != Chmc::AH; }
};

struct TaskClassification {
    std::vector<AccessClassification> accesses;  ///< indexed by flat access index
    int l1_iterations = 0;  ///< sweeps until the L1 fixed point
    int l2_iterations = 0;  ///< sweeps until the L2 fixed point
};

/// LRU must-cache state: line -> upper bound on its age.
class MustState {
public:
    explicit MustState(const CacheLevelConfig* level) : level_(level) { }

    /// Age bound of a line, 0 when not guaranteed cached.
    int age(std::uint64_t line) const;
    void access(std::uint64_t line);
    /// Intersection keeping the larger age.
    static MustState join(const MustState& a, const MustState& b);

    friend bool operator==(const MustState& a, const MustState& b) { return a.ages_ == b.ages_; }

private:
    const CacheLevelConfig* level_;
    std::vector<std::pair<std::uint64_t, int>> ages_;  // sorted by line
};

/// AH iff the line is guaranteed in L1 at the access; loops are iterated to
/// their fixed point with a single merged context.
std::vector<Chmc> l1_must_analysis(const TaskGraph& task, const CacheLevelConfig& l1,
                                   int* iterations = nullptr);

/// Access reach classification; relies on L1 being invalidated at each job release.
std::vector<L2Access> l2_reach(const TaskGraph& task, const CacheLevelConfig& l1,
                               std::span<const Chmc> l1_chmc);

struct L2Result {
    Chmc chmc = Chmc::NC;
    int age = 0;
    int scope_loop = -1;
};

/// Exclusive-use L2 analysis for every access (Bypass when the L1 always hits).
std::vector<L2Result> l2_exclusive_analysis(const TaskGraph& task, const CacheLevelConfig& l2,
                                            std::span<const L2Access> reach,
                                            int* iterations = nullptr);

/// N - age < interference downgrades to NC; only AH and PS are affected.
Chmc refine_chmc(Chmc l2, int age, int interference, int ways);

/// Full step-1 classification; `refined` starts equal to `l2`.
TaskClassification classify_task(const TaskGraph& task, const SystemSpec& system);

/// CSV rows: access id, set, l1, l2, age, interference, refined.
std::string classification_csv(const TaskGraph& task, const TaskClassification& cls);

}  // namespace tsc
