#pragma once

// Interval-sequence algebra and the hierarchical temporal overlap test.

#include <algorithm>
#include <optional>

#include "tsc/model.hpp"

namespace tsc {

/// Pairwise sum {[a.lo + b.lo, a.hi + b.hi]} over all pairs, sorted by lo.
/// Not normalized: |result| == |a| * |b|.
IntervalSeq seq_merge(const IntervalSeq& a, const IntervalSeq& b);

/// Coalesces overlapping or touching intervals of a sequence sorted by lo.
IntervalSeq normalize(const IntervalSeq& a);

enum class OverlapSemantics {
    Closed,  ///< max(lo) <= min(hi); touching endpoints overlap
    Strict,  ///< max(lo) <  min(hi)
};

/// Two-pointer sweep over the normalized sequences, O(|a| + |b|).
bool seq_overlap(const IntervalSeq& a, const IntervalSeq& b,
                 OverlapSemantics sem = OverlapSemantics::Closed);

inline bool intervals_overlap(const Interval& a, const Interval& b) {
    return std::max(a.lo, b.lo) <= std::min(a.hi, b.hi);
}

enum class OverlapPhase { Job, OuterLoop, Block };

const char* to_string(OverlapPhase p);

struct OverlapVerdict {
    bool result = false;
    OverlapPhase decided_at = OverlapPhase::Job;
};

/// What the hierarchical test needs to know about one access site.
struct OverlapSite {
    Interval lifetime;                 ///< job lifetime
    std::optional<Interval> envelope;  ///< outermost-loop window; empty for non-loop blocks
    const IntervalSeq* windows = nullptr;  ///< fine-grained absolute windows (BBATime)
};

/// Phase I compares job lifetimes, Phase II the outermost-loop envelopes (a
/// non-loop side uses the hull of its windows), Phase III the block windows.
/// Each phase only rejects supersets of the next one.
OverlapVerdict hierarchical_overlap(const OverlapSite& a, const OverlapSite& b,
                                    OverlapSemantics sem = OverlapSemantics::Closed);

}  // namespace tsc
