#include "tsc/overlap.hpp"

#include <algorithm>

namespace tsc {

IntervalSeq seq_merge(const IntervalSeq& a, const IntervalSeq& b) {
    std::vector<Interval> out;
    out.reserve(a.size() * b.size());
    for (const auto& x : a)
        for (const auto& y : b)
            out.push_back({x.lo + y.lo, x.hi + y.hi});
    std::stable_sort(out.begin(), out.end(), [](const Interval& p, const Interval& q) {
        return p.lo < q.lo || (p.lo == q.lo && p.hi < q.hi);
    });
    return IntervalSeq(std::move(out));
}

IntervalSeq normalize(const IntervalSeq& a) {
    std::vector<Interval> out;
    out.reserve(a.size());
    for (const auto& it : a) {
        if (!out.empty() && it.lo <= out.back().hi)
            out.back().hi = std::max(out.back().hi, it.hi);
        else
            out.push_back(it);
    }
    return IntervalSeq(std::move(out));
}

bool seq_overlap(const IntervalSeq& a_in, const IntervalSeq& b_in, OverlapSemantics sem) {
    const IntervalSeq a = normalize(a_in);
    const IntervalSeq b = normalize(b_in);
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const Cycles lo = std::max(a[i].lo, b[j].lo);
        const Cycles hi = std::min(a[i].hi, b[j].hi);
        if (sem == OverlapSemantics::Closed ? lo <= hi : lo < hi)
            return true;
        if (a[i].hi < b[j].hi)
            ++i;
        else
            ++j;
    }
    return false;
}

const char* to_string(OverlapPhase p) {
    switch (p) {
    case OverlapPhase::Job: return "job";
    case OverlapPhase::OuterLoop: return "outer-loop";
    case OverlapPhase::Block: return "block";
    }
    return "?";
}

OverlapVerdict hierarchical_overlap(const OverlapSite& a, const OverlapSite& b, OverlapSemantics sem) {
    auto one = [&](Interval x, Interval y) {
        return seq_overlap(IntervalSeq{x}, IntervalSeq{y}, sem);
    };
    if (!one(a.lifetime, b.lifetime))
        return {false, OverlapPhase::Job};

    auto env = [](const OverlapSite& s) {
        if (s.envelope)
            return *s.envelope;
        return s.windows && !s.windows->empty() ? s.windows->hull() : s.lifetime;
    };
    if (!one(env(a), env(b)))
        return {false, OverlapPhase::OuterLoop};

    if (!a.windows || !b.windows)
        return {true, OverlapPhase::OuterLoop};
    return {seq_overlap(*a.windows, *b.windows, sem), OverlapPhase::Block};
}

}  // namespace tsc
