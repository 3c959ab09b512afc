#include "tsc/cache_ai.hpp"

#include <algorithm>
#include <optional>
#include <set>
#include <sstream>

namespace tsc {

const char* to_string(Chmc c) {
    switch (c) {
    case Chmc::AH: return "AH";
    case Chmc::PS: return "PS";
    case Chmc::NC: return "NC";
    case Chmc::Bypass: return "BYPASS";
    }
    return "?";
}

int MustState::age(std::uint64_t line) const {
    auto it = std::lower_bound(ages_.begin(), ages_.end(), std::make_pair(line, 0));
    return it != ages_.end() && it->first == line ? it->second : 0;
}

void MustState::access(std::uint64_t line) {
    const int set = level_->set_of_line(line);
    const int ways = level_->ways;
    int old = age(line);
    if (old == 0)
        old = ways + 1;
    std::vector<std::pair<std::uint64_t, int>> next;
    next.reserve(ages_.size() + 1);
    for (auto [l, a] : ages_) {
        if (l == line)
            continue;
        if (level_->set_of_line(l) == set && a < old)
            ++a;
        if (a <= ways)
            next.emplace_back(l, a);
    }
    auto pos = std::lower_bound(next.begin(), next.end(), std::make_pair(line, 0));
    next.insert(pos, {line, 1});
    ages_ = std::move(next);
}

MustState MustState::join(const MustState& a, const MustState& b) {
    MustState out(a.level_);
    std::size_t i = 0, j = 0;
    while (i < a.ages_.size() && j < b.ages_.size()) {
        if (a.ages_[i].first < b.ages_[j].first)
            ++i;
        else if (b.ages_[j].first < a.ages_[i].first)
            ++j;
        else {
            out.ages_.emplace_back(a.ages_[i].first, std::max(a.ages_[i].second, b.ages_[j].second));
            ++i;
            ++j;
        }
    }
    return out;
}

namespace {

// Round-robin sweeps in topological order until no out-state changes.
// Transfer is applied per block; returns the in-states and the sweep count.
template <typename State, typename Join, typename Transfer>
std::vector<std::optional<State>> fixpoint(const TaskGraph& task, const State& entry_state, Join join,
                                           Transfer transfer, int* sweeps) {
    const int n = static_cast<int>(task.blocks.size());
    std::vector<std::optional<State>> in(n), out(n);
    bool changed = true;
    int count = 0;
    while (changed) {
        changed = false;
        ++count;
        for (int b : task.topo_order()) {
            std::optional<State> s;
            if (b == task.entry())
                s = entry_state;
            for (int p : task.pred(b)) {
                if (!out[p])
                    continue;
                s = s ? join(*s, *out[p]) : *out[p];
            }
            if (!s)
                continue;
            in[b] = s;
            State o = *s;
            transfer(b, o);
            if (!out[b] || !(*out[b] == o)) {
                out[b] = std::move(o);
                changed = true;
            }
        }
    }
    if (sweeps)
        *sweeps = count;
    return in;
}

std::uint64_t l1_line(const TaskGraph& t, const CacheLevelConfig& c, int b, int j) {
    return c.line_of(t.blocks[b].accesses[j].address);
}

}  // namespace

std::vector<Chmc> l1_must_analysis(const TaskGraph& task, const CacheLevelConfig& l1, int* iterations) {
    auto transfer = [&](int b, MustState& s) {
        for (std::size_t j = 0; j < task.blocks[b].accesses.size(); ++j)
            s.access(l1_line(task, l1, b, static_cast<int>(j)));
    };
    auto in = fixpoint(task, MustState(&l1), MustState::join, transfer, iterations);
    std::vector<Chmc> out(task.access_count(), Chmc::NC);
    for (int b = 0; b < static_cast<int>(task.blocks.size()); ++b) {
        MustState s = *in[b];
        for (std::size_t j = 0; j < task.blocks[b].accesses.size(); ++j) {
            const auto line = l1_line(task, l1, b, static_cast<int>(j));
            out[task.access_flat(b, static_cast<int>(j))] = s.age(line) > 0 ? Chmc::AH : Chmc::NC;
            s.access(line);
        }
    }
    return out;
}

std::vector<L2Access> l2_reach(const TaskGraph& task, const CacheLevelConfig& l1, std::span<const Chmc> l1_chmc) {
    // May-referenced lines since job release (union join). A line never
    // referenced before cannot be in the freshly invalidated L1.
    using Lines = std::set<std::uint64_t>;
    auto join = [](const Lines& a, const Lines& b) {
        Lines o = a;
        o.insert(b.begin(), b.end());
        return o;
    };
    auto transfer = [&](int b, Lines& s) {
        for (std::size_t j = 0; j < task.blocks[b].accesses.size(); ++j)
            s.insert(l1_line(task, l1, b, static_cast<int>(j)));
    };
    auto in = fixpoint(task, Lines{}, join, transfer, nullptr);
    std::vector<L2Access> out(task.access_count(), L2Access::Uncertain);
    for (int b = 0; b < static_cast<int>(task.blocks.size()); ++b) {
        Lines s = *in[b];
        for (std::size_t j = 0; j < task.blocks[b].accesses.size(); ++j) {
            const int f = task.access_flat(b, static_cast<int>(j));
            const auto line = l1_line(task, l1, b, static_cast<int>(j));
            if (l1_chmc[f] == Chmc::AH)
                out[f] = L2Access::Never;
            else if (!s.count(line))
                out[f] = L2Access::Always;
            s.insert(line);
        }
    }
    return out;
}

std::vector<L2Result> l2_exclusive_analysis(const TaskGraph& task, const CacheLevelConfig& l2,
                                            std::span<const L2Access> reach, int* iterations) {
    auto step = [&](MustState& s, int f, std::uint64_t line) {
        switch (reach[f]) {
        case L2Access::Never: break;
        case L2Access::Always: s.access(line); break;
        case L2Access::Uncertain: {
            MustState touched = s;
            touched.access(line);
            s = MustState::join(s, touched);
            break;
        }
        }
    };
    auto transfer = [&](int b, MustState& s) {
        for (std::size_t j = 0; j < task.blocks[b].accesses.size(); ++j) {
            const int f = task.access_flat(b, static_cast<int>(j));
            step(s, f, l2.line_of(task.blocks[b].accesses[j].address));
        }
    };
    auto in = fixpoint(task, MustState(&l2), MustState::join, transfer, iterations);

    std::vector<L2Result> out(task.access_count());
    for (int b = 0; b < static_cast<int>(task.blocks.size()); ++b) {
        MustState s = *in[b];
        for (std::size_t j = 0; j < task.blocks[b].accesses.size(); ++j) {
            const int f = task.access_flat(b, static_cast<int>(j));
            const auto line = l2.line_of(task.blocks[b].accesses[j].address);
            if (reach[f] == L2Access::Never)
                out[f] = {Chmc::Bypass, 0, -1};
            else if (int a = s.age(line); a > 0)
                out[f] = {Chmc::AH, a, -1};
            else
                out[f] = {Chmc::NC, 0, -1};
            step(s, f, line);
        }
    }

    // Persistence: within the innermost loop, a line whose set sees at most
    // N distinct L2-visible lines is never evicted after its first load.
    const auto& loops = task.loop_nodes();
    for (int f = 0; f < task.access_count(); ++f) {
        if (out[f].chmc != Chmc::NC)
            continue;
        auto [b, j] = task.access_at(f);
        const int L = task.innermost_loop(b);
        if (L < 0)
            continue;
        const auto line = l2.line_of(task.blocks[b].accesses[j].address);
        const int set = l2.set_of_line(line);
        std::set<std::uint64_t> conflicts;
        for (int bb : loops[L].body)
            for (std::size_t jj = 0; jj < task.blocks[bb].accesses.size(); ++jj) {
                const int ff = task.access_flat(bb, static_cast<int>(jj));
                const auto l = l2.line_of(task.blocks[bb].accesses[jj].address);
                if (reach[ff] != L2Access::Never && l2.set_of_line(l) == set)
                    conflicts.insert(l);
            }
        const int k = static_cast<int>(conflicts.size());
        if (k <= l2.ways)
            out[f] = {Chmc::PS, k, L};
    }
    return out;
}

Chmc refine_chmc(Chmc l2, int age, int interference, int ways) {
    if (l2 != Chmc::AH && l2 != Chmc::PS)
        return l2;
    return ways - age < interference ? Chmc::NC : l2;
}

TaskClassification classify_task(const TaskGraph& task, const SystemSpec& system) {
    TaskClassification tc;
    const auto l1 = l1_must_analysis(task, system.l1, &tc.l1_iterations);
    const auto reach = l2_reach(task, system.l1, l1);
    const auto l2 = l2_exclusive_analysis(task, system.l2, reach, &tc.l2_iterations);
    tc.accesses.resize(task.access_count());
    for (int f = 0; f < task.access_count(); ++f) {
        auto [b, j] = task.access_at(f);
        auto& a = tc.accesses[f];
        const auto& acc = task.blocks[b].accesses[j];
        a.access_id = acc.id;
        a.block = b;
        a.position = j;
        a.l2_line = system.l2.line_of(acc.address);
        a.l2_set = system.l2.set_of_line(a.l2_line);
        a.l1 = l1[f];
        a.reach = reach[f];
        a.l2 = l2[f].chmc;
        a.l2_age = l2[f].age;
        a.scope_loop = l2[f].scope_loop;
        a.refined = a.l2;
    }
    return tc;
}

std::string classification_csv(const TaskGraph& task, const TaskClassification& cls) {
    std::ostringstream os;
    os << "task,access,set,l1,l2,age,interference,refined\n";
    for (const auto& a : cls.accesses)
        os << task.id << ',' << a.access_id << ',' << a.l2_set << ',' << to_string(a.l1) << ','
           << to_string(a.l2) << ',' << a.l2_age << ',' << a.interference << ',' << to_string(a.refined) << '\n';
    return os.str();
}

}  // namespace tsc
