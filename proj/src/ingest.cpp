#include "tsc/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "tsc/cache_ai.hpp"
#include "tsc/cost.hpp"

namespace tsc {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

[[noreturn]] void schema_fail(const std::string& where, const std::string& what) {
    throw SchemaError(where + ": " + what);
}

const json& field(const json& j, const char* key, const std::string& where) {
    if (!j.is_object())
        schema_fail(where, "expected an object");
    auto it = j.find(key);
    if (it == j.end())
        schema_fail(where, std::string("missing field '") + key + "'");
    return *it;
}

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
    const json& v = field(j, key, where);
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        schema_fail(where + "/" + key, "wrong type");
    }
}

template <typename T>
T get_or(const json& j, const char* key, const std::string& where, T fallback) {
    if (!j.is_object() || !j.contains(key) || j.at(key).is_null())
        return fallback;
    return get<T>(j, key, where);
}

std::pair<int, int> get_pair(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
        schema_fail(where, "expected a pair of integers");
    return {v[0].get<int>(), v[1].get<int>()};
}

json parse_json(const std::string& text, const std::string& where) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        schema_fail(where, "parse error at byte " + std::to_string(e.byte) + ": " + e.what());
    }
}

CacheLevelConfig parse_level(const json& j, const std::string& where, CacheScope scope) {
    CacheLevelConfig c;
    c.sets = get<int>(j, "sets", where);
    c.ways = get<int>(j, "ways", where);
    c.line_size = get<int>(j, "line", where);
    c.hit_latency = get<Cycles>(j, "hit", where);
    c.scope = scope;
    return c;
}

ojson level_json(const CacheLevelConfig& c) {
    ojson j;
    j["sets"] = c.sets;
    j["ways"] = c.ways;
    j["line"] = c.line_size;
    j["hit"] = c.hit_latency;
    return j;
}

TaskGraph task_from_json(const json& j, const std::string& where) {
    TaskGraph t;
    t.id = get<std::string>(j, "task_id", where);
    const std::string w = where + "[" + t.id + "]";
    const json& blocks = field(j, "blocks", w);
    if (!blocks.is_array())
        schema_fail(w + "/blocks", "expected an array");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const std::string bw = w + "/blocks/" + std::to_string(i);
        BasicBlock b;
        b.id = get<int>(blocks[i], "id", bw);
        b.instructions = get<int>(blocks[i], "instructions", bw);
        const json acc = blocks[i].contains("accesses") ? blocks[i].at("accesses") : json::array();
        if (!acc.is_array())
            schema_fail(bw + "/accesses", "expected an array");
        for (std::size_t k = 0; k < acc.size(); ++k) {
            const std::string aw = bw + "/accesses/" + std::to_string(k);
            b.accesses.push_back({get<int>(acc[k], "id", aw), get<std::uint64_t>(acc[k], "address", aw)});
        }
        t.blocks.push_back(std::move(b));
    }
    const json edges = j.contains("edges") ? j.at("edges") : json::array();
    for (std::size_t i = 0; i < edges.size(); ++i)
        t.edges.push_back(get_pair(edges[i], w + "/edges/" + std::to_string(i)));
    const json loops = j.contains("loops") ? j.at("loops") : json::array();
    for (std::size_t i = 0; i < loops.size(); ++i) {
        const std::string lw = w + "/loops/" + std::to_string(i);
        LoopSpec l;
        l.id = get<int>(loops[i], "id", lw);
        l.head = get<int>(loops[i], "head", lw);
        l.tail = get<int>(loops[i], "tail", lw);
        l.back_edge = get_pair(field(loops[i], "back_edge", lw), lw + "/back_edge");
        l.min_bound = get<int>(loops[i], "min_bound", lw);
        l.max_bound = get<int>(loops[i], "max_bound", lw);
        if (loops[i].contains("parent") && !loops[i].at("parent").is_null())
            l.parent = get<int>(loops[i], "parent", lw);
        t.loops.push_back(l);
    }
    const json ex = j.contains("exclusive_pairs") ? j.at("exclusive_pairs") : json::array();
    for (std::size_t i = 0; i < ex.size(); ++i)
        t.exclusive_pairs.push_back(get_pair(ex[i], w + "/exclusive_pairs/" + std::to_string(i)));

    // entry / exit default to the unique source / sink
    std::set<int> has_pred, has_succ;
    for (auto [u, v] : t.edges) {
        has_succ.insert(u);
        has_pred.insert(v);
    }
    std::vector<int> sources, sinks;
    for (const auto& b : t.blocks) {
        if (!has_pred.count(b.id))
            sources.push_back(b.id);
        if (!has_succ.count(b.id))
            sinks.push_back(b.id);
    }
    t.entry_block = get_or<int>(j, "entry", w, sources.empty() ? 0 : sources.front());
    t.exit_block = get_or<int>(j, "exit", w, sinks.empty() ? 0 : sinks.back());
    return t;
}

ChainSpec chain_from_json(const json& j, const std::string& where) {
    ChainSpec c;
    c.id = get<std::string>(j, "id", where);
    const std::string w = where + "[" + c.id + "]";
    const auto trig = get<std::string>(j, "trigger", w);
    if (trig == "ET")
        c.trigger = Trigger::ET;
    else if (trig == "TT")
        c.trigger = Trigger::TT;
    else
        schema_fail(w + "/trigger", "expected \"ET\" or \"TT\"");
    c.tasks = get<std::vector<std::string>>(j, "tasks", w);
    c.core = get<int>(j, "core", w);
    if (j.contains("period") && !j.at("period").is_null())
        c.period = get<Cycles>(j, "period", w);
    if (j.contains("offsets") && !j.at("offsets").is_null())
        c.offsets = get<std::vector<Cycles>>(j, "offsets", w);
    c.priority = get_or<int>(j, "priority", w, 0);
    return c;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw SchemaError(p.string() + ": cannot open file");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::vector<std::filesystem::path> expand(const std::vector<std::filesystem::path>& paths) {
    std::vector<std::filesystem::path> out;
    for (const auto& p : paths) {
        if (std::filesystem::is_directory(p)) {
            std::vector<std::filesystem::path> files;
            for (const auto& e : std::filesystem::directory_iterator(p))
                if (e.is_regular_file() && e.path().extension() == ".json")
                    files.push_back(e.path());
            std::sort(files.begin(), files.end());
            out.insert(out.end(), files.begin(), files.end());
        } else {
            out.push_back(p);
        }
    }
    return out;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out)
        throw std::runtime_error(p.string() + ": write failed");
}

}  // namespace

const TaskGraph& WorkloadBundle::task(const std::string& id) const { return tasks.at(task_index(id)); }

int WorkloadBundle::task_index(const std::string& id) const {
    for (std::size_t i = 0; i < tasks.size(); ++i)
        if (tasks[i].id == id)
            return static_cast<int>(i);
    throw std::out_of_range("unknown task '" + id + "'");
}

SystemSpec parse_system(const std::string& text, const std::string& where) {
    const json j = parse_json(text, where);
    SystemSpec s;
    s.core_count = get<int>(j, "cores", where);
    s.l1 = parse_level(field(j, "l1", where), where + "/l1", CacheScope::Private);
    s.l2 = parse_level(field(j, "l2", where), where + "/l2", CacheScope::Shared);
    s.mem_latency = get<Cycles>(j, "mem_latency", where);
    s.base_cpi = get_or<Cycles>(j, "base_cpi", where, 1);
    s.period_table = get_or<std::vector<Cycles>>(j, "period_table", where, {});
    s.phase3_threshold = get_or<int>(j, "phase3_threshold", where, 1024);
    s.refinement_passes = get_or<int>(j, "refinement_passes", where, 1);
    return s;
}

std::vector<TaskGraph> parse_tasks(const std::string& text, const std::string& where) {
    const json j = parse_json(text, where);
    std::vector<TaskGraph> out;
    if (j.is_array())
        for (const auto& t : j)
            out.push_back(task_from_json(t, where));
    else
        out.push_back(task_from_json(j, where));
    return out;
}

std::vector<ChainSpec> parse_chains(const std::string& text, const std::string& where) {
    const json j = parse_json(text, where);
    std::vector<ChainSpec> out;
    if (j.is_array())
        for (const auto& c : j)
            out.push_back(chain_from_json(c, where));
    else
        out.push_back(chain_from_json(j, where));
    return out;
}

std::string serialize_system(const SystemSpec& s) {
    ojson j;
    j["cores"] = s.core_count;
    j["l1"] = level_json(s.l1);
    j["l2"] = level_json(s.l2);
    j["mem_latency"] = s.mem_latency;
    j["base_cpi"] = s.base_cpi;
    j["period_table"] = s.period_table;
    j["phase3_threshold"] = s.phase3_threshold;
    j["refinement_passes"] = s.refinement_passes;
    return j.dump(2) + "\n";
}

std::string serialize_task(const TaskGraph& t) {
    ojson j;
    j["task_id"] = t.id;
    j["entry"] = t.entry_block;
    j["exit"] = t.exit_block;
    j["blocks"] = ojson::array();
    for (const auto& b : t.blocks) {
        ojson bj;
        bj["id"] = b.id;
        bj["instructions"] = b.instructions;
        bj["accesses"] = ojson::array();
        for (const auto& a : b.accesses)
            bj["accesses"].push_back({{"id", a.id}, {"address", a.address}});
        j["blocks"].push_back(bj);
    }
    j["edges"] = ojson::array();
    for (auto [u, v] : t.edges)
        j["edges"].push_back({u, v});
    j["loops"] = ojson::array();
    for (const auto& l : t.loops) {
        ojson lj;
        lj["id"] = l.id;
        lj["head"] = l.head;
        lj["tail"] = l.tail;
        lj["back_edge"] = {l.back_edge.first, l.back_edge.second};
        lj["min_bound"] = l.min_bound;
        lj["max_bound"] = l.max_bound;
        lj["parent"] = l.parent ? ojson(*l.parent) : ojson(nullptr);
        j["loops"].push_back(lj);
    }
    j["exclusive_pairs"] = ojson::array();
    for (auto [a, b] : t.exclusive_pairs)
        j["exclusive_pairs"].push_back({a, b});
    return j.dump(2) + "\n";
}

std::string serialize_chain(const ChainSpec& c) {
    ojson j;
    j["id"] = c.id;
    j["trigger"] = to_string(c.trigger);
    j["tasks"] = c.tasks;
    j["core"] = c.core;
    j["period"] = c.period ? ojson(*c.period) : ojson(nullptr);
    j["offsets"] = c.offsets ? ojson(*c.offsets) : ojson(nullptr);
    j["priority"] = c.priority;
    return j.dump(2) + "\n";
}

WorkloadBundle parse_workload(const std::filesystem::path& system, const std::vector<std::filesystem::path>& tasks,
                              const std::vector<std::filesystem::path>& chains) {
    WorkloadBundle b;
    b.system = parse_system(read_file(system), system.string());
    for (const auto& p : expand(tasks))
        for (auto& t : parse_tasks(read_file(p), p.string()))
            b.tasks.push_back(std::move(t));
    for (const auto& p : expand(chains))
        for (auto& c : parse_chains(read_file(p), p.string()))
            b.chains.push_back(std::move(c));
    prepare_workload(b);
    return b;
}

std::vector<std::filesystem::path> write_workload(const WorkloadBundle& b, const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> out;
    out.push_back(dir / "system.json");
    write_text(out.back(), serialize_system(b.system));
    for (const auto& t : b.tasks) {
        out.push_back(dir / "tasks" / (t.id + ".json"));
        write_text(out.back(), serialize_task(t));
    }
    for (const auto& c : b.chains) {
        out.push_back(dir / "chains" / (c.id + ".json"));
        write_text(out.back(), serialize_chain(c));
    }
    return out;
}

Cycles assign_period(Cycles total_wcet, const std::vector<Cycles>& table) {
    for (Cycles t : table)
        if (t >= total_wcet)
            return t;
    throw ValidationError({"unschedulable: total WCET " + std::to_string(total_wcet) +
                           " exceeds the largest period in the table"});
}

std::vector<Cycles> assign_tt_offsets(const std::vector<Cycles>& wcets) {
    std::vector<Cycles> off(wcets.size(), 0);
    for (std::size_t i = 1; i < wcets.size(); ++i)
        off[i] = off[i - 1] + wcets[i - 1];
    return off;
}

ChainSpec merge_core_chains(std::vector<ChainSpec> chains, const std::map<std::string, Cycles>& cip_wcet) {
    if (chains.empty())
        throw std::invalid_argument("no chains to merge");
    if (chains.size() == 1)
        return chains.front();
    std::sort(chains.begin(), chains.end(), [](const ChainSpec& a, const ChainSpec& b) {
        return a.priority < b.priority || (a.priority == b.priority && a.id < b.id);
    });
    std::vector<std::string> diags;
    for (const auto& c : chains) {
        if (c.trigger != chains.front().trigger)
            diags.push_back("core " + std::to_string(c.core) + ": chains mix ET and TT triggers");
        if (c.period != chains.front().period)
            diags.push_back("core " + std::to_string(c.core) + ": chains have different periods");
    }
    if (!diags.empty())
        throw ValidationError(std::move(diags));
    ChainSpec m = chains.front();
    m.offsets.reset();
    for (std::size_t i = 1; i < chains.size(); ++i) {
        m.id += "+" + chains[i].id;
        m.tasks.insert(m.tasks.end(), chains[i].tasks.begin(), chains[i].tasks.end());
    }
    if (m.trigger == Trigger::TT) {
        std::vector<Cycles> w;
        for (const auto& t : m.tasks)
            w.push_back(cip_wcet.at(t));
        m.offsets = assign_tt_offsets(w);
    }
    return m;
}

std::map<std::string, Cycles> cip_wcets(const WorkloadBundle& b) {
    std::map<std::string, Cycles> out;
    for (const auto& t : b.tasks) {
        const auto cls = classify_task(t, b.system);
        out[t.id] = program_bounds(t, init_costs(t, cls, b.system)).wcet;
    }
    return out;
}

void prepare_workload(WorkloadBundle& b) {
    if (auto d = validate(b.system); !d.empty())
        throw ValidationError(std::move(d));
    std::vector<std::string> diags;
    std::set<std::string> ids;
    for (auto& t : b.tasks) {
        if (!ids.insert(t.id).second)
            diags.push_back("duplicate task id '" + t.id + "'");
        if (!t.finalized()) {
            try {
                t.finalize();
            } catch (const ValidationError& e) {
                diags.insert(diags.end(), e.diagnostics().begin(), e.diagnostics().end());
            }
        }
    }
    for (const auto& c : b.chains) {
        if (c.tasks.empty())
            diags.push_back("chain '" + c.id + "': no tasks");
        for (const auto& t : c.tasks)
            if (!ids.count(t))
                diags.push_back("chain '" + c.id + "': unknown task '" + t + "'");
        if (c.core < 0 || c.core >= b.system.core_count)
            diags.push_back("chain '" + c.id + "': core " + std::to_string(c.core) + " does not exist");
        if (c.period && *c.period <= 0)
            diags.push_back("chain '" + c.id + "': period must be positive");
    }
    if (!diags.empty())
        throw ValidationError(std::move(diags));

    const auto cip = cip_wcets(b);
    std::map<int, std::vector<ChainSpec>> by_core;
    for (auto& c : b.chains)
        by_core[c.core].push_back(c);
    b.chains.clear();
    for (auto& [core, list] : by_core) {
        ChainSpec c = merge_core_chains(list, cip);
        std::vector<Cycles> w;
        for (const auto& t : c.tasks)
            w.push_back(cip.at(t));
        const Cycles total = std::accumulate(w.begin(), w.end(), Cycles{0});
        if (!c.period)
            c.period = assign_period(total, b.system.period_table);
        if (c.trigger == Trigger::TT && !c.offsets)
            c.offsets = assign_tt_offsets(w);
        const std::string cw = "chain '" + c.id + "': ";
        if (total > *c.period)
            diags.push_back(cw + "unschedulable: total WCET " + std::to_string(total) + " exceeds period " +
                            std::to_string(*c.period));
        if (c.trigger == Trigger::TT) {
            const auto& off = *c.offsets;
            if (off.size() != c.tasks.size())
                diags.push_back(cw + "one offset per task required");
            else {
                if (off.front() != 0)
                    diags.push_back(cw + "first offset must be 0");
                for (std::size_t i = 1; i < off.size(); ++i)
                    if (off[i] < off[i - 1] + w[i - 1])
                        diags.push_back(cw + "offset " + std::to_string(i) + " overlaps the previous task");
                if (off.back() + w.back() > *c.period)
                    diags.push_back(cw + "last task ends after the period");
            }
        } else if (c.offsets) {
            diags.push_back(cw + "offsets are only allowed for TT chains");
        }
        b.chains.push_back(std::move(c));
    }
    if (!diags.empty())
        throw ValidationError(std::move(diags));
}

// ---------------------------------------------------------------------------
// Generator

namespace {

class TaskGenerator {
public:
    TaskGenerator(std::mt19937_64& rng, const GenParams& p, int core, std::uint64_t tag_base)
        : rng_(rng), p_(p), core_(core), tag_(tag_base) {
        const int sets = p.system.l2.sets;
        hot_ = std::max(1, sets / 8);
        const int rest = sets - hot_;
        per_core_ = std::max(1, rest / std::max(1, p.cores));
    }

    TaskGraph make(const std::string& id) {
        t_ = TaskGraph{};
        t_.id = id;
        next_access_ = 0;
        lines_.clear();
        const int total = uni(3, std::max(3, p_.max_blocks));
        const int entry = block();
        auto [f, l] = sequence(total - 2, 0, -1);
        edge(entry, f);
        const int exit = block();
        edge(l, exit);
        t_.entry_block = entry;
        t_.exit_block = exit;
        return t_;
    }

private:
    int uni(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    bool coin(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p; }

    std::uint64_t new_line() {
        const int sets = p_.system.l2.sets;
        int set;
        if (coin(p_.collision))
            set = uni(0, hot_ - 1);
        else
            set = (hot_ + core_ * per_core_ + uni(0, per_core_ - 1)) % sets;
        return tag_++ * static_cast<std::uint64_t>(sets) + static_cast<std::uint64_t>(set);
    }

    int block() {
        BasicBlock b;
        b.id = static_cast<int>(t_.blocks.size());
        const int n = uni(0, p_.max_accesses);
        const int line = p_.system.l2.line_size;
        for (int i = 0; i < n; ++i) {
            std::uint64_t l;
            if (!lines_.empty() && coin(p_.reuse)) {
                l = lines_[uni(0, static_cast<int>(lines_.size()) - 1)];
            } else {
                l = new_line();
                lines_.push_back(l);
            }
            const auto addr = l * line + static_cast<std::uint64_t>(uni(0, line / 4 - 1)) * 4;
            b.accesses.push_back({next_access_++, addr});
        }
        b.instructions = uni(std::max(1, n), std::max({1, n, p_.max_instructions}));
        t_.blocks.push_back(std::move(b));
        return t_.blocks.back().id;
    }

    void edge(int u, int v) { t_.edges.push_back({u, v}); }

    // Consumes up to `budget` blocks (at least one).
    std::pair<int, int> sequence(int budget, int depth, int parent) {
        std::pair<int, int> out{-1, -1};
        do {
            auto [f, l, used] = region(budget, depth, parent);
            if (out.first < 0)
                out.first = f;
            else
                edge(out.second, f);
            out.second = l;
            budget -= used;
        } while (budget > 0 && coin(0.7));
        return out;
    }

    std::tuple<int, int, int> region(int budget, int depth, int parent) {
        std::vector<int> kinds{0};
        if (budget >= 4)
            kinds.push_back(1);
        if (budget >= 3 && depth < p_.max_depth)
            kinds.push_back(2);
        const int kind = kinds[uni(0, static_cast<int>(kinds.size()) - 1)];
        if (kind == 0) {
            const int x = block();
            return {x, x, 1};
        }
        if (kind == 1) {
            const int br = block(), a = block(), c = block(), j = block();
            edge(br, a);
            edge(br, c);
            edge(a, j);
            edge(c, j);
            t_.exclusive_pairs.push_back({a, c});
            return {br, j, 4};
        }
        const int h = block();
        const int id = static_cast<int>(t_.loops.size());
        t_.loops.push_back({});
        const int before = static_cast<int>(t_.blocks.size());
        auto [f, l] = sequence(uni(1, budget - 2), depth + 1, id);
        const int used = static_cast<int>(t_.blocks.size()) - before;
        const int tl = block();
        edge(h, f);
        edge(l, tl);
        LoopSpec s;
        s.id = id;
        s.head = h;
        s.tail = tl;
        s.back_edge = {tl, h};
        s.min_bound = uni(1, p_.max_bound);
        s.max_bound = uni(s.min_bound, p_.max_bound);
        if (parent >= 0)
            s.parent = parent;
        t_.loops[id] = s;
        edge(tl, h);
        return {h, tl, used + 2};
    }

    std::mt19937_64& rng_;
    const GenParams& p_;
    int core_;
    std::uint64_t tag_;
    int hot_ = 1, per_core_ = 1;
    TaskGraph t_;
    int next_access_ = 0;
    std::vector<std::uint64_t> lines_;
};

constexpr Cycles kBasePeriods[] = {16, 20, 24, 32, 40, 48, 64};

}  // namespace

WorkloadBundle generate_workload(std::uint64_t seed, const GenParams& p) {
    if (p.cores < 1 || p.cores > 64)
        throw std::invalid_argument("cores must be in [1, 64]");
    if (p.tasks_per_chain != 1 && p.tasks_per_chain != 2 && p.tasks_per_chain != 4)
        throw std::invalid_argument("tasks per chain must be 1, 2 or 4");
    if (p.max_blocks < 3 || p.max_depth < 0 || p.max_depth > 2 || p.max_bound < 1)
        throw std::invalid_argument("blocks >= 3, loop depth in [0, 2] and bounds >= 1 required");
    if (!(p.utilization > 0.0 && p.utilization <= 1.0))
        throw std::invalid_argument("utilization must be in (0, 1]");
    if (p.collision < 0.0 || p.collision > 1.0 || p.reuse < 0.0 || p.reuse > 1.0)
        throw std::invalid_argument("probabilities must be in [0, 1]");

    std::mt19937_64 rng(seed);
    WorkloadBundle b;
    b.system = p.system;
    b.system.core_count = p.cores;
    std::uint64_t tag_base = 1;
    for (int core = 0; core < p.cores; ++core) {
        ChainSpec c;
        c.id = "chain" + std::to_string(core);
        c.core = core;
        c.trigger = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p.tt_fraction ? Trigger::TT : Trigger::ET;
        for (int i = 0; i < p.tasks_per_chain; ++i) {
            TaskGenerator gen(rng, p, core, tag_base);
            tag_base += 1u << 12;
            const std::string id = "c" + std::to_string(core) + "t" + std::to_string(i);
            b.tasks.push_back(gen.make(id));
            b.tasks.back().finalize();
            c.tasks.push_back(id);
        }
        b.chains.push_back(std::move(c));
    }

    // period table scaled to the largest chain, then idle padding to the target utilization
    auto cip = cip_wcets(b);
    auto chain_total = [&](const ChainSpec& c) {
        Cycles s = 0;
        for (const auto& t : c.tasks)
            s += cip.at(t);
        return s;
    };
    auto target = [&](Cycles period) {
        return static_cast<Cycles>(std::ceil(p.utilization * static_cast<double>(period) - 1e-9));
    };
    Cycles largest = 0;
    for (const auto& c : b.chains)
        largest = std::max(largest, chain_total(c));
    Cycles decade = 1;
    while (target(kBasePeriods[6] * decade) < largest)
        decade *= 10;
    b.system.period_table.clear();
    for (Cycles base : kBasePeriods)
        b.system.period_table.push_back(base * decade);

    for (auto& c : b.chains) {
        const Cycles total = chain_total(c);
        Cycles period = b.system.period_table.back();
        for (Cycles t : b.system.period_table)
            if (target(t) >= total) {
                period = t;
                break;
            }
        const Cycles pad = (target(period) - total) / b.system.base_cpi;
        auto& first = b.tasks[b.task_index(c.tasks.front())];
        first.blocks[first.entry()].instructions += static_cast<int>(pad);
        first.finalize();
        cip[first.id] += pad * b.system.base_cpi;
        c.period = period;
        if (c.trigger == Trigger::TT) {
            std::vector<Cycles> w;
            for (const auto& t : c.tasks)
                w.push_back(cip.at(t));
            c.offsets = assign_tt_offsets(w);
        }
    }
    prepare_workload(b);
    return b;
}

}  // namespace tsc
