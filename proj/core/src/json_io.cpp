#include "hpcdag/json_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace hpcdag {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                    const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known)
            throw std::invalid_argument("unknown field \"" + it.key() + "\" in " + where);
    }
}

NodeKind parse_kind(const std::string& s) {
    if (s == "SubTask") return NodeKind::SubTask;
    if (s == "Alternative") return NodeKind::Alternative;
    if (s == "Conditional") return NodeKind::Conditional;
    if (s == "Junction") return NodeKind::Junction;
    throw std::invalid_argument("unknown node kind \"" + s + "\"");
}

Node parse_node(const json& j) {
    reject_unknown(j, {"id", "kind", "tag", "wcet", "max_preemptions", "split_cost"},
                   "node");
    Node n;
    n.id = j.at("id").get<int>();
    n.kind = parse_kind(j.at("kind").get<std::string>());
    if (n.kind == NodeKind::SubTask) {
        n.tag.name = j.at("tag").get<std::string>();
        n.wcet = j.at("wcet").get<Time>();
        n.max_preemptions = j.value("max_preemptions", 0);
        n.split_cost = j.value("split_cost", Time{0});
    } else {
        for (const char* f : {"tag", "wcet", "max_preemptions", "split_cost"})
            if (j.contains(f))
                throw std::invalid_argument(std::string("field \"") + f +
                                            "\" not allowed for kind " + to_string(n.kind));
    }
    return n;
}

Engine parse_engine(const json& j) {
    reject_unknown(j, {"id", "tag", "preemptive", "preempt_cost_ratio"}, "engine");
    return Engine::make(j.at("id").get<int>(), Tag{j.at("tag").get<std::string>()},
                        j.at("preemptive").get<bool>(),
                        j.at("preempt_cost_ratio").get<double>());
}

TaskSpec parse_task(const json& j) {
    reject_unknown(j, {"id", "period", "deadline", "nodes", "edges"}, "task");
    TaskSpec t;
    t.id = j.at("id").get<int>();
    t.period = j.at("period").get<Time>();
    t.deadline = j.at("deadline").get<Time>();
    for (const auto& nj : j.at("nodes")) t.nodes.push_back(parse_node(nj));
    for (const auto& ej : j.at("edges")) {
        if (!ej.is_array() || ej.size() != 2)
            throw std::invalid_argument("edge must be a [src, dst] pair");
        t.edges.emplace_back(ej[0].get<int>(), ej[1].get<int>());
    }
    return t;
}

}  // namespace

TaskSetFile load_taskset_json(const std::string& text) {
    const json root = json::parse(text);
    reject_unknown(root, {"architecture", "tasks", "meta"}, "task-set file");
    TaskSetFile ts;
    const json& arch = root.at("architecture");
    reject_unknown(arch, {"engines"}, "architecture");
    for (const auto& ej : arch.at("engines"))
        ts.architecture.engines.push_back(parse_engine(ej));
    for (const auto& tj : root.at("tasks")) ts.tasks.push_back(parse_task(tj));
    if (root.contains("meta"))
        for (auto it = root["meta"].begin(); it != root["meta"].end(); ++it)
            ts.meta.emplace_back(it.key(), it.value().is_string()
                                               ? it.value().get<std::string>()
                                               : it.value().dump());
    return ts;
}

TaskSetFile load_taskset_file(const std::string& path) {
    return load_taskset_json(read_file(path));
}

std::string taskset_to_json(const TaskSetFile& ts) {
    json root;
    json engines = json::array();
    for (const auto& e : ts.architecture.engines) {
        json ej;
        ej["id"] = e.id;
        ej["tag"] = e.tag.name;
        ej["preemptive"] = e.preemptive;
        ej["preempt_cost_ratio"] =
            static_cast<double>(e.ratio_num) / static_cast<double>(e.ratio_den);
        engines.push_back(std::move(ej));
    }
    root["architecture"]["engines"] = std::move(engines);

    json tasks = json::array();
    auto specs = ts.tasks;
    std::sort(specs.begin(), specs.end(),
              [](const TaskSpec& a, const TaskSpec& b) { return a.id < b.id; });
    for (const auto& t : specs) {
        json tj;
        tj["id"] = t.id;
        tj["period"] = t.period;
        tj["deadline"] = t.deadline;
        auto nodes = t.nodes;
        std::sort(nodes.begin(), nodes.end(),
                  [](const Node& a, const Node& b) { return a.id < b.id; });
        json njs = json::array();
        for (const auto& n : nodes) {
            json nj;
            nj["id"] = n.id;
            nj["kind"] = to_string(n.kind);
            if (n.kind == NodeKind::SubTask) {
                nj["tag"] = n.tag.name;
                nj["wcet"] = n.wcet;
                nj["max_preemptions"] = n.max_preemptions;
                nj["split_cost"] = n.split_cost;
            }
            njs.push_back(std::move(nj));
        }
        tj["nodes"] = std::move(njs);
        auto edges = t.edges;
        std::sort(edges.begin(), edges.end());
        json ejs = json::array();
        for (const auto& [a, b] : edges) ejs.push_back(json::array({a, b}));
        tj["edges"] = std::move(ejs);
        tasks.push_back(std::move(tj));
    }
    root["tasks"] = std::move(tasks);

    if (!ts.meta.empty()) {
        json meta;
        for (const auto& [k, v] : ts.meta) meta[k] = v;
        root["meta"] = std::move(meta);
    }
    return root.dump(2) + "\n";
}

void save_taskset_file(const TaskSetFile& ts, const std::string& path) {
    write_file(path, taskset_to_json(ts));
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

}  // namespace hpcdag
