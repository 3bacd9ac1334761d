#pragma once

#include <string>
#include <vector>

#include "hpcdag/model.hpp"

namespace hpcdag {

struct TaskSetFile {
    Architecture architecture;
    std::vector<TaskSpec> tasks;
    // optional metadata (generator seed etc.), free-form key -> value
    std::vector<std::pair<std::string, std::string>> meta;
};

/// Parses the task-set JSON format. Unknown fields are rejected with
/// std::invalid_argument; so are fields not applicable to a node kind.
TaskSetFile load_taskset_json(const std::string& text);
TaskSetFile load_taskset_file(const std::string& path);

/// Canonical serialization: nodes and edges sorted by id, stable key
/// order, 2-space indentation. Byte-stable for golden tests.
std::string taskset_to_json(const TaskSetFile& ts);
void save_taskset_file(const TaskSetFile& ts, const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace hpcdag
