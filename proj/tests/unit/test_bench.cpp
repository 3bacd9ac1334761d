#include <doctest.h>

#include <filesystem>

#include "hpcdag/json_io.hpp"
#include "hpcdag/sweep.hpp"

using namespace hpcdag;

namespace {

SweepConfig tiny_config() {
    SweepConfig cfg;
    cfg.steps = 4;
    cfg.runs_per_step = 2;
    cfg.heuristics = {"BRF-P", "WOF-P"};
    cfg.base_seed = 7;
    cfg.gen.n_tasks_min = 4;
    cfg.gen.n_tasks_max = 5;
    cfg.gen.nodes_min = 10;
    cfg.gen.nodes_max = 14;
    return cfg;
}

}  // namespace

TEST_CASE("presets match the documented engine mix") {
    const Architecture xavier = xavier_preset();
    CHECK(xavier.engines.size() == 12);
    CHECK(xavier.count_tag(Tag{"CPU"}) == 8);
    CHECK(xavier.count_tag(Tag{"dGPU"}) == 1);
    CHECK(xavier.count_tag(Tag{"DLA"}) == 1);
    // accelerators run chunk-split jobs: preemptible at chunk boundaries,
    // the split overhead carried by the cost ratio
    for (const auto& e : xavier.engines) CHECK(e.preemptive);
    CHECK(xavier.engines[10].ratio_num == 1);
    CHECK(xavier.engines[10].ratio_den == 10);
    const Architecture pegasus = pegasus_preset();
    CHECK(pegasus.engines.size() == 16);
    CHECK(pegasus.count_tag(Tag{"dGPU"}) == 2);
    CHECK(pegasus.tags().size() == 5);
}

TEST_CASE("per-index targets scale to the engine count over 16 steps") {
    const Architecture xavier = xavier_preset();
    auto t1 = targets_for_index(xavier, 1, 16);
    CHECK(t1[Tag{"CPU"}] == doctest::Approx(0.5));
    CHECK(t1[Tag{"dGPU"}] == doctest::Approx(0.0625));
    auto t0 = targets_for_index(xavier, 0, 16);
    CHECK(t0[Tag{"CPU"}] == doctest::Approx(0.0));
    auto t15 = targets_for_index(xavier, 15, 16);
    CHECK(t15[Tag{"CPU"}] == doctest::Approx(7.5));
}

TEST_CASE("index zero is always schedulable") {
    SweepConfig cfg = tiny_config();
    cfg.steps = 1;  // only index 0
    const SweepResult r = run_sweep(cfg);
    for (std::size_t c = 0; c < r.columns.size(); ++c)
        CHECK(r.sched_rate(c, 0) == doctest::Approx(1.0));
}

TEST_CASE("baseline success implies full-search success, per seed") {
    const SweepConfig cfg = tiny_config();
    const SweepResult r = run_sweep(cfg);
    REQUIRE(r.columns.back() == "CP-DAG");
    const std::size_t cp = r.columns.size() - 1;
    for (int i = 0; i < r.steps; ++i)
        for (int run = 0; run < r.runs; ++run)
            if (r.records[cp][i][run].success) CHECK(r.records[0][i][run].success);
}

TEST_CASE("dat files: shape, determinism, parallel equals serial") {
    SweepConfig cfg = tiny_config();
    const SweepResult serial = run_sweep(cfg);
    cfg.threads = 2;
    const SweepResult parallel = run_sweep(cfg);

    const auto dir = std::filesystem::temp_directory_path() / "hpcdag_dat_test";
    emit_dat(serial, (dir / "serial").string());
    emit_dat(parallel, (dir / "parallel").string());
    for (const char* name : {"sched_rate.dat", "avg_ncore.dat", "avg_u_a.dat"}) {
        const std::string a = read_file((dir / "serial" / name).string());
        const std::string b = read_file((dir / "parallel" / name).string());
        CHECK(a == b);
    }

    const std::string text = read_file((dir / "serial" / "sched_rate.dat").string());
    int data_rows = 0, header_rows = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto eol = text.find('\n', pos);
        const std::string line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (line.empty()) continue;
        if (line[0] == '#') { ++header_rows; continue; }
        ++data_rows;
        // 1 index column + one per heuristic + CP-DAG
        int fields = 1;
        for (char ch : line) fields += ch == ' ' ? 1 : 0;
        CHECK(fields == 1 + 3);
    }
    CHECK(data_rows == cfg.steps);
    CHECK(header_rows == 2);
    std::filesystem::remove_all(dir);
}

TEST_CASE("empty column list emits a header-only table") {
    const std::string table = dat_table({}, {}, "nothing");
    CHECK(table.find('#') == 0);
    CHECK(table.rfind('\n') == table.size() - 1);
    int data_rows = 0;
    std::size_t pos = 0;
    while (pos < table.size()) {
        const auto eol = table.find('\n', pos);
        if (table[pos] != '#') ++data_rows;
        pos = eol + 1;
    }
    CHECK(data_rows == 0);
}

TEST_CASE("preemption experiment: reduced dominates max per seed") {
    SweepConfig cfg = tiny_config();
    cfg.steps = 6;
    const PreemptionResult r = run_preemption_experiment(cfg);
    CHECK(r.rate(0, 0) == doctest::Approx(1.0));
    CHECK(r.rate(1, 0) == doctest::Approx(1.0));
    for (int i = 0; i < r.steps; ++i)
        for (int run = 0; run < r.runs; ++run)
            if (r.records[0][i][run].success) CHECK(r.records[1][i][run].success);

    const auto path = std::filesystem::temp_directory_path() / "hpcdag_preemp.dat";
    emit_preemption_dat(r, path.string());
    const std::string text = read_file(path.string());
    CHECK(text.find("MAX-PREEMP REDUCED-PREM") != std::string::npos);
    std::filesystem::remove(path);
}
