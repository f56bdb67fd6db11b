#include "iegds/commands.hpp"
#include "iegds/report.hpp"
#include "support.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace iegds;
using namespace iegds::cli;
namespace fs = std::filesystem;
using iegds::testing::data_path;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("iegds_cmd_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

nlohmann::json read_json(const fs::path& p) {
    std::ifstream is(p);
    return nlohmann::json::parse(is);
}

std::string read_text(const fs::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// Drops the named columns from a CSV document.
std::string drop_columns(const std::string& csv, const std::vector<std::string>& names) {
    std::istringstream is(csv);
    std::string line, out;
    std::vector<bool> keep;
    while (std::getline(is, line)) {
        std::vector<std::string> f;
        std::stringstream ls(line);
        for (std::string x; std::getline(ls, x, ',');) f.push_back(x);
        if (keep.empty())
            for (const auto& x : f) keep.push_back(std::find(names.begin(), names.end(), x) == names.end());
        for (std::size_t k = 0; k < f.size(); ++k)
            if (k >= keep.size() || keep[k]) out += f[k] + ",";
        out += "\n";
    }
    return out;
}

nlohmann::json toy_batch_config(const fs::path& out) {
    return {{"network", data_path("cases/toy3.json")},
            {"seeds", {1, 2, 3}},
            {"jobs", 2},
            {"out", out.string()},
            {"case_knobs", {{"num_gas_dg", 1}, {"num_non_gas_dg", 1}, {"num_storage", 1}}}};
}

}  // namespace

TEST_CASE("validate exit codes") {
    std::ostringstream out, err;
    CHECK(cmd_validate(data_path("cases/ieee33_gas20.json"), out, err) == kOk);

    const fs::path dir = scratch("validate");
    auto j = network_to_json(load_network(data_path("cases/toy3.json")));
    j["buses"][2]["theta_min"] = 1.0;
    j["buses"][2]["theta_max"] = -1.0;
    std::ofstream(dir / "bad.json") << j.dump();
    std::ostringstream e2;
    CHECK(cmd_validate((dir / "bad.json").string(), out, e2) == kInvalid);
    CHECK(e2.str().find("bus 3") != std::string::npos);
    CHECK(cmd_validate((dir / "missing.json").string(), out, err) == kIo);
}

TEST_CASE("config parsing") {
    const fs::path dir = scratch("config");
    CHECK_THROWS_WITH_AS(config_from_json({{"network", "x.json"}}, dir.string(), false), doctest::Contains("model"),
                         ConfigError);
    CHECK_THROWS_AS(config_from_json({{"network", "x.json"}, {"model", "misoc"}, {"typo", 1}}, dir.string(), false),
                    ConfigError);
    CHECK_THROWS_AS(config_from_json({{"network", "x.json"}, {"model", "pwa"}, {"r", 1}}, dir.string(), false),
                    ConfigError);
    CHECK_THROWS_AS(config_from_json({{"network", "x.json"}, {"seeds", nlohmann::json::array()}}, dir.string(), true),
                    ConfigError);

    const auto batch = config_from_json({{"network", "x.json"}, {"seeds", {1, 2}}}, dir.string(), true);
    REQUIRE(batch.models.size() == 3);
    CHECK(batch.models[0].name() == "misoc");
    CHECK(batch.models[1].name() == "pwa20");
    CHECK(batch.models[2].name() == "pwa45");
    CHECK(fs::path(batch.network).is_absolute());

    const auto solve = config_from_json(
        {{"network", "x.json"}, {"model", "pwa"}, {"r", 7}, {"algorithm", {{"max_outer", 3}}}}, dir.string(), false);
    CHECK(solve.models.at(0).name() == "pwa7");
    CHECK(solve.settings.max_outer == 3);
    CHECK(parse_model("pwa45").r == 45);
    CHECK_THROWS(parse_model("milp"));
}

TEST_CASE("solve writes the report files") {
    const fs::path dir = scratch("solve");
    RunConfig cfg = config_from_json(
        {{"network", data_path("cases/toy2.json")}, {"model", "misoc"}, {"out", (dir / "out").string()}, {"baselines", true}},
        dir.string(), false);
    std::ostringstream out, err;
    CHECK(cmd_solve(cfg, out, err) == kOk);
    const auto o = read_json(dir / "out" / "outcome.json");
    CHECK(o.at("status") == "exact_gne");
    CHECK(o.at("epsilon") == 0.0);
    CHECK(read_text(dir / "out" / "trace.csv").rfind(report::kTraceColumns, 0) == 0);
    CHECK(read_text(dir / "out" / "deviations.csv").rfind(report::kDeviationColumns, 0) == 0);
    CHECK(read_text(dir / "out" / "baselines.csv").rfind(report::kBaselineColumns, 0) == 0);
}

TEST_CASE("solve exit code follows the status") {
    const fs::path dir = scratch("solve_fail");
    RunConfig cfg = config_from_json({{"network", data_path("cases/toy3.json")},
                                      {"model", "misoc"},
                                      {"out", (dir / "out").string()},
                                      {"algorithm", {{"max_outer", 1}}}},
                                     dir.string(), false);
    std::ostringstream out, err;
    CHECK(cmd_solve(cfg, out, err) == kNoFeasible);
    CHECK(read_json(dir / "out" / "outcome.json").at("status") == "max_iter_no_feasible");
}

TEST_CASE("PWA on a cyclic network warns on stderr") {
    const fs::path dir = scratch("cyclic");
    testing::DeskOptions o;
    o.N = 3;
    o.H = 1;
    o.gas_edges = {{0, 1}, {1, 2}, {0, 2}};
    save_network(testing::desk_network(3, o), (dir / "cyc.json").string());
    RunConfig cfg = config_from_json(
        {{"network", "cyc.json"}, {"model", "pwa"}, {"r", 2}, {"out", (dir / "out").string()}}, dir.string(), false);
    std::ostringstream out, err;
    const int rc = cmd_solve(cfg, out, err);
    CHECK((rc == kOk || rc == kNoFeasible));
    CHECK(err.str().find("spanning tree") != std::string::npos);
    CHECK(fs::exists(dir / "out" / "outcome.json"));
}

TEST_CASE("batch is a cartesian product and deterministic") {
    const fs::path dir = scratch("batch");
    std::string first;
    for (int run = 0; run < 2; ++run) {
        const fs::path out = dir / ("run" + std::to_string(run));
        RunConfig cfg = config_from_json(toy_batch_config(out), dir.string(), true);
        std::ostringstream o, e;
        const int rc = cmd_batch(cfg, o, e);
        CHECK((rc == kOk || rc == kNoFeasible));
        const std::string csv = read_text(out / "summary.csv");
        int rows = -1;
        for (char c : csv) rows += c == '\n';
        CHECK(rows == 9);
        CHECK(fs::exists(out / "summary.json"));
        CHECK(fs::exists(out / "cases" / "1" / "misoc" / "outcome.json"));
        const std::string stable = drop_columns(csv, {"seconds"});
        if (run == 0) first = stable;
        else CHECK(stable == first);
    }
}

TEST_CASE("compare") {
    const fs::path dir = scratch("compare");
    RunConfig cfg = config_from_json(toy_batch_config(dir / "b"), dir.string(), true);
    std::ostringstream o, e;
    cmd_batch(cfg, o, e);
    const std::string s = (dir / "b" / "summary.json").string();
    CHECK(cmd_compare({s, s}, (dir / "cmp").string(), o, e) == kOk);
    const std::string csv = read_text(dir / "cmp" / "comparison.csv");
    CHECK(csv.find("delta_success_rate") != std::string::npos);
    CHECK(fs::exists(dir / "cmp" / "boxplots.json"));
    CHECK(cmd_compare({s, (dir / "nope.json").string()}, (dir / "cmp2").string(), o, e) == kIo);

    auto j = read_json(s);
    j["seeds"] = {1, 2, 4};
    std::ofstream(dir / "other.json") << j.dump();
    CHECK(cmd_compare({s, (dir / "other.json").string()}, (dir / "cmp3").string(), o, e) == kInvalid);
}
