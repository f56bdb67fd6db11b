#pragma once

#include "iegds/dispatch.hpp"
#include "iegds/gasflow.hpp"
#include "iegds/netmodel.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace iegds::cli {

// Exit codes shared by every command.
enum Exit : int {
    kOk = 0,
    kInvalid = 2,      // bad network, bad config, incompatible summaries
    kIo = 3,           // missing or unreadable file
    kNoFeasible = 4,   // solve: max_iter_no_feasible; batch: no run succeeded
    kSolverFailure = 5 // solve: stage-1 or recovery failure; batch: every run errored
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string network;  // resolved path
    std::vector<gas::ModelSpec> models{gas::ModelSpec::misoc()};
    std::optional<std::uint64_t> seed;  // solve: generate one case from the network first
    std::vector<std::uint64_t> seeds;   // batch
    int horizon = 0;                    // 0 keeps the file's horizon
    int jobs = 1;
    bool baselines = false;             // solve with MISOC: also run the three convex baselines
    std::string out = "out";
    CaseKnobs knobs;
    dispatch::Settings settings;
};

// Parses a config document. Relative network paths resolve against base_dir.
// Throws ConfigError naming the offending field.
RunConfig config_from_json(const nlohmann::json& j, const std::string& base_dir, bool batch);
// Throws NetworkError(Io) when the file cannot be read, ConfigError otherwise.
RunConfig load_config(const std::string& path, bool batch);

// "misoc", "pwa" with r, or "pwa<r>".
gas::ModelSpec parse_model(const std::string& name, int r = 0);

int cmd_validate(const std::string& path, std::ostream& out, std::ostream& err);
int cmd_solve(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_batch(const RunConfig& cfg, std::ostream& out, std::ostream& err);
// Writes comparison.csv and boxplots.json into out_dir.
int cmd_compare(const std::vector<std::string>& summaries, const std::string& out_dir, std::ostream& out,
                std::ostream& err);

}  // namespace iegds::cli
