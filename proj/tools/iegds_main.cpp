#include "iegds/commands.hpp"
#include "iegds/log.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace iegds;

namespace {

struct Overrides {
    std::string model;
    int r = 0;
    int max_outer = -1;
    int jobs = 0;
    std::string out;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--model", o.model, "misoc, pwa (with --r) or pwa<r>");
    cmd->add_option("--r", o.r, "PWA region count")->check(CLI::Range(2, 1000));
    cmd->add_option("--max-outer", o.max_outer, "outer iteration limit")->check(CLI::NonNegativeNumber);
    cmd->add_option("--jobs", o.jobs, "concurrent cases in batch runs")->check(CLI::PositiveNumber);
    cmd->add_option("--out", o.out, "output directory");
}

void apply(cli::RunConfig& c, const Overrides& o, bool batch) {
    if (!o.model.empty()) {
        const auto m = cli::parse_model(o.model, o.r);
        c.models = {m};
    } else if (o.r > 0 && !batch && c.models.front().kind == gas::ModelKind::Pwa) {
        c.models = {gas::ModelSpec::pwa(o.r)};
    }
    if (o.max_outer >= 0) c.settings.max_outer = o.max_outer;
    if (o.jobs > 0) c.jobs = o.jobs;
    if (!o.out.empty()) c.out = o.out;
}

int run_config_command(const std::string& path, const Overrides& o, bool batch) {
    cli::RunConfig cfg;
    try {
        cfg = cli::load_config(path, batch);
        apply(cfg, o, batch);
    } catch (const NetworkError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::kIo;
    } catch (const cli::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::kInvalid;
    }
    return batch ? cli::cmd_batch(cfg, std::cout, std::cerr) : cli::cmd_solve(cfg, std::cout, std::cerr);
}

}  // namespace

int main(int argc, char** argv) {
    try {
        log::init_from_env();
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: IEGDS_LOG: " << e.what() << '\n';
        return cli::kInvalid;
    }

    CLI::App app{"Two-stage equilibrium dispatch for integrated electrical and gas distribution systems"};
    app.require_subcommand(1);

    std::string network;
    auto* validate = app.add_subcommand("validate", "check a network file");
    validate->add_option("file", network, "network JSON")->required();

    std::string solve_cfg;
    Overrides solve_o;
    auto* solve = app.add_subcommand("solve", "run the two-stage method on one network");
    solve->add_option("-c,--config", solve_cfg, "run config JSON")->required();
    add_overrides(solve, solve_o);

    std::string batch_cfg;
    Overrides batch_o;
    auto* batch = app.add_subcommand("batch", "run generated cases for several models");
    batch->add_option("-c,--config", batch_cfg, "batch config JSON")->required();
    add_overrides(batch, batch_o);

    std::vector<std::string> summaries;
    std::string compare_out = "compare";
    auto* compare = app.add_subcommand("compare", "tabulate batch summaries");
    compare->add_option("summaries", summaries, "summary.json files")->required();
    compare->add_option("--out", compare_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kInvalid;
    }

    try {
        if (*validate) return cli::cmd_validate(network, std::cout, std::cerr);
        if (*solve) return run_config_command(solve_cfg, solve_o, false);
        if (*batch) return run_config_command(batch_cfg, batch_o, true);
        if (*compare) return cli::cmd_compare(summaries, compare_out, std::cout, std::cerr);
    } catch (const cli::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::kInvalid;
    }
    return cli::kInvalid;
}
