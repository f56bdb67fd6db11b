#include "iegds/commands.hpp"

#include "iegds/log.hpp"
#include "iegds/report.hpp"

#include <fmt/format.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace iegds::cli {

gas::ModelSpec parse_model(const std::string& name, int r) {
    if (name == "misoc") return gas::ModelSpec::misoc();
    if (name == "pwa") {
        if (r < 2) throw ConfigError("r: the pwa model needs r >= 2");
        return gas::ModelSpec::pwa(r);
    }
    if (name.rfind("pwa", 0) == 0 && name.size() > 3) {
        int rr = 0;
        try {
            std::size_t used = 0;
            rr = std::stoi(name.substr(3), &used);
            if (used != name.size() - 3) throw std::invalid_argument(name);
        } catch (const std::exception&) {
            throw ConfigError("model: cannot parse '" + name + "'");
        }
        if (rr < 2) throw ConfigError("model: '" + name + "' needs at least 2 regions");
        return gas::ModelSpec::pwa(rr);
    }
    throw ConfigError("model: unknown model '" + name + "' (expected misoc, pwa or pwa<r>)");
}

namespace {

template <class T>
T get(const nlohmann::json& j, const std::string& key, const std::string& path) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(path + key + ": wrong type");
    }
}

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path.empty() ? "config must be a JSON object" : path + ": must be an object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) throw ConfigError(path + k + ": unknown field");
}

template <class T>
void maybe(const nlohmann::json& j, const std::string& key, T& dst, const std::string& path) {
    if (j.contains(key)) dst = get<T>(j, key, path);
}

}  // namespace

RunConfig config_from_json(const nlohmann::json& j, const std::string& base_dir, bool batch) {
    check_keys(j, {"network", "model", "r", "models", "seed", "seeds", "horizon", "jobs", "baselines", "out",
                   "algorithm", "recovery", "solver", "case_knobs"},
               "");
    RunConfig c;
    if (!j.contains("network")) throw ConfigError("network: missing field");
    fs::path net = get<std::string>(j, "network", "");
    if (net.is_relative() && !base_dir.empty()) net = fs::path(base_dir) / net;
    c.network = net.lexically_normal().string();

    if (batch) {
        c.models.clear();
        if (j.contains("models")) {
            for (const auto& m : get<std::vector<std::string>>(j, "models", "")) c.models.push_back(parse_model(m));
        } else if (j.contains("model")) {
            c.models.push_back(parse_model(get<std::string>(j, "model", ""), j.value("r", 0)));
        } else {
            c.models = {gas::ModelSpec::misoc(), gas::ModelSpec::pwa(20), gas::ModelSpec::pwa(45)};
        }
        if (c.models.empty()) throw ConfigError("models: empty list");
        if (!j.contains("seeds")) throw ConfigError("seeds: missing field");
        c.seeds = get<std::vector<std::uint64_t>>(j, "seeds", "");
        if (c.seeds.empty()) throw ConfigError("seeds: empty list");
    } else {
        if (!j.contains("model")) throw ConfigError("model: missing field");
        int r = 0;
        maybe(j, "r", r, "");
        c.models = {parse_model(get<std::string>(j, "model", ""), r)};
        if (j.contains("seed")) c.seed = get<std::uint64_t>(j, "seed", "");
    }
    maybe(j, "horizon", c.horizon, "");
    if (c.horizon < 0) throw ConfigError("horizon: must be >= 0");
    maybe(j, "jobs", c.jobs, "");
    if (c.jobs < 1) throw ConfigError("jobs: must be >= 1");
    maybe(j, "baselines", c.baselines, "");
    maybe(j, "out", c.out, "");

    auto& a = c.settings;
    if (j.contains("algorithm")) {
        const auto& al = j.at("algorithm");
        check_keys(al, {"max_outer", "rho_seed", "rho_growth", "violation_tol", "bracket_rel", "residual_tol",
                        "deviation_tol"},
                   "algorithm.");
        maybe(al, "max_outer", a.max_outer, "algorithm.");
        maybe(al, "rho_seed", a.rho_seed, "algorithm.");
        maybe(al, "rho_growth", a.rho_growth, "algorithm.");
        maybe(al, "violation_tol", a.violation_tol, "algorithm.");
        maybe(al, "bracket_rel", a.bracket_rel, "algorithm.");
        maybe(al, "residual_tol", a.residual_tol, "algorithm.");
        maybe(al, "deviation_tol", a.deviation_tol, "algorithm.");
        if (a.max_outer < 0) throw ConfigError("algorithm.max_outer: must be >= 0");
        if (!(a.rho_seed > 0.0)) throw ConfigError("algorithm.rho_seed: must be > 0");
        if (!(a.rho_growth > 1.0)) throw ConfigError("algorithm.rho_growth: must be > 1");
    }
    if (j.contains("recovery")) {
        const auto& rc = j.at("recovery");
        check_keys(rc, {"w_tau", "w_J", "polish"}, "recovery.");
        maybe(rc, "w_tau", a.recovery.w_tau, "recovery.");
        maybe(rc, "w_J", a.recovery.w_J, "recovery.");
        maybe(rc, "polish", a.recovery.polish, "recovery.");
        if (a.recovery.w_tau < 0.0 || a.recovery.w_J < 0.0) throw ConfigError("recovery: weights must be >= 0");
    }
    if (j.contains("solver")) {
        const auto& sv = j.at("solver");
        check_keys(sv, {"eps_abs", "eps_gap", "eps_infeasible", "max_iter"}, "solver.");
        maybe(sv, "eps_abs", a.solver.eps_abs, "solver.");
        maybe(sv, "eps_gap", a.solver.eps_gap, "solver.");
        maybe(sv, "eps_infeasible", a.solver.eps_infeasible, "solver.");
        maybe(sv, "max_iter", a.solver.max_iter, "solver.");
        if (a.solver.max_iter < 1) throw ConfigError("solver.max_iter: must be >= 1");
    }
    if (j.contains("case_knobs")) {
        try {
            c.knobs = CaseKnobs::from_json(j.at("case_knobs"));
        } catch (const std::exception& e) {
            throw ConfigError(std::string("case_knobs: ") + e.what());
        }
    }
    return c;
}

RunConfig load_config(const std::string& path, bool batch) {
    std::ifstream in(path);
    if (!in) throw NetworkError(NetworkError::Kind::Io, "cannot open config " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(j, fs::path(path).parent_path().string(), batch);
}

int cmd_validate(const std::string& path, std::ostream& out, std::ostream& err) {
    try {
        const Network net = load_network(path);
        out << fmt::format("valid: {} buses, {} lines, {} gas nodes, {} pipes, H = {}\n", net.buses.size(),
                           net.lines.size(), net.gas_nodes.size(), net.pipes.size(), net.horizon.H);
        if (!net.pipes.empty() && !is_spanning_tree(net.gas_graph()))
            err << "warning: gas network is not a spanning tree; pwa runs cannot reach zero pressure violation\n";
        return kOk;
    } catch (const NetworkError& e) {
        err << "error: " << e.what() << '\n';
        return e.kind() == NetworkError::Kind::Io ? kIo : kInvalid;
    } catch (const std::logic_error& e) {
        err << "error: " << e.what() << '\n';
        return kInvalid;
    }
}

namespace {

Network prepare(const Network& base, std::optional<std::uint64_t> seed, const RunConfig& cfg) {
    Network net = seed ? generate_case(base, *seed, cfg.knobs) : base;
    if (cfg.horizon > 0) {
        if (cfg.horizon > net.horizon.H)
            throw ConfigError(fmt::format("horizon: {} exceeds the network horizon {}", cfg.horizon, net.horizon.H));
        net = truncate_horizon(net, cfg.horizon);
    }
    return net;
}

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream f(p);
    if (!f) throw NetworkError(NetworkError::Kind::Io, "cannot write " + p.string());
    f << s;
}

template <class Fn>
std::string capture(Fn fn) {
    std::ostringstream os;
    fn(os);
    return os.str();
}

void write_run(const fs::path& dir, const dispatch::Outcome& o) {
    fs::create_directories(dir);
    write_text(dir / "outcome.json", report::outcome_to_json(o).dump(1) + "\n");
    write_text(dir / "trace.csv", capture([&](std::ostream& os) { report::write_trace_csv(os, o.trace); }));
    write_text(dir / "deviations.csv",
               capture([&](std::ostream& os) { report::write_deviations_csv(os, o.deviations); }));
}

}  // namespace

int cmd_solve(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    Network net;
    try {
        net = prepare(load_network(cfg.network), cfg.seed, cfg);
    } catch (const NetworkError& e) {
        err << "error: " << e.what() << '\n';
        return e.kind() == NetworkError::Kind::Io ? kIo : kInvalid;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kInvalid;
    }
    const auto& model = cfg.models.front();
    if (model.kind == gas::ModelKind::Pwa && !net.pipes.empty() && !is_spanning_tree(net.gas_graph()))
        err << "warning: gas network is not a spanning tree; zero pwa pressure violation is unattainable\n";
    dispatch::Outcome o;
    try {
        o = dispatch::run_two_stage(net, model, cfg.settings);
    } catch (const dispatch::Stage1Failure& e) {
        err << "error: " << e.what() << '\n';
        fs::create_directories(cfg.out);
        write_text(fs::path(cfg.out) / "trace.csv",
                   capture([&](std::ostream& os) { report::write_trace_csv(os, e.trace()); }));
        return kSolverFailure;
    } catch (const std::runtime_error& e) {
        err << "error: " << e.what() << '\n';
        return kSolverFailure;
    }
    try {
        write_run(cfg.out, o);
        if (cfg.baselines && model.kind == gas::ModelKind::Misoc) {
            std::vector<dispatch::BaselineOutcome> rows;
            for (auto k : {dispatch::BaselineKind::FixedDirSoc, dispatch::BaselineKind::SocPen,
                           dispatch::BaselineKind::SocScp})
                rows.push_back(dispatch::run_baseline(net, k, o.delta));
            write_text(fs::path(cfg.out) / "baselines.csv",
                       capture([&](std::ostream& os) { report::write_baselines_csv(os, rows); }));
        }
    } catch (const NetworkError& e) {
        err << "error: " << e.what() << '\n';
        return kIo;
    }
    out << fmt::format("{} {}: status {}, l = {}, rho = {}, epsilon = {}, violation = {:.3e}, {:.2f} s\n",
                       fs::path(cfg.network).filename().string(), o.model, dispatch::to_string(o.status), o.ell_bar,
                       report::num(o.rho_bar), o.epsilon ? report::num(*o.epsilon) : "not certified", o.violation,
                       o.seconds);
    for (const auto& w : o.warnings) err << "warning: " << w << '\n';
    return o.success() ? kOk : kNoFeasible;
}

int cmd_batch(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    Network base;
    try {
        base = load_network(cfg.network);
    } catch (const NetworkError& e) {
        err << "error: " << e.what() << '\n';
        return e.kind() == NetworkError::Kind::Io ? kIo : kInvalid;
    }
    report::BatchSummary sum;
    sum.network = fs::path(cfg.network).filename().string();
    sum.horizon = cfg.horizon > 0 ? cfg.horizon : base.horizon.H;
    sum.seeds = cfg.seeds;
    for (const auto& m : cfg.models) sum.models.push_back(m.name());
    const std::size_t M = cfg.models.size();
    const std::size_t total = cfg.seeds.size() * M;
    sum.rows.resize(total);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < total; k = next++) {
            const auto seed = cfg.seeds[k / M];
            const auto& model = cfg.models[k % M];
            try {
                const Network net = prepare(base, seed, cfg);
                const auto o = dispatch::run_two_stage(net, model, cfg.settings);
                write_run(fs::path(cfg.out) / "cases" / std::to_string(seed) / model.name(), o);
                sum.rows[k] = report::case_row(seed, o);
                log::info(fmt::format("case {} {}: {}", seed, model.name(), sum.rows[k].status));
            } catch (const std::exception& e) {
                sum.rows[k] = report::error_row(seed, model.name(), e.what());
                log::warn(fmt::format("case {} {} failed: {}", seed, model.name(), e.what()));
            }
        }
    };
    const int jobs = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(total)));
    std::vector<std::thread> pool;
    for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    try {
        fs::create_directories(cfg.out);
        write_text(fs::path(cfg.out) / "summary.csv",
                   capture([&](std::ostream& os) { report::write_summary_csv(os, sum); }));
        write_text(fs::path(cfg.out) / "summary.json", report::summary_to_json(sum).dump(1) + "\n");
    } catch (const NetworkError& e) {
        err << "error: " << e.what() << '\n';
        return kIo;
    }
    int ok = 0, errors = 0;
    for (const auto& r : sum.rows) {
        ok += r.success();
        errors += r.status == "error";
        if (r.status == "error") err << fmt::format("case {} {}: {}\n", r.seed, r.model, r.error);
    }
    out << fmt::format("{} runs: {} succeeded, {} errored, success rate {:.3f}\n", total, ok, errors,
                       sum.success_rate());
    if (errors == static_cast<int>(total)) return kSolverFailure;
    return ok > 0 ? kOk : kNoFeasible;
}

int cmd_compare(const std::vector<std::string>& paths, const std::string& out_dir, std::ostream& out,
                std::ostream& err) {
    std::vector<report::BatchSummary> sums;
    std::vector<std::string> names;
    for (const auto& p : paths) {
        std::ifstream in(p);
        if (!in) {
            err << "error: cannot open " << p << '\n';
            return kIo;
        }
        try {
            nlohmann::json j;
            in >> j;
            sums.push_back(report::summary_from_json(j));
        } catch (const std::exception& e) {
            err << "error: " << p << ": " << e.what() << '\n';
            return kInvalid;
        }
        names.push_back(p);
    }
    if (sums.empty()) {
        err << "error: no summaries given\n";
        return kInvalid;
    }
    try {
        report::check_compatible(sums);
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kInvalid;
    }
    const std::string table = capture([&](std::ostream& os) { report::write_comparison_csv(os, names, sums); });
    try {
        fs::create_directories(out_dir);
        write_text(fs::path(out_dir) / "comparison.csv", table);
        write_text(fs::path(out_dir) / "boxplots.json", report::boxplot_json(names, sums).dump(1) + "\n");
    } catch (const NetworkError& e) {
        err << "error: " << e.what() << '\n';
        return kIo;
    }
    out << table;
    return kOk;
}

}  // namespace iegds::cli
