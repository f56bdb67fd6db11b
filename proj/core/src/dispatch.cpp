#include "iegds/dispatch.hpp"

#include "iegds/log.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>

namespace iegds::dispatch {

std::string to_string(Status s) {
    switch (s) {
        case Status::ExactGne: return "exact_gne";
        case Status::EpsGne: return "eps_gne";
        case Status::MaxIterNoFeasible: return "max_iter_no_feasible";
    }
    return "unknown";
}

std::string to_string(BaselineKind k) {
    switch (k) {
        case BaselineKind::FixedDirSoc: return "fixed_dir_soc";
        case BaselineKind::SocPen: return "soc_pen";
        case BaselineKind::SocScp: return "soc_scp";
    }
    return "unknown";
}

PenaltyState update_penalty(PenaltyState s, bool violated) {
    if (violated)
        s.rho_lo = s.rho;
    else
        s.rho_hi = s.rho;
    if (s.ell == 1 && !violated) s.finished = true;
    if (std::isinf(s.rho_hi))
        s.rho = std::max(s.rho_seed, s.growth * s.rho_lo);
    else
        s.rho = 0.5 * (s.rho_lo + s.rho_hi);
    ++s.ell;
    return s;
}

Deviation deviation(double phi, double psi_i, double psi_j, double c_f, double tol) {
    Deviation d;
    d.phi = phi;
    d.weymouth = gas::weymouth_flow(psi_i, psi_j, c_f);
    if (d.weymouth == 0.0)
        d.undefined_reference = std::abs(phi) > tol;
    else
        d.delta = (phi - d.weymouth) / d.weymouth;
    return d;
}

std::vector<Deviation> gasflow_deviation(const gas::Artifacts& art, const Mat& phi, const Mat& psi, double tol) {
    std::vector<Deviation> out;
    for (std::size_t l = 0; l < art.labels.size(); l += 2) {
        const auto& lab = art.labels[l];
        for (int h = 0; h < phi.cols(); ++h) {
            const int L = static_cast<int>(l);
            Deviation d = deviation(phi(L, h), psi(lab.from, h), psi(lab.to, h), lab.c_f, tol);
            d.pipe = lab.pipe;
            d.from = lab.from + 1;
            d.to = lab.to + 1;
            d.h = h;
            out.push_back(d);
        }
    }
    return out;
}

double mean_abs_deviation(const std::vector<Deviation>& d) {
    double s = 0.0;
    int n = 0;
    for (const auto& x : d)
        if (!x.undefined_reference) {
            s += std::abs(x.delta);
            ++n;
        }
    return n ? s / n : 0.0;
}

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Accepts optimal points and iteration-limited points that are already accurate.
bool usable(const conic::SolveResult& r) {
    if (r.status == conic::SolveStatus::Optimal) return true;
    return r.status == conic::SolveStatus::MaxIter && r.primal_residual <= 1e-6 && r.gap <= 1e-6;
}

struct Iterate {
    Vec u;
    recovery::RecoveredBinaries bin;
    double violation = 0.0;
    double potential = 0.0;
    double rho = 0.0;
    int ell = 0;
};

}  // namespace

Outcome run_two_stage(const Network& net, const gas::ModelSpec& model, const Settings& st) {
    const auto t0 = Clock::now();
    Outcome out;
    out.model = model.name();
    const game::GameInstance base = game::assemble(net, model);
    const int n0 = base.problem.num_vars;
    out.tree = !net.pipes.empty() && is_spanning_tree(net.gas_graph());
    if (model.kind == gas::ModelKind::Pwa && !out.tree) {
        out.warnings.push_back("gas network is not a spanning tree: zero PWA pressure violation is unattainable");
        log::warn(out.warnings.back());
    }

    PenaltyState state;
    state.rho_seed = st.rho_seed;
    state.growth = st.rho_growth;
    std::optional<Iterate> first, best_feasible, least_violation;

    while (state.ell <= st.max_outer) {
        IterationRecord rec;
        rec.ell = state.ell;
        rec.rho = state.rho;
        rec.rho_lo = state.rho_lo;
        rec.rho_hi = state.rho_hi;
        const game::GameInstance inst = state.rho > 0.0 ? game::penalized(base, state.rho) : base;
        const auto sol = conic::solve(inst.problem, st.solver);
        rec.stage1_status = conic::to_string(sol.status);
        rec.stage1_iterations = sol.iterations;
        rec.stage1_seconds = sol.seconds;
        if (!usable(sol)) {
            out.trace.push_back(rec);
            throw Stage1Failure(fmt::format("stage 1 ended {} at iteration {} (rho = {})", rec.stage1_status,
                                            rec.ell, rec.rho),
                                out.trace);
        }
        if (sol.status != conic::SolveStatus::Optimal)
            out.warnings.push_back(fmt::format("stage 1 hit the iteration limit at l = {}, accepted", rec.ell));

        const Mat phi = recovery::flows(inst, sol.x);
        auto bin = recovery::recover_binaries(inst.gas, phi);
        const auto pr = recovery::recover_pressures(net, inst.gas, bin, phi, st.recovery);
        const Vec u = recovery::compose_strategy(inst, sol.x, bin, pr).head(n0);

        rec.tau_max = pr.tau_max;
        rec.J = pr.J;
        rec.violation = pr.violation();
        rec.violated = rec.violation > st.violation_tol;
        rec.potential = game::potential_P(base, u);
        out.trace.push_back(rec);
        log::info(fmt::format("{} l={} rho={:.6g} violation={:.3e} P={:.6f}", out.model, rec.ell, rec.rho,
                              rec.violation, rec.potential));

        Iterate it{u, std::move(bin), rec.violation, rec.potential, rec.rho, rec.ell};
        if (rec.ell == 1) first = it;
        if (!rec.violated) {
            if (!best_feasible || it.rho <= best_feasible->rho) best_feasible = it;
        } else if (!least_violation || it.violation < least_violation->violation) {
            least_violation = it;
        }

        state = update_penalty(state, rec.violated);
        if (state.finished) break;
        if (best_feasible && state.rho_hi - state.rho_lo < st.bracket_rel * std::max(1.0, state.rho_hi)) break;
    }

    const Iterate* pick = best_feasible ? &*best_feasible : (least_violation ? &*least_violation : nullptr);
    if (first) out.potential_first = first->potential;
    if (!pick) {
        // max_outer = 0: the loop never ran, report the unpenalized stage-1 point.
        out.status = Status::MaxIterNoFeasible;
        const auto sol = conic::solve(base.problem, st.solver);
        if (!usable(sol)) throw Stage1Failure("stage 1 failed on the fallback solve", out.trace);
        const Mat phi = recovery::flows(base, sol.x);
        auto bin = recovery::recover_binaries(base.gas, phi);
        const auto pr = recovery::recover_pressures(net, base.gas, bin, phi, st.recovery);
        Iterate it{recovery::compose_strategy(base, sol.x, bin, pr), std::move(bin), pr.violation(), 0.0, 0.0, 1};
        it.potential = game::potential_P(base, it.u);
        least_violation = it;
        first = it;
        out.potential_first = it.potential;
        pick = &*least_violation;
    }

    out.u = pick->u;
    out.delta = pick->bin.delta;
    out.ell_bar = pick->ell;
    out.rho_bar = pick->rho;
    out.potential = pick->potential;
    out.violation = pick->violation;
    if (best_feasible) {
        out.status = pick->ell == 1 ? Status::ExactGne : Status::EpsGne;
        if (first && first->rho == 0.0) out.epsilon = pick->potential - first->potential;
    } else {
        out.status = Status::MaxIterNoFeasible;
    }

    double cost = 0.0;
    for (int i = 0; i < base.net.num_agents(); ++i) cost += std::abs(game::cost_J(base, i, out.u));
    out.mean_abs_cost = base.net.num_agents() ? cost / base.net.num_agents() : 0.0;
    if (out.epsilon && out.mean_abs_cost > 0.0) out.epsilon_pct = 100.0 * *out.epsilon / out.mean_abs_cost;

    out.deviations = gasflow_deviation(base.gas, recovery::flows(base, out.u), recovery::pressures(base, out.u),
                                       st.deviation_tol);
    out.mean_abs_dev = mean_abs_deviation(out.deviations);
    out.undefined_deviations = static_cast<int>(
        std::count_if(out.deviations.begin(), out.deviations.end(), [](const Deviation& d) {
            return d.undefined_reference;
        }));
    out.residuals = game::feasibility_residuals(base, out.u, st.residual_tol);
    if (out.success() && !out.residuals.integral)
        out.warnings.push_back(fmt::format("returned iterate fails the residual audit (max violation {:.3e})",
                                           out.residuals.max_violation));
    out.seconds = since(t0);
    return out;
}

namespace {

void fix_z(const game::GameInstance& inst, conic::ConicProblem& p, const Vec& z) {
    if (z.size() != inst.idx.num_z()) throw std::invalid_argument("binary vector has the wrong length");
    for (int k = 0; k < z.size(); ++k) {
        const int j = inst.idx.z_begin() + k;
        p.lower(j) = z(k);
        p.upper(j) = z(k);
    }
}

}  // namespace

std::optional<double> fixed_binary_potential(const game::GameInstance& inst, const Vec& z,
                                             const conic::SolverSettings& solver) {
    conic::ConicProblem p = inst.problem;
    fix_z(inst, p, z);
    const auto sol = conic::solve(p, solver);
    if (!usable(sol)) return std::nullopt;
    return game::potential_P(inst, sol.x);
}

namespace {

double max_cone_slack(const game::GameInstance& inst, const Vec& u) {
    double s = 0.0;
    for (const auto& c : inst.gas.cones) {
        const double q = u(inst.idx.gas(c.phi)) / c.c_f;
        s = std::max(s, u(inst.idx.gas(c.nu)) - q * q);
    }
    return s;
}

// Appends one slack per cone and the tangent cut nu <= 2 phi_k phi / c^2 - phi_k^2 / c^2 + s.
conic::ConicProblem with_cuts(const game::GameInstance& inst, const conic::ConicProblem& p0, const Vec& uk,
                              double weight) {
    const int K = static_cast<int>(inst.gas.cones.size());
    const int n0 = p0.num_vars;
    conic::ConicProblem p = p0;
    p.num_vars = n0 + K;
    p.quadratic.conservativeResize(n0 + K, n0 + K);
    p.linear.conservativeResize(n0 + K);
    p.linear.tail(K).setConstant(weight);
    p.lower.conservativeResize(n0 + K);
    p.upper.conservativeResize(n0 + K);
    p.lower.tail(K).setZero();
    p.upper.tail(K).setConstant(conic::kInf);
    p.eq_matrix.conservativeResize(p.eq_matrix.rows(), n0 + K);
    const int m0 = static_cast<int>(p0.ineq_matrix.rows());
    std::vector<conic::Triplet> t;
    for (int c = 0; c < p0.ineq_matrix.outerSize(); ++c)
        for (conic::SpMat::InnerIterator it(p0.ineq_matrix, c); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    p.ineq_rhs.conservativeResize(m0 + K);
    for (int k = 0; k < K; ++k) {
        const auto& cone = inst.gas.cones[k];
        const double c2 = cone.c_f * cone.c_f;
        const double pk = uk(inst.idx.gas(cone.phi));
        t.emplace_back(m0 + k, inst.idx.gas(cone.nu), 1.0);
        if (pk != 0.0) t.emplace_back(m0 + k, inst.idx.gas(cone.phi), -2.0 * pk / c2);
        t.emplace_back(m0 + k, n0 + k, -1.0);
        p.ineq_rhs(m0 + k) = -pk * pk / c2;
    }
    p.ineq_matrix.resize(m0 + K, n0 + K);
    p.ineq_matrix.setFromTriplets(t.begin(), t.end());
    return p;
}

}  // namespace

BaselineOutcome run_baseline(const Network& net, BaselineKind kind, const IMat& directions,
                             const BaselineOptions& opt) {
    const auto t0 = Clock::now();
    const game::GameInstance inst = game::assemble(net, gas::ModelSpec::misoc());
    const int L = static_cast<int>(inst.gas.labels.size());
    if (directions.rows() != L || directions.cols() != net.horizon.H)
        throw std::invalid_argument(fmt::format("directions must be {} x {}, got {} x {}", L, net.horizon.H,
                                                directions.rows(), directions.cols()));
    Vec z = Vec::Zero(inst.idx.num_z());
    for (int l = 0; l < L; ++l)
        for (int h = 0; h < net.horizon.H; ++h) z(inst.gas.map.delta(l, h)) = directions(l, h);
    conic::ConicProblem p = inst.problem;
    fix_z(inst, p, z);
    if (kind == BaselineKind::SocPen)
        for (const auto& c : inst.gas.cones) p.linear(inst.idx.gas(c.nu)) += opt.pen_weight;

    BaselineOutcome out;
    out.kind = kind;
    auto sol = conic::solve(p, opt.solver);
    out.rounds = 1;
    if (!usable(sol)) {
        out.note = "convex program ended " + conic::to_string(sol.status);
        out.seconds = since(t0);
        return out;
    }
    Vec u = sol.x;
    double obj = sol.objective;
    if (kind == BaselineKind::SocScp) {
        double weight = opt.pen_weight;
        while (max_cone_slack(inst, u) > opt.cone_tol && out.rounds < opt.max_rounds) {
            const auto pc = with_cuts(inst, p, u, weight);
            const auto next = conic::solve(pc, opt.solver);
            ++out.rounds;
            if (!usable(next)) {
                out.note = fmt::format("round {} ended {}, kept the previous iterate", out.rounds,
                                       conic::to_string(next.status));
                break;
            }
            u = next.x.head(p.num_vars);
            obj = next.objective;
            weight *= 2.0;
        }
    }
    out.solved = true;
    out.u = u;
    out.objective = obj;
    out.potential = game::potential_P(inst, u);
    out.max_cone_slack = max_cone_slack(inst, u);
    out.deviations = gasflow_deviation(inst.gas, recovery::flows(inst, u), recovery::pressures(inst, u),
                                       opt.deviation_tol);
    out.mean_abs_dev = mean_abs_deviation(out.deviations);
    out.undefined_deviations = static_cast<int>(std::count_if(
        out.deviations.begin(), out.deviations.end(), [](const Deviation& d) { return d.undefined_reference; }));
    out.seconds = since(t0);
    return out;
}

}  // namespace iegds::dispatch
