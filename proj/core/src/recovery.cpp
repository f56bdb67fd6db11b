#include "iegds/recovery.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

namespace iegds::recovery {

int recover_delta(double phi) { return phi >= 0.0 ? 1 : 0; }

RecoveredBinaries recover_binaries(const gas::Artifacts& art, const Mat& phi_hat) {
    const int L = static_cast<int>(art.labels.size());
    if (phi_hat.rows() != L) throw std::invalid_argument("flow matrix has wrong number of labels");
    const int H = static_cast<int>(phi_hat.cols());
    RecoveredBinaries bin;
    bin.kind = art.spec.kind;
    bin.r = bin.kind == gas::ModelKind::Pwa ? art.spec.r : 0;
    bin.delta.resize(L, H);
    bin.region = IMat::Constant(L, H, -1);
    for (int l = 0; l < L; ++l)
        for (int h = 0; h < H; ++h) bin.delta(l, h) = recover_delta(phi_hat(l, h));
    for (int l = 0; l < L; ++l) {
        const int rev = art.labels[l].reverse;
        if (rev < l) continue;
        for (int h = 0; h < H; ++h)
            if (bin.delta(l, h) == 1 && bin.delta(rev, h) == 1) bin.delta(rev, h) = 0;  // both flows are 0
    }
    if (bin.kind == gas::ModelKind::Pwa) {
        for (int l = 0; l < L; ++l)
            for (int h = 0; h < H; ++h) bin.region(l, h) = gas::select_region(art.segments[l], phi_hat(l, h));
        if (region_logic_violations(bin) != 0)
            throw std::logic_error("recovered region binaries violate the linking rows");
    }
    return bin;
}

int region_logic_violations(const RecoveredBinaries& bin) {
    if (bin.kind != gas::ModelKind::Pwa) return 0;
    int bad = 0;
    for (int l = 0; l < bin.delta.rows(); ++l)
        for (int h = 0; h < bin.H(); ++h) {
            int sum = 0;
            for (int m = 0; m < bin.r; ++m) {
                const int a = bin.alpha(l, m, h), b = bin.beta(l, m, h), g = bin.gamma(l, m, h);
                if (g > a || g > b || a + b - g > 1) ++bad;
                sum += g;
            }
            if (sum != 1) ++bad;
        }
    return bad;
}

StepSystem build_E_theta(const std::vector<gas::DirectedPipe>& labels, int num_nodes, const Eigen::VectorXi& delta_h,
                         const Vec& phi_h) {
    const int L = static_cast<int>(labels.size());
    StepSystem sys{Mat::Zero(L, num_nodes), Vec::Zero(L)};
    for (int l = 0; l < L; ++l) {
        const double s = 2.0 * delta_h(l) - 1.0;
        sys.E(l, labels[l].from) = s;
        sys.E(l, labels[l].to) = -s;
        const double q = phi_h(l) / labels[l].c_f;
        sys.theta(l) = q * q;
    }
    return sys;
}

StepSystem build_E_theta_pwa(const std::vector<gas::DirectedPipe>& labels,
                             const std::vector<gas::PipeSegments>& segments, int num_nodes,
                             const Eigen::VectorXi& delta_h, const Eigen::VectorXi& region_h, const Vec& phi_h) {
    StepSystem sys = build_E_theta(labels, num_nodes, delta_h, phi_h);
    for (std::size_t l = 0; l < labels.size(); ++l) {
        const int m = region_h(l);
        sys.theta(l) = segments[l].a[m] * phi_h(l) + segments[l].b[m];
    }
    return sys;
}

namespace {

double inf_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

void add(std::vector<conic::Triplet>& t, int r, int c, double v) {
    if (v != 0.0) t.emplace_back(r, c, v);
}

void check_shapes(const StepSystem& sys, const Vec& lo, const Vec& hi) {
    if (sys.theta.size() != sys.E.rows()) throw std::invalid_argument("theta length differs from E rows");
    if (lo.size() != sys.E.cols() || hi.size() != sys.E.cols())
        throw std::invalid_argument("pressure bounds length differs from E columns");
}

// Clean up an LP point: clip to the box and recompute the slacks exactly.
StepRecovery finish(const StepSystem& sys, Vec psi, const Vec& lo, const Vec& hi, bool with_tau) {
    psi = psi.cwiseMax(lo).cwiseMin(hi);
    StepRecovery out;
    const Vec r = sys.E * psi - sys.theta;
    out.J = inf_norm(r);
    if (with_tau) {
        out.tau = (-r).cwiseMax(0.0);
        out.tau_max = inf_norm(out.tau);
    }
    out.psi = std::move(psi);
    return out;
}

double score(const StepRecovery& s, const RecoverySettings& st, bool with_tau) {
    return with_tau ? st.w_tau * s.tau_max + st.w_J * s.J : s.J;
}

void polish(const StepSystem& sys, const Vec& lo, const Vec& hi, const RecoverySettings& st, bool with_tau,
            StepRecovery& best) {
    if (!st.polish || !rows_form_tree(sys.E)) return;
    const Vec psi0 = particular_solution_psi0(sys.E, sys.theta);
    const auto [cmin, cmax] = shift_interval(psi0, lo, hi);
    if (cmin > cmax) return;
    const double c = std::clamp((best.psi - psi0).mean(), cmin, cmax);
    StepRecovery cand = finish(sys, (psi0.array() + c).matrix(), lo, hi, with_tau);
    if (score(cand, st, with_tau) <= score(best, st, with_tau)) {
        cand.polished = true;
        cand.iterations = best.iterations;
        best = std::move(cand);
    }
}

conic::SolveResult solve_lp(const conic::ConicProblem& p, const RecoverySettings& st) {
    auto res = conic::solve(p, st.solver);
    if (res.status != conic::SolveStatus::Optimal && res.status != conic::SolveStatus::MaxIter)
        throw std::runtime_error("pressure recovery LP ended " + conic::to_string(res.status));
    return res;
}

}  // namespace

StepRecovery recover_pressures_misoc(const StepSystem& sys, const Vec& lo, const Vec& hi,
                                     const RecoverySettings& st) {
    check_shapes(sys, lo, hi);
    const int M = static_cast<int>(sys.E.rows());
    const int N = static_cast<int>(sys.E.cols());
    const int s_tau = N + M, s_J = N + M + 1;
    conic::ConicProblem p(N + M + 2);
    p.linear(s_tau) = st.w_tau;
    p.linear(s_J) = st.w_J;
    p.lower.head(N) = lo;
    p.upper.head(N) = hi;
    p.lower.tail(M + 2).setZero();
    std::vector<conic::Triplet> t;
    p.ineq_rhs.resize(4 * M);
    for (int k = 0; k < M; ++k) {
        for (int n = 0; n < N; ++n) {
            const double e = sys.E(k, n);
            add(t, k, n, -e);
            add(t, 2 * M + k, n, e);
            add(t, 3 * M + k, n, -e);
        }
        add(t, k, N + k, -1.0);
        p.ineq_rhs(k) = -sys.theta(k);
        add(t, M + k, N + k, 1.0);
        add(t, M + k, s_tau, -1.0);
        p.ineq_rhs(M + k) = 0.0;
        add(t, 2 * M + k, s_J, -1.0);
        p.ineq_rhs(2 * M + k) = sys.theta(k);
        add(t, 3 * M + k, s_J, -1.0);
        p.ineq_rhs(3 * M + k) = -sys.theta(k);
    }
    p.ineq_matrix.resize(4 * M, N + M + 2);
    p.ineq_matrix.setFromTriplets(t.begin(), t.end());
    const auto res = solve_lp(p, st);
    StepRecovery out = finish(sys, res.x.head(N), lo, hi, true);
    out.iterations = res.iterations;
    polish(sys, lo, hi, st, true, out);
    return out;
}

StepRecovery recover_pressures_pwa(const StepSystem& sys, const Vec& lo, const Vec& hi, const RecoverySettings& st) {
    check_shapes(sys, lo, hi);
    const int M = static_cast<int>(sys.E.rows());
    const int N = static_cast<int>(sys.E.cols());
    conic::ConicProblem p(N + 1);
    p.linear(N) = 1.0;
    p.lower.head(N) = lo;
    p.upper.head(N) = hi;
    p.lower(N) = 0.0;
    std::vector<conic::Triplet> t;
    p.ineq_rhs.resize(2 * M);
    for (int k = 0; k < M; ++k) {
        for (int n = 0; n < N; ++n) {
            add(t, k, n, sys.E(k, n));
            add(t, M + k, n, -sys.E(k, n));
        }
        add(t, k, N, -1.0);
        add(t, M + k, N, -1.0);
        p.ineq_rhs(k) = sys.theta(k);
        p.ineq_rhs(M + k) = -sys.theta(k);
    }
    p.ineq_matrix.resize(2 * M, N + 1);
    p.ineq_matrix.setFromTriplets(t.begin(), t.end());
    const auto res = solve_lp(p, st);
    StepRecovery out = finish(sys, res.x.head(N), lo, hi, false);
    out.iterations = res.iterations;
    polish(sys, lo, hi, st, false, out);
    return out;
}

bool rows_form_tree(const Mat& E) {
    const int N = static_cast<int>(E.cols());
    std::set<std::pair<int, int>> edges;
    for (int k = 0; k < E.rows(); ++k) {
        std::vector<int> nz;
        for (int n = 0; n < N; ++n)
            if (E(k, n) != 0.0) nz.push_back(n);
        if (nz.size() != 2) return false;
        edges.emplace(nz[0], nz[1]);
    }
    GraphView g{N, {edges.begin(), edges.end()}};
    return N > 0 && is_connected(g) && static_cast<int>(edges.size()) == N - 1;
}

Vec particular_solution_psi0(const Mat& E, const Vec& theta) {
    if (!rows_form_tree(E))
        throw std::domain_error(
            "gas graph is not a spanning tree: no particular pressure solution, use the recovery LP value instead");
    Eigen::CompleteOrthogonalDecomposition<Mat> cod;
    cod.setThreshold(1e-10);  // relative to the largest pivot, i.e. about 1e-10 ||E||
    cod.compute(E);
    return cod.solve(theta);
}

bool shift_condition(const Vec& psi0, const Vec& lo, const Vec& hi) {
    const int N = static_cast<int>(psi0.size());
    int j = 0, k = 0;
    for (int i = 1; i < N; ++i) {
        if (psi0(i) > psi0(j) || (psi0(i) == psi0(j) && hi(i) < hi(j))) j = i;
        if (psi0(i) < psi0(k) || (psi0(i) == psi0(k) && hi(i) > hi(k))) k = i;
    }
    return psi0(j) - psi0(k) <= hi(j) - lo(k);
}

std::pair<double, double> shift_interval(const Vec& psi0, const Vec& lo, const Vec& hi) {
    return {(lo - psi0).maxCoeff(), (hi - psi0).minCoeff()};
}

AuxBlocks rebuild_aux(const gas::Artifacts& art, const RecoveredBinaries& bin, const Mat& psi, const Mat& phi) {
    const int L = static_cast<int>(art.labels.size());
    const int H = bin.H();
    AuxBlocks aux;
    aux.nu = Mat::Zero(L, H);
    if (bin.kind == gas::ModelKind::Misoc) {
        for (int l = 0; l < L; ++l)
            for (int h = 0; h < H; ++h)
                aux.nu(l, h) =
                    (2.0 * bin.delta(l, h) - 1.0) * (psi(art.labels[l].from, h) - psi(art.labels[l].to, h));
        return aux;
    }
    aux.nu_m.assign(bin.r, Mat::Zero(L, H));
    for (int l = 0; l < L; ++l)
        for (int h = 0; h < H; ++h) {
            aux.nu(l, h) = bin.delta(l, h) * psi(art.labels[l].from, h);
            aux.nu_m[bin.region(l, h)](l, h) = phi(l, h);
        }
    return aux;
}

PressureRecoveryResult recover_pressures(const Network& net, const gas::Artifacts& art, const RecoveredBinaries& bin,
                                         const Mat& phi_hat, const RecoverySettings& st) {
    const int N = static_cast<int>(net.gas_nodes.size());
    const int L = static_cast<int>(art.labels.size());
    const int H = bin.H();
    Vec lo(N), hi(N);
    for (int n = 0; n < N; ++n) {
        lo(n) = net.gas_nodes[n].psi_min;
        hi(n) = net.gas_nodes[n].psi_max;
    }
    PressureRecoveryResult res;
    res.kind = bin.kind;
    res.psi.resize(N, H);
    res.tau = Mat::Zero(L, H);
    res.J_step.resize(H);
    res.tau_step = Vec::Zero(H);
    res.tree = L > 0 && is_spanning_tree(net.gas_graph());
    for (int h = 0; h < H; ++h) {
        const Eigen::VectorXi d = bin.delta.col(h);
        const Vec ph = phi_hat.col(h);
        StepSystem sys = bin.kind == gas::ModelKind::Misoc
                             ? build_E_theta(art.labels, N, d, ph)
                             : build_E_theta_pwa(art.labels, art.segments, N, d, bin.region.col(h), ph);
        StepRecovery step = bin.kind == gas::ModelKind::Misoc ? recover_pressures_misoc(sys, lo, hi, st)
                                                               : recover_pressures_pwa(sys, lo, hi, st);
        res.psi.col(h) = step.psi;
        if (step.tau.size()) res.tau.col(h) = step.tau;
        res.J_step(h) = step.J;
        res.tau_step(h) = step.tau_max;
        res.polished.push_back(step.polished);
        if (res.tree) {
            res.psi0.push_back(particular_solution_psi0(sys.E, sys.theta));
            res.shift_ok.push_back(shift_condition(res.psi0.back(), lo, hi));
        }
        res.systems.push_back(std::move(sys));
    }
    res.J = H ? res.J_step.maxCoeff() : 0.0;
    res.tau_max = H ? res.tau_step.maxCoeff() : 0.0;
    res.aux = rebuild_aux(art, bin, res.psi, phi_hat);
    return res;
}

namespace {

nlohmann::json to_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nlohmann::json to_json(const Mat& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < m.rows(); ++i) rows.push_back(to_json(Vec(m.row(i).transpose())));
    return rows;
}

}  // namespace

nlohmann::json debug_dump(const PressureRecoveryResult& res) {
    nlohmann::json steps = nlohmann::json::array();
    for (std::size_t h = 0; h < res.systems.size(); ++h) {
        const int hh = static_cast<int>(h);
        nlohmann::json s{{"h", hh},
                         {"E", to_json(res.systems[h].E)},
                         {"theta", to_json(res.systems[h].theta)},
                         {"psi", to_json(Vec(res.psi.col(hh)))},
                         {"J", res.J_step(hh)},
                         {"polished", static_cast<bool>(res.polished[h])}};
        if (res.kind == gas::ModelKind::Misoc) s["tau"] = to_json(Vec(res.tau.col(hh)));
        if (h < res.psi0.size()) {
            s["psi0"] = to_json(res.psi0[h]);
            s["shift_ok"] = static_cast<bool>(res.shift_ok[h]);
        }
        steps.push_back(std::move(s));
    }
    return {{"model", res.kind == gas::ModelKind::Misoc ? "misoc" : "pwa"},
            {"J", res.J},
            {"tau_max", res.tau_max},
            {"tree", res.tree},
            {"steps", std::move(steps)}};
}

Mat flows(const game::GameInstance& inst, const Vec& u) {
    const auto& map = inst.gas.map;
    const int L = static_cast<int>(inst.gas.labels.size());
    Mat phi(L, map.H());
    for (int l = 0; l < L; ++l)
        for (int h = 0; h < map.H(); ++h) phi(l, h) = u(inst.idx.gas(map.phi(l, h)));
    return phi;
}

Mat pressures(const game::GameInstance& inst, const Vec& u) {
    const auto& map = inst.gas.map;
    Mat psi(map.num_nodes(), map.H());
    for (int n = 0; n < map.num_nodes(); ++n)
        for (int h = 0; h < map.H(); ++h) psi(n, h) = u(inst.idx.gas(map.psi(n, h)));
    return psi;
}

Vec compose_strategy(const game::GameInstance& inst, const Vec& u_hat, const RecoveredBinaries& bin,
                     const PressureRecoveryResult& res) {
    const auto& map = inst.gas.map;
    const auto& art = inst.gas;
    const int L = static_cast<int>(art.labels.size());
    const int H = map.H();
    Vec u = u_hat;
    auto at = [&](int k) -> double& { return u(inst.idx.gas(k)); };
    auto atz = [&](int k) -> double& { return u(inst.idx.gas(art.z_index(k))); };
    for (int n = 0; n < map.num_nodes(); ++n)
        for (int h = 0; h < H; ++h) at(map.psi(n, h)) = res.psi(n, h);
    for (int l = 0; l < L; ++l)
        for (int h = 0; h < H; ++h) {
            atz(map.delta(l, h)) = bin.delta(l, h);
            if (bin.kind == gas::ModelKind::Misoc) {
                at(map.nu(l, h)) = res.aux.nu(l, h);
                continue;
            }
            at(map.nu_psi(l, h)) = res.aux.nu(l, h);
            for (int m = 0; m < bin.r; ++m) {
                at(map.nu_m(l, m, h)) = res.aux.nu_m[m](l, h);
                atz(map.alpha(l, m, h)) = bin.alpha(l, m, h);
                atz(map.beta(l, m, h)) = bin.beta(l, m, h);
                atz(map.gamma(l, m, h)) = bin.gamma(l, m, h);
            }
        }
    if (inst.num_penalty > 0) {
        const Mat phi = flows(inst, u_hat);
        for (int l = 0; l < L; ++l) u(inst.idx.penalty(l)) = phi.row(l).cwiseAbs().maxCoeff();
    }
    return u;
}

}  // namespace iegds::recovery
