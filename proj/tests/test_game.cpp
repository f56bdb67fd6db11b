#include "iegds/conic.hpp"
#include "iegds/game.hpp"
#include "support.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <set>

using namespace iegds;
using namespace iegds::game;
using doctest::Approx;

namespace {

// Random point, entries in [-scale, scale].
Vec random_point(CounterRng& rng, int n, double scale = 10.0) {
    Vec u(n);
    for (int k = 0; k < n; ++k) u[k] = rng.uniform(-scale, scale);
    return u;
}

Network bare(int N, int H, int pipes_from_first = 0) {
    testing::DeskOptions o;
    o.N = N;
    o.H = H;
    o.storage = false;
    for (int k = 1; k <= pipes_from_first; ++k) o.gas_edges.push_back({0, k});
    Network net = testing::desk_network(77, o);
    for (auto& b : net.buses) std::fill(b.d_e.begin(), b.d_e.end(), 0.0);
    for (auto& g : net.gas_nodes) std::fill(g.d_g.begin(), g.d_g.end(), 0.0);
    for (auto& p : net.prosumers) {
        p.dg_kind = DgKind::None;
        p.p_dg_max = 0.0;
        p.storage.reset();
    }
    auto& m = net.market;
    std::fill(m.q_e.begin(), m.q_e.end(), 1.0);
    std::fill(m.l_e.begin(), m.l_e.end(), 0.0);
    std::fill(m.q_g.begin(), m.q_g.end(), 1.0);
    std::fill(m.l_g.begin(), m.l_g.end(), 0.0);
    return net;
}

int rows_in(const GameInstance& g, const std::vector<RowMeta>& meta, const std::string& fam) {
    const int id = g.family_id(fam);
    return static_cast<int>(std::count_if(meta.begin(), meta.end(), [&](const RowMeta& r) { return r.family == id; }));
}

}  // namespace

TEST_CASE("two-bus toy: one balance row per bus and step, two cones under MISOC") {
    const Network net = bare(2, 1, 1);
    const GameInstance pwa = assemble(net, gas::ModelSpec::pwa(2));
    CHECK(rows_in(pwa, pwa.eq_meta, "power_balance") == 2);
    const GameInstance mi = assemble(net, gas::ModelSpec::misoc());
    CHECK(mi.problem.cones.size() == 2);
    CHECK(pwa.problem.cones.empty());
}

TEST_CASE("reference angle is pinned at bus 1") {
    const Network net = testing::desk_network(4, {3, 2});
    const GameInstance g = assemble(net, gas::ModelSpec::misoc());
    const int ref = g.family_id("reference_angle");
    REQUIRE(ref >= 0);
    const Eigen::SparseMatrix<double, Eigen::RowMajor> A = g.problem.eq_matrix;
    for (int h = 0; h < 2; ++h) {
        const int k = g.idx.theta(0, h);
        int rows = 0;
        for (std::size_t r = 0; r < g.eq_meta.size(); ++r) {
            if (g.eq_meta[r].family != ref) continue;
            const Eigen::SparseVector<double> row = A.row(static_cast<Eigen::Index>(r));
            if (row.nonZeros() == 1 && row.coeff(k) != 0.0) {
                ++rows;
                CHECK(g.problem.eq_rhs[static_cast<Eigen::Index>(r)] == 0.0);
            }
        }
        CHECK(rows == 1);
    }
}

TEST_CASE("x block sizes and z bounds") {
    const Network net = testing::desk_network(6, {5, 3});
    const GameInstance g = assemble(net, gas::ModelSpec::pwa(3));
    const auto eg = net.electrical_graph();
    for (int i = 0; i < net.num_agents(); ++i) {
        int deg = 0;
        for (auto [a, b] : eg.edges) deg += (a == i) + (b == i);
        CHECK(g.idx.n_x(i) == 3 * (8 + deg));
    }
    for (int k = g.idx.z_begin(); k < g.idx.z_begin() + g.idx.num_z(); ++k) {
        CHECK(g.problem.lower[k] == 0.0);
        CHECK(g.problem.upper[k] == 1.0);
    }
}

TEST_CASE("constraint family audit") {
    // desk networks may lack storage or DGs; pick a seed that has all of them
    auto complete = [](const Network& n) {
        bool st = false, dg = false, gdg = false;
        for (const auto& p : n.prosumers) {
            st |= p.storage.has_value();
            dg |= p.dg_kind != DgKind::None;
            gdg |= p.dg_kind == DgKind::GasFueled;
        }
        return st && dg && gdg;
    };
    std::uint64_t seed = 1;
    while (!complete(testing::desk_network(seed, {4, 2})) && seed < 200) ++seed;
    const Network net = testing::desk_network(seed, {4, 2});
    REQUIRE(complete(net));
    const std::set<std::string> common{
        "dg_limits",         "dg_gas_conversion", "storage_dynamics",       "storage_power_limits",
        "storage_soc_limits", "grid_import_nonneg", "grid_trade_bounds",    "angle_limits",
        "reference_angle",   "voltage_limits",    "power_balance",          "grid_exchange",
        "line_flow",         "transmission_injection", "gas_balance",       "gas_flow_limits",
        "pressure_limits",   "source_import",     "gas_consumption_bounds", "flow_direction",
        "flow_reciprocity",  "binary_relaxation"};
    std::set<std::string> misoc = common, pwa = common;
    misoc.insert({"misoc_cone", "mccormick"});
    pwa.insert({"pwa_flow_equation", "pwa_region_choice", "pressure_direction", "pwa_region_logic",
                "pwa_flow_product", "pwa_pressure_product"});

    auto active = [](const GameInstance& g) {
        const auto v = active_families(g);
        return std::set<std::string>(v.begin(), v.end());
    };
    CHECK(active(assemble(net, gas::ModelSpec::misoc())) == misoc);
    CHECK(active(assemble(net, gas::ModelSpec::pwa(3))) == pwa);
    auto pen = misoc;
    pen.insert("flow_penalty");
    CHECK(active(penalized(assemble(net, gas::ModelSpec::misoc()), 1.0)) == pen);
}

TEST_CASE("cost examples") {
    {
        const Network net = bare(2, 1, 1);
        const GameInstance g = assemble(net, gas::ModelSpec::misoc());
        const Vec u = Vec::Zero(g.problem.num_vars);
        CHECK(cost_J(g, 0, u) == 0.0);
        CHECK(potential_P(g, u) == 0.0);
    }
    {
        Network net = bare(1, 1);
        const GameInstance g = assemble(net, gas::ModelSpec::misoc());
        Vec u = Vec::Zero(g.problem.num_vars);
        u[g.idx.p_eg(0, 0)] = 2.0;
        CHECK(cost_J(g, 0, u) == Approx(4.0));
    }
    {
        const Network net = bare(2, 1, 1);
        const GameInstance g = assemble(net, gas::ModelSpec::misoc());
        Vec u = Vec::Zero(g.problem.num_vars);
        u[g.idx.p_eg(0, 0)] = 1.0;
        u[g.idx.p_eg(1, 0)] = 1.0;
        CHECK(cost_J(g, 0, u) == Approx(2.0));
        CHECK(potential_P(g, u) == Approx(3.0));
        CHECK(g.problem.objective(u) == Approx(3.0));
    }
    {
        Network net = bare(1, 3);
        std::fill(net.market.q_e.begin(), net.market.q_e.end(), 0.0);
        Storage s;
        s.Q_st = Eigen::MatrixXd::Identity(3, 3);
        s.p_ch_max = s.p_dh_max = 10.0;
        net.prosumers[0].storage = s;
        const GameInstance g = assemble(net, gas::ModelSpec::misoc());
        Vec u = Vec::Zero(g.problem.num_vars);
        const double w[3] = {0.5, -1.0, 2.0};
        for (int h = 0; h < 3; ++h) u[g.idx.p_ch(0, h)] = u[g.idx.p_dh(0, h)] = w[h];
        CHECK(cost_J(g, 0, u) == Approx(2.0 * (0.25 + 1.0 + 4.0)));
    }
}

TEST_CASE("exact potential identity under unilateral deviations") {
    CounterRng rng(2024);
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        testing::DeskOptions o;
        o.N = 2 + static_cast<int>(seed % 5);
        o.H = 1 + static_cast<int>(seed % 4);
        const GameInstance g = assemble(testing::desk_network(seed, o), gas::ModelSpec::misoc());
        for (int i = 0; i < g.idx.N(); ++i) {
            const Vec x = random_point(rng, g.problem.num_vars);
            Vec y = x;
            for (int k = g.idx.x_begin(i); k < g.idx.x_begin(i) + g.idx.n_x(i); ++k) y[k] = rng.uniform(-10, 10);
            const double dJ = cost_J(g, i, x) - cost_J(g, i, y);
            const double dP = potential_P(g, x) - potential_P(g, y);
            CHECK(std::abs(dP - dJ) <= 1e-9 * std::max(1.0, std::abs(dJ)));
        }
    }
}

TEST_CASE("potential gradient matches finite differences of own costs") {
    CounterRng rng(7);
    const GameInstance g = assemble(testing::desk_network(12, {4, 3}), gas::ModelSpec::misoc());
    for (int t = 0; t < 5; ++t) {
        Vec u = random_point(rng, g.problem.num_vars);
        const Vec grad = potential_gradient(g, u);
        const Vec F = pseudo_gradient(g, u);
        for (int i = 0; i < g.idx.N(); ++i)
            for (int k = g.idx.x_begin(i); k < g.idx.x_begin(i) + g.idx.n_x(i); ++k) {
                const double hstep = 1e-4;
                Vec a = u, b = u;
                a[k] += hstep;
                b[k] -= hstep;
                const double fd = (cost_J(g, i, a) - cost_J(g, i, b)) / (2 * hstep);
                CHECK(std::abs(grad[k] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
                CHECK(std::abs(F[k] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
            }
    }
}

TEST_CASE("pseudogradient is monotone and the objective is convex") {
    CounterRng rng(99);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const GameInstance g = assemble(testing::desk_network(seed, {4, 2}), gas::ModelSpec::misoc());
        for (int t = 0; t < 20; ++t) {
            const Vec x = random_point(rng, g.problem.num_vars), y = random_point(rng, g.problem.num_vars);
            const Vec d = (x - y).head(g.idx.num_x());
            const Vec dF = (pseudo_gradient(g, x) - pseudo_gradient(g, y)).head(g.idx.num_x());
            CHECK(dF.dot(d) >= -1e-9);
        }
        const Eigen::MatrixXd Q = Eigen::MatrixXd(g.problem.quadratic);
        CHECK((Q - Q.transpose()).cwiseAbs().maxCoeff() == 0.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q, Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().minCoeff() >= -1e-9);
    }
}

TEST_CASE("objective equals the potential") {
    CounterRng rng(5);
    const GameInstance g = assemble(testing::desk_network(21, {5, 3}), gas::ModelSpec::pwa(2));
    for (int t = 0; t < 20; ++t) {
        const Vec u = random_point(rng, g.problem.num_vars);
        CHECK(g.problem.objective(u) == Approx(potential_P(g, u)).epsilon(1e-12));
    }
}

TEST_CASE("flow penalty") {
    const Network net = bare(2, 2, 1);
    const GameInstance base = assemble(net, gas::ModelSpec::misoc());
    CHECK_THROWS_AS(penalized(base, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(penalized(penalized(base, 1.0), 1.0), std::invalid_argument);

    CounterRng rng(3);
    const GameInstance zero = penalized(base, 0.0);
    for (int t = 0; t < 100; ++t) {
        const Vec u = random_point(rng, zero.problem.num_vars);
        CHECK(zero.problem.objective(u) == Approx(base.problem.objective(u.head(base.problem.num_vars))));
    }

    const GameInstance one = penalized(base, 1.0), two = penalized(base, 2.0);
    Vec u = Vec::Zero(one.problem.num_vars);
    const auto& gm = one.gas.map;
    u[one.idx.gas(gm.phi(0, 0))] = 3.0;
    u[one.idx.gas(gm.phi(0, 1))] = -5.0;
    u[one.idx.gas(gm.phi(1, 0))] = -3.0;
    u[one.idx.gas(gm.phi(1, 1))] = 5.0;
    u[one.idx.penalty(0)] = 5.0;
    u[one.idx.penalty(1)] = 5.0;
    const double P = potential_P(one, u);
    CHECK(one.problem.objective(u) - P == Approx(10.0));
    CHECK(two.problem.objective(u) - P == Approx(20.0));
    CHECK(feasibility_residuals(one, u).violation("flow_penalty") == 0.0);
    u[one.idx.penalty(0)] = 4.9;
    CHECK(feasibility_residuals(one, u).violation("flow_penalty") == Approx(0.1));
}

TEST_CASE("residual report") {
    const Network net = load_network(testing::data_path("cases/toy3.json"));
    const GameInstance g = assemble(net, gas::ModelSpec::misoc());
    const auto res = conic::solve(g.problem);
    REQUIRE(res.status == conic::SolveStatus::Optimal);
    const ResidualReport rep = feasibility_residuals(g, res.x);
    for (const auto& f : rep.families) CHECK(f.max_violation <= 1e-6);
    CHECK(rep.feasible);

    Vec u = res.x;
    for (int k = g.idx.z_begin(); k < g.idx.z_begin() + g.idx.num_z(); ++k) u[k] = 0.5;
    CHECK(feasibility_residuals(g, u).integrality_gap == Approx(0.5));
    CHECK_FALSE(feasibility_residuals(g, u).integral);

    Vec w = res.x;
    const double extra = net.market.sigma_e_max + 0.3 - sigma_e(g, w, 0);
    w[g.idx.p_eg(0, 0)] += extra;
    CHECK(feasibility_residuals(g, w).violation("grid_trade_bounds") == Approx(0.3));
    CHECK_THROWS_AS(feasibility_residuals(g, w).violation("no_such_family"), std::out_of_range);
    CHECK_THROWS_AS(feasibility_residuals(g, Vec::Zero(3)), std::invalid_argument);
}
