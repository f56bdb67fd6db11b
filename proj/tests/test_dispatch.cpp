#include "iegds/dispatch.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace iegds;
using namespace iegds::dispatch;
using doctest::Approx;
using iegds::testing::data_path;

namespace {

void check_trace_invariants(const Outcome& o) {
    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < o.trace.size(); ++k) {
        const auto& r = o.trace[k];
        CHECK(r.ell == static_cast<int>(k) + 1);
        CHECK(r.rho_lo <= r.rho);
        if (std::isfinite(r.rho_hi)) CHECK(r.rho <= r.rho_hi);
        // brackets only shrink
        CHECK(r.rho_lo >= lo);
        CHECK(r.rho_hi <= hi);
        lo = r.rho_lo;
        hi = r.rho_hi;
    }
    if (o.epsilon) CHECK(*o.epsilon >= -1e-8);
    if (o.success()) {
        CHECK(o.violation <= 1e-6);
        CHECK(o.residuals.integral);
        CHECK(o.residuals.max_violation <= 1e-6);
        CHECK(o.trace[o.ell_bar - 1].violated == false);
    }
}

}  // namespace

TEST_CASE("penalty update rule") {
    PenaltyState s;
    s = update_penalty(s, true);
    CHECK(s.rho == 1.0);
    CHECK(s.ell == 2);
    CHECK_FALSE(s.finished);

    PenaltyState b;
    b.ell = 4;
    b.rho_lo = 1.0;
    b.rho_hi = 4.0;
    b.rho = 2.0;
    const auto v = update_penalty(b, true);
    CHECK(v.rho_lo == 2.0);
    CHECK(v.rho == 3.0);
    const auto n = update_penalty(b, false);
    CHECK(n.rho_hi == 2.0);
    CHECK(n.rho == 1.5);

    PenaltyState f;
    CHECK(update_penalty(f, false).finished);

    PenaltyState g;
    g.rho = 1.0;
    g.rho_lo = 0.0;
    g.ell = 2;
    CHECK(update_penalty(g, true).rho == 2.0);
    CHECK(to_string(Status::EpsGne) == "eps_gne");
    CHECK(to_string(Status::MaxIterNoFeasible) == "max_iter_no_feasible");
}

TEST_CASE("deviation examples") {
    CHECK(deviation(2.0, 4.0, 0.0, 1.0).delta == Approx(0.0));
    CHECK(deviation(2.2, 4.0, 0.0, 1.0).delta == Approx(0.1));
    const auto z = deviation(0.0, 3.0, 3.0, 1.0);
    CHECK(z.delta == 0.0);
    CHECK_FALSE(z.undefined_reference);
    CHECK(deviation(0.5, 3.0, 3.0, 1.0).undefined_reference);
    CHECK(mean_abs_deviation({deviation(2.2, 4, 0, 1), deviation(1.8, 4, 0, 1), deviation(0.5, 3, 3, 1)}) ==
          Approx(0.1));
}

TEST_CASE("feasible first iterate is an exact equilibrium") {
    const Network net = load_network(data_path("cases/toy2.json"));
    const Outcome o = run_two_stage(net, gas::ModelSpec::misoc());
    CHECK(o.status == Status::ExactGne);
    CHECK(o.ell_bar == 1);
    REQUIRE(o.epsilon);
    CHECK(*o.epsilon == 0.0);
    check_trace_invariants(o);
}

TEST_CASE("a toy needing a penalty reports epsilon from its trace") {
    const Network net = load_network(data_path("cases/toy3.json"));
    const Outcome o = run_two_stage(net, gas::ModelSpec::misoc());
    CHECK(o.status == Status::EpsGne);
    REQUIRE(o.epsilon);
    CHECK(*o.epsilon > 0.0);
    CHECK(o.trace.front().violated);
    CHECK(o.trace.front().rho == 0.0);
    CHECK(*o.epsilon == Approx(o.trace[o.ell_bar - 1].potential - o.trace.front().potential));
    CHECK(o.potential == Approx(o.trace[o.ell_bar - 1].potential));
    CHECK(o.rho_bar == o.trace[o.ell_bar - 1].rho);
    check_trace_invariants(o);
}

TEST_CASE("max_outer = 0 returns the unpenalized point") {
    const Network net = load_network(data_path("cases/toy3.json"));
    Settings st;
    st.max_outer = 0;
    const Outcome o = run_two_stage(net, gas::ModelSpec::misoc(), st);
    CHECK(o.status == Status::MaxIterNoFeasible);
    CHECK(o.ell_bar == 1);
    CHECK(o.rho_bar == 0.0);
    CHECK(o.trace.empty());
    CHECK_FALSE(o.success());
}

TEST_CASE("a single outer iteration leaves the violated toy unsolved") {
    const Network net = load_network(data_path("cases/toy3.json"));
    Settings st;
    st.max_outer = 1;
    const Outcome o = run_two_stage(net, gas::ModelSpec::misoc(), st);
    CHECK(o.status == Status::MaxIterNoFeasible);
    CHECK(o.trace.size() == 1);
    CHECK_FALSE(o.epsilon.has_value());
}

TEST_CASE("run invariants on random desk instances") {
    int successes = 0, infeasible = 0;
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        testing::DeskOptions o;
        o.N = 3 + static_cast<int>(seed % 3);
        o.H = 1 + static_cast<int>(seed % 2);
        o.gas_load_scale = 3.0;
        const Network net = testing::desk_network(seed, o);
        for (const auto& m : {gas::ModelSpec::misoc(), gas::ModelSpec::pwa(3)}) {
            Outcome out;
            try {
                out = run_two_stage(net, m);
            } catch (const Stage1Failure&) {
                // heavy gas loads can make the relaxation itself infeasible
                ++infeasible;
                continue;
            }
            check_trace_invariants(out);
            successes += out.success();
            if (out.success() && m.kind == gas::ModelKind::Misoc) {
                // zero recovery residual pins the flows to the Weymouth curve
                const auto& art = gas::build_misoc(net);
                const Mat phi = recovery::flows(game::assemble(net, m), out.u);
                const Mat psi = recovery::pressures(game::assemble(net, m), out.u);
                for (std::size_t l = 0; l < art.labels.size(); ++l)
                    for (int h = 0; h < o.H; ++h) {
                        const auto& d = art.labels[l];
                        const double w = gas::weymouth_flow(psi(d.from, h), psi(d.to, h), d.c_f);
                        CHECK(std::abs(phi(l, h) - w) <= 1e-5);
                    }
            }
        }
    }
    CHECK(successes > 0);
    CHECK(infeasible < 24);
}

TEST_CASE("PWA on a cyclic gas network warns and still runs") {
    testing::DeskOptions o;
    o.N = 3;
    o.H = 1;
    o.gas_edges = {{0, 1}, {1, 2}, {2, 0}};
    const Network net = testing::desk_network(3, o);
    const Outcome out = run_two_stage(net, gas::ModelSpec::pwa(2));
    CHECK_FALSE(out.tree);
    CHECK_FALSE(out.warnings.empty());
}

TEST_CASE("fixed-binary oracle") {
    const Network net = load_network(data_path("cases/toy2.json"));
    const auto inst = game::assemble(net, gas::ModelSpec::misoc());
    const Outcome o = run_two_stage(net, gas::ModelSpec::misoc());
    Vec z(inst.idx.num_z());
    for (int k = 0; k < z.size(); ++k) z(k) = o.u(inst.idx.z_begin() + k);
    const auto p = fixed_binary_potential(inst, z);
    REQUIRE(p);
    CHECK(*p <= o.potential + 1e-6);
    CHECK_THROWS_AS(fixed_binary_potential(inst, Vec::Zero(1)), std::invalid_argument);
}

TEST_CASE("convex baselines") {
    const Network net = load_network(data_path("cases/toy2.json"));
    const Outcome o = run_two_stage(net, gas::ModelSpec::misoc());
    REQUIRE(o.status == Status::ExactGne);
    const auto fixed = run_baseline(net, BaselineKind::FixedDirSoc, o.delta);
    CHECK(fixed.solved);
    CHECK(fixed.deviations.size() == net.pipes.size() * net.horizon.H);
    for (const auto& d : fixed.deviations) CHECK(std::isfinite(d.delta));
    CHECK(fixed.mean_abs_dev >= 0.0);

    BaselineOptions zero;
    zero.pen_weight = 0.0;
    const auto pen0 = run_baseline(net, BaselineKind::SocPen, o.delta, zero);
    CHECK(pen0.objective == Approx(fixed.objective).epsilon(1e-9));

    BaselineOptions tight;
    tight.cone_tol = fixed.max_cone_slack + 1.0;
    CHECK(run_baseline(net, BaselineKind::SocScp, o.delta, tight).rounds == 1);

    const auto scp = run_baseline(net, BaselineKind::SocScp, o.delta);
    CHECK(scp.solved);
    CHECK(scp.rounds >= 1);
    CHECK(scp.rounds <= BaselineOptions{}.max_rounds);
    CHECK(to_string(BaselineKind::SocScp) == "soc_scp");
    CHECK_THROWS_AS(run_baseline(net, BaselineKind::FixedDirSoc, IMat::Zero(1, 1)), std::invalid_argument);
}
