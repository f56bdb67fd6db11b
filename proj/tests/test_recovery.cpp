#include "iegds/recovery.hpp"
#include "support.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

using namespace iegds;
using namespace iegds::recovery;
using doctest::Approx;

namespace {

Network chain(int n, double lo, double hi, double cap = 10.0) {
    testing::DeskOptions o;
    o.N = n;
    o.H = 1;
    for (int k = 0; k + 1 < n; ++k) o.gas_edges.push_back({k, k + 1});
    Network net = testing::desk_network(17, o);
    for (auto& g : net.gas_nodes) {
        g.psi_min = lo;
        g.psi_max = hi;
    }
    for (auto& p : net.pipes) {
        p.c_f = 1.0;
        p.phi_max = cap;
    }
    return net;
}

Vec constant(int n, double v) { return Vec::Constant(n, v); }

// Two directed rows over one pipe, both describing psi_1 - psi_2.
StepSystem two_node_system(double theta) {
    StepSystem s{Mat::Zero(2, 2), Vec::Constant(2, theta)};
    s.E << 1, -1, 1, -1;
    return s;
}

// Random tree flows with reciprocal labels.
Mat random_flows(const gas::Artifacts& art, CounterRng& rng, int H, double scale) {
    Mat phi(art.labels.size(), H);
    for (std::size_t l = 0; l < art.labels.size(); l += 2)
        for (int h = 0; h < H; ++h) {
            const double v = rng.uniform(-scale, scale);
            phi(l, h) = v;
            phi(l + 1, h) = -v;
        }
    return phi;
}

}  // namespace

TEST_CASE("direction recovery uses a weak inequality") {
    CHECK(recover_delta(0.3) == 1);
    CHECK(recover_delta(0.0) == 1);
    CHECK(recover_delta(-1e-12) == 0);
}

TEST_CASE("region recovery ties to the lower region") {
    const Network net = chain(2, 0, 10, 3.0);
    const auto art = gas::build_pwa(net, 3);
    Mat phi(2, 1);
    phi << -1.0, 1.0;
    const auto bin = recover_binaries(art, phi);
    CHECK(bin.gamma(0, 0, 0) == 1);
    CHECK(bin.gamma(0, 1, 0) == 0);
    CHECK(bin.gamma(0, 2, 0) == 0);
    CHECK(bin.region(1, 0) == 1);
    CHECK(bin.delta(0, 0) == 0);
    CHECK(bin.delta(1, 0) == 1);
    CHECK(region_logic_violations(bin) == 0);
}

TEST_CASE("zero flow on both labels keeps the pair complementary") {
    const Network net = chain(2, 0, 10);
    const auto art = gas::build_misoc(net);
    const auto bin = recover_binaries(art, Mat::Zero(2, 1));
    CHECK(bin.delta(0, 0) == 1);
    CHECK(bin.delta(1, 0) == 0);
}

TEST_CASE("recovered binaries are valid and idempotent") {
    CounterRng rng(4);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Network net = testing::desk_network(seed, {5, 3});
        const auto art = gas::build_pwa(net, 4);
        const Mat phi = random_flows(art, rng, 3, 10.0);
        const auto bin = recover_binaries(art, phi);
        CHECK(region_logic_violations(bin) == 0);
        for (int l = 0; l < bin.delta.rows(); ++l)
            for (int h = 0; h < 3; ++h) {
                int ones = 0;
                for (int m = 0; m < 4; ++m) {
                    ones += bin.gamma(l, m, h);
                    CHECK(bin.alpha(l, m, h) + bin.beta(l, m, h) - bin.gamma(l, m, h) <= 1);
                    CHECK(bin.gamma(l, m, h) <= bin.alpha(l, m, h));
                    CHECK(bin.gamma(l, m, h) <= bin.beta(l, m, h));
                }
                CHECK(ones == 1);
                CHECK(bin.delta(l, h) + bin.delta(l ^ 1, h) == 1);
            }
        const auto again = recover_binaries(art, phi);
        CHECK(again.delta == bin.delta);
        CHECK(again.region == bin.region);
    }
}

TEST_CASE("pressure system rows") {
    std::vector<gas::DirectedPipe> labels{{0, 1, 0, 1, 1.0, 10.0}, {1, 0, 0, 0, 1.0, 10.0}};
    Eigen::VectorXi d(2);
    d << 1, 0;
    Vec phi(2);
    phi << 2.0, -2.0;
    const auto s = build_E_theta(labels, 3, d, phi);
    CHECK(s.E.row(0) == (Eigen::RowVector3d() << 1, -1, 0).finished());
    CHECK(s.theta(0) == Approx(4.0));
    d << 0, 1;
    const auto t = build_E_theta(labels, 3, d, phi);
    CHECK(t.E.row(0) == (Eigen::RowVector3d() << -1, 1, 0).finished());
}

TEST_CASE("MISOC pressure LP on two nodes") {
    const auto a = recover_pressures_misoc(two_node_system(1.0), constant(2, 0), constant(2, 10));
    CHECK(a.psi(0) - a.psi(1) == Approx(1.0).epsilon(1e-8));
    CHECK(a.tau_max <= 1e-8);
    CHECK(a.J <= 1e-8);

    const auto b = recover_pressures_misoc(two_node_system(1.0), constant(2, 0), constant(2, 0.5));
    CHECK(b.psi(0) - b.psi(1) == Approx(0.5).epsilon(1e-8));
    CHECK(b.tau_max == Approx(0.5).epsilon(1e-8));
    CHECK(b.J == Approx(0.5).epsilon(1e-8));
    CHECK((b.tau.array() >= 0.0).all());

    const auto c = recover_pressures_misoc(two_node_system(0.0), constant(2, 0), constant(2, 10));
    CHECK(c.tau_max == 0.0);
    CHECK(c.J == 0.0);
}

TEST_CASE("PWA pressure LP") {
    SUBCASE("consistent tree data is matched exactly") {
        const Network net = chain(4, 0, 50);
        const auto art = gas::build_pwa(net, 3);
        Vec psi(4);
        psi << 40, 31, 27, 12;
        StepSystem s{Mat::Zero(6, 4), Vec::Zero(6)};
        for (int l = 0; l < 6; ++l) {
            const auto& d = art.labels[l];
            const int sign = psi(d.from) >= psi(d.to) ? 1 : -1;
            s.E(l, d.from) = sign;
            s.E(l, d.to) = -sign;
            s.theta(l) = std::abs(psi(d.from) - psi(d.to));
        }
        const auto r = recover_pressures_pwa(s, constant(4, 0), constant(4, 50));
        CHECK(r.J <= 1e-8);
        CHECK((s.E * r.psi - s.theta).cwiseAbs().maxCoeff() <= 1e-8);
    }
    SUBCASE("inconsistent cycle leaves a residual") {
        StepSystem s{Mat::Zero(3, 3), Vec::Ones(3)};
        s.E << 1, -1, 0, 0, 1, -1, -1, 0, 1;
        const auto r = recover_pressures_pwa(s, constant(3, 0), constant(3, 10));
        CHECK(r.J > 0.1);
        CHECK_FALSE(rows_form_tree(s.E));
        CHECK_THROWS_AS(particular_solution_psi0(s.E, s.theta), std::domain_error);
    }
    SUBCASE("zero data gives a constant vector") {
        const auto r = recover_pressures_pwa(two_node_system(0.0), constant(2, 1), constant(2, 10));
        CHECK(r.J == 0.0);
        CHECK(r.psi(0) == Approx(r.psi(1)));
    }
}

TEST_CASE("auxiliary rebuild") {
    {
        const Network net = chain(2, 0, 10);
        const auto art = gas::build_misoc(net);
        Mat phi(2, 1);
        phi << 1.0, -1.0;
        const auto bin = recover_binaries(art, phi);
        Mat psi(2, 1);
        psi << 4, 1;
        const auto aux = rebuild_aux(art, bin, psi, phi);
        CHECK(aux.nu(0, 0) == Approx(3.0));
        CHECK(aux.nu(1, 0) == Approx(3.0));
    }
    {
        const Network net = chain(2, 0, 10, 6.0);
        const auto art = gas::build_pwa(net, 3);
        Mat phi(2, 1);
        phi << 1.5, -1.5;
        const auto bin = recover_binaries(art, phi);
        Mat psi(2, 1);
        psi << 5, 2;
        const auto aux = rebuild_aux(art, bin, psi, phi);
        CHECK(bin.delta(1, 0) == 0);
        CHECK(aux.nu(1, 0) == 0.0);
        CHECK(aux.nu(0, 0) == Approx(5.0));
        REQUIRE(bin.region(0, 0) == 1);
        CHECK(aux.nu_m[0](0, 0) == 0.0);
        CHECK(aux.nu_m[1](0, 0) == Approx(1.5));
        CHECK(aux.nu_m[2](0, 0) == 0.0);
    }
}

TEST_CASE("minimum-norm particular solution") {
    const Vec a = particular_solution_psi0(two_node_system(1.0).E, Vec::Ones(2));
    CHECK(a(0) == Approx(0.5));
    CHECK(a(1) == Approx(-0.5));
    const Vec z = particular_solution_psi0(two_node_system(0.0).E, Vec::Zero(2));
    CHECK(z.cwiseAbs().maxCoeff() == 0.0);

    Vec psi(3);
    psi << 7, 3, 5;
    Mat E(4, 3);
    E << 1, -1, 0, 1, -1, 0, 0, 1, -1, 0, 1, -1;
    const Vec theta = E * psi;
    const Vec p0 = particular_solution_psi0(E, theta);
    CHECK((E * p0 - theta).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(std::abs(p0.sum()) <= 1e-10);
}

TEST_CASE("shift condition") {
    Vec p(3);
    p << 0.5, -0.5, 0.0;
    CHECK(shift_condition(p, constant(3, 0), constant(3, 10)));
    p << 6, -6, 0;
    CHECK_FALSE(shift_condition(p, constant(3, 0), constant(3, 10)));
    const auto [lo, hi] = shift_interval(p, constant(3, 0), constant(3, 10));
    CHECK(lo > hi);
}

TEST_CASE("E has full row rank on trees") {
    CounterRng rng(12);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Network net = testing::desk_network(seed, {6, 1});
        const auto art = gas::build_misoc(net);
        const auto bin = recover_binaries(art, random_flows(art, rng, 1, 5.0));
        const auto s = build_E_theta(art.labels, 6, bin.delta.col(0), Vec::Zero(art.labels.size()));
        Eigen::FullPivLU<Mat> lu(s.E);
        CHECK(lu.rank() == 5);
        CHECK(rows_form_tree(s.E));
    }
}

TEST_CASE("shift condition agrees with the PWA recovery LP on uniform-bound trees") {
    CounterRng rng(2718);
    int agree = 0, positives = 0, total = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        testing::DeskOptions o;
        o.N = 3 + static_cast<int>(seed % 4);
        o.H = 1;
        o.uniform_psi_bounds = true;
        const Network net = testing::desk_network(seed, o);
        const auto art = gas::build_pwa(net, 5);
        const Mat phi = random_flows(art, rng, 1, 10.0);
        const auto bin = recover_binaries(art, phi);
        for (bool pol : {true, false}) {
            RecoverySettings st;
            st.polish = pol;
            const auto res = recover_pressures(net, art, bin, phi, st);
            REQUIRE(res.tree);
            const bool cond = res.shift_ok[0];
            const bool exact = res.J <= 1e-7;
            agree += cond == exact;
            positives += cond;
            ++total;
            const auto [lo, hi] = shift_interval(res.psi0[0], Vec::Constant(o.N, net.gas_nodes[0].psi_min),
                                                 Vec::Constant(o.N, net.gas_nodes[0].psi_max));
            CHECK((lo <= hi) == cond);
            for (int n = 0; n < o.N; ++n) {
                CHECK(res.psi(n, 0) >= net.gas_nodes[n].psi_min - 1e-12);
                CHECK(res.psi(n, 0) <= net.gas_nodes[n].psi_max + 1e-12);
            }
        }
    }
    CHECK(agree == total);
    CHECK(positives > 0);
    CHECK(positives < total);
}

TEST_CASE("debug dump lists every step") {
    const Network net = chain(3, 0, 30);
    const auto art = gas::build_misoc(net);
    Mat phi(4, 1);
    phi << 2, -2, 1, -1;
    const auto bin = recover_binaries(art, phi);
    const auto res = recover_pressures(net, art, bin, phi);
    CHECK(res.tree);
    CHECK(res.violation() <= 1e-8);
    const auto j = debug_dump(res);
    CHECK(j.at("steps").size() == 1);
}
