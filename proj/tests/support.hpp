#pragma once

#include "iegds/netmodel.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace iegds::testing {

inline std::string data_path(const std::string& rel) { return std::string(IEGDS_DATA_DIR) + "/" + rel; }

struct DeskOptions {
    int N = 4;
    int H = 2;
    // Gas edges as 0-based pairs; empty draws a random tree.
    std::vector<std::pair<int, int>> gas_edges;
    bool uniform_psi_bounds = false;
    bool storage = true;
    double gas_load_scale = 1.0;
};

// Small random network: random electrical and gas trees, mixed DG kinds, optional storage.
inline Network desk_network(std::uint64_t seed, const DeskOptions& o = {}) {
    CounterRng rng(seed);
    Network net;
    net.horizon = {o.H, 1.0};
    const int N = o.N, H = o.H;
    auto profile = [&](double lo, double hi) {
        std::vector<double> v(H);
        for (auto& x : v) x = rng.uniform(lo, hi);
        return v;
    };
    for (int i = 0; i < N; ++i) {
        ElectricalBus b;
        b.id = i + 1;
        b.theta_min = i == 0 ? 0.0 : -0.5;
        b.theta_max = i == 0 ? 0.0 : 0.5;
        b.v_min = 0.95;
        b.v_max = 1.05;
        b.d_e = profile(10.0, 50.0);
        b.has_transmission_tie = i == 0;
        net.buses.push_back(b);
    }
    for (int i = 1; i < N; ++i) {
        const int parent = static_cast<int>(rng.below(i));
        net.lines.push_back({parent + 1, i + 1, rng.uniform(2000.0, 6000.0), rng.uniform(1000.0, 3000.0)});
    }
    const double psi_lo = rng.uniform(5.0, 15.0), psi_hi = psi_lo + rng.uniform(10.0, 30.0);
    for (int i = 0; i < N; ++i) {
        GasNode g;
        g.id = i + 1;
        if (o.uniform_psi_bounds) {
            g.psi_min = psi_lo;
            g.psi_max = psi_hi;
        } else {
            g.psi_min = rng.uniform(5.0, 15.0);
            g.psi_max = g.psi_min + rng.uniform(10.0, 30.0);
        }
        g.d_g = i == 0 ? std::vector<double>(H, 0.0) : profile(0.2 * o.gas_load_scale, 1.5 * o.gas_load_scale);
        g.is_source = i == 0;
        net.gas_nodes.push_back(g);
    }
    if (o.gas_edges.empty()) {
        for (int i = 1; i < N; ++i) {
            const int parent = static_cast<int>(rng.below(i));
            net.pipes.push_back({parent + 1, i + 1, rng.uniform(0.8, 2.0), 10.0});
        }
    } else {
        for (auto [a, b] : o.gas_edges) net.pipes.push_back({a + 1, b + 1, rng.uniform(0.8, 2.0), 10.0});
    }
    for (int i = 0; i < N; ++i) {
        Prosumer p;
        p.bus_id = i + 1;
        p.gas_node_id = i + 1;
        const auto kind = rng.below(3);
        if (kind == 1) {
            p.dg_kind = DgKind::GasFueled;
            p.p_dg_max = rng.uniform(20.0, 60.0);
            p.eta_gu = rng.uniform(0.03, 0.08);
        } else if (kind == 2) {
            p.dg_kind = DgKind::NonGasFueled;
            p.p_dg_max = rng.uniform(20.0, 60.0);
            p.q_ngu = rng.uniform(0.002, 0.01);
            p.l_ngu = rng.uniform(0.02, 0.1);
        }
        if (o.storage && rng.below(2) == 1) {
            Storage s;
            s.e_cap = 100.0;
            s.eta_st = 0.99;
            s.eta_ch = 0.95;
            s.eta_dh = 0.95;
            s.x_min = 0.1;
            s.x_max = 0.9;
            s.x_init = 0.5;
            s.p_ch_max = 20.0;
            s.p_dh_max = 20.0;
            s.Q_st = Eigen::MatrixXd::Identity(H, H) * rng.uniform(0.001, 0.005);
            p.storage = s;
        }
        net.prosumers.push_back(p);
    }
    auto& m = net.market;
    m.q_e = profile(5e-5, 2e-4);
    m.l_e = profile(0.05, 0.2);
    m.q_g = profile(0.01, 0.04);
    m.l_g = profile(0.5, 1.5);
    m.sigma_e_min = 0.0;
    m.sigma_e_max = 1000.0;
    m.sigma_g_min = 0.0;
    m.sigma_g_max = 50.0;
    return net;
}

// All connected simple graphs on n labelled nodes, as edge lists.
inline std::vector<std::vector<std::pair<int, int>>> connected_graphs(int n) {
    std::vector<std::pair<int, int>> all;
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) all.push_back({a, b});
    std::vector<std::vector<std::pair<int, int>>> out;
    const std::uint64_t total = std::uint64_t{1} << all.size();
    for (std::uint64_t mask = 0; mask < total; ++mask) {
        std::vector<std::pair<int, int>> edges;
        for (std::size_t e = 0; e < all.size(); ++e)
            if (mask >> e & 1) edges.push_back(all[e]);
        if (static_cast<int>(edges.size()) < n - 1) continue;
        if (is_connected(GraphView{n, edges})) out.push_back(std::move(edges));
    }
    return out;
}

}  // namespace iegds::testing
