#include "iegds/netmodel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

namespace iegds {

std::string to_string(DgKind k) {
    switch (k) {
        case DgKind::None: return "none";
        case DgKind::GasFueled: return "gas_fueled";
        case DgKind::NonGasFueled: return "non_gas_fueled";
    }
    return "none";
}

DgKind dg_kind_from_string(const std::string& s) {
    if (s == "none") return DgKind::None;
    if (s == "gas_fueled") return DgKind::GasFueled;
    if (s == "non_gas_fueled") return DgKind::NonGasFueled;
    throw NetworkError(NetworkError::Kind::Schema, "dg_kind: unknown value '" + s + "'");
}

GraphView Network::electrical_graph() const {
    GraphView g;
    g.num_nodes = static_cast<int>(buses.size());
    for (const auto& l : lines) g.edges.emplace_back(l.from - 1, l.to - 1);
    return g;
}

GraphView Network::gas_graph() const {
    GraphView g;
    g.num_nodes = static_cast<int>(gas_nodes.size());
    for (const auto& p : pipes) g.edges.emplace_back(p.from - 1, p.to - 1);
    return g;
}

std::vector<int> Network::gas_node_owner() const {
    std::vector<int> owner(gas_nodes.size(), -1);
    for (std::size_t i = 0; i < prosumers.size(); ++i) {
        const auto& g = prosumers[i].gas_node_id;
        if (g && *g >= 1 && *g <= static_cast<int>(gas_nodes.size())) owner[*g - 1] = static_cast<int>(i);
    }
    return owner;
}

std::vector<int> Network::agent_gas_node() const {
    std::vector<int> node(prosumers.size(), -1);
    for (std::size_t i = 0; i < prosumers.size(); ++i)
        if (prosumers[i].gas_node_id) node[i] = *prosumers[i].gas_node_id - 1;
    return node;
}

bool is_connected(const GraphView& g) {
    if (g.num_nodes <= 1) return true;
    std::vector<int> parent(g.num_nodes);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    int components = g.num_nodes;
    for (auto [a, b] : g.edges) {
        int ra = find(a), rb = find(b);
        if (ra != rb) {
            parent[ra] = rb;
            --components;
        }
    }
    return components == 1;
}

bool is_spanning_tree(const GraphView& g) {
    if (!is_connected(g)) throw std::logic_error("is_spanning_tree: graph is not connected");
    return static_cast<int>(g.edges.size()) == g.num_nodes - 1;
}

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw NetworkError(NetworkError::Kind::Validation, msg); }

void check_profile(const std::vector<double>& v, int H, const std::string& what, bool nonneg) {
    if (static_cast<int>(v.size()) != H)
        invalid(what + ": expected " + std::to_string(H) + " entries, got " + std::to_string(v.size()));
    for (std::size_t h = 0; h < v.size(); ++h) {
        if (!std::isfinite(v[h])) invalid(what + "[" + std::to_string(h) + "] is not finite");
        if (nonneg && v[h] < 0.0) invalid(what + "[" + std::to_string(h) + "] is negative");
    }
}

void check_edges(const GraphView& g, const std::string& kind) {
    std::set<std::pair<int, int>> seen;
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        auto [a, b] = g.edges[e];
        const std::string name = kind + " " + std::to_string(a + 1) + "-" + std::to_string(b + 1);
        if (a < 0 || b < 0 || a >= g.num_nodes || b >= g.num_nodes) invalid(name + ": endpoint out of range");
        if (a == b) invalid(name + ": from and to are equal");
        if (!seen.insert({std::min(a, b), std::max(a, b)}).second) invalid(name + ": duplicate");
    }
}

}  // namespace

void validate(const Network& net) {
    const int H = net.horizon.H;
    if (H < 1) invalid("horizon: H must be >= 1");
    if (!(net.horizon.T_s > 0.0)) invalid("horizon: T_s must be > 0");
    if (net.buses.empty()) invalid("buses: at least one bus is required");
    if (net.gas_nodes.empty()) invalid("gas_nodes: at least one gas node is required");

    for (std::size_t i = 0; i < net.buses.size(); ++i) {
        const auto& b = net.buses[i];
        const std::string name = "bus " + std::to_string(b.id);
        if (b.id != static_cast<int>(i) + 1) invalid(name + ": ids must be 1..N in order");
        if (!(b.theta_min <= b.theta_max)) invalid(name + ": theta_min > theta_max");
        if (!(b.v_min <= b.v_max)) invalid(name + ": v_min > v_max");
        check_profile(b.d_e, H, name + " d_e", true);
        if (b.p_et_max && !(*b.p_et_max >= 0.0)) invalid(name + ": p_et_max must be >= 0");
    }
    if (net.buses[0].theta_min != 0.0 || net.buses[0].theta_max != 0.0)
        invalid("bus 1: reference bus needs theta_min = theta_max = 0");
    for (const auto& l : net.lines) {
        const std::string name = "line " + std::to_string(l.from) + "-" + std::to_string(l.to);
        if (!(l.B >= 0.0) || !(l.G >= 0.0)) invalid(name + ": B and G must be >= 0");
    }
    const GraphView eg = net.electrical_graph();
    check_edges(eg, "line");
    if (!is_connected(eg)) invalid("electrical graph is not connected");

    bool any_source = false;
    for (std::size_t i = 0; i < net.gas_nodes.size(); ++i) {
        const auto& g = net.gas_nodes[i];
        const std::string name = "gas node " + std::to_string(g.id);
        if (g.id != static_cast<int>(i) + 1) invalid(name + ": ids must be 1..N in order");
        if (!(g.psi_min >= 0.0) || !(g.psi_min <= g.psi_max)) invalid(name + ": need 0 <= psi_min <= psi_max");
        if (!std::isfinite(g.psi_max)) invalid(name + ": psi_max must be finite");
        check_profile(g.d_g, H, name + " d_g", true);
        any_source = any_source || g.is_source;
    }
    if (!any_source) invalid("gas network: at least one gas source is required");
    for (const auto& p : net.pipes) {
        const std::string name = "pipe " + std::to_string(p.from) + "-" + std::to_string(p.to);
        if (!(p.c_f > 0.0) || !std::isfinite(p.c_f)) invalid(name + ": c_f must be > 0");
        if (!(p.phi_max > 0.0) || !std::isfinite(p.phi_max)) invalid(name + ": phi_max must be > 0");
    }
    const GraphView gg = net.gas_graph();
    check_edges(gg, "pipe");
    if (!is_connected(gg)) invalid("gas graph is not connected");

    if (net.prosumers.size() != net.buses.size())
        invalid("prosumers: expected one prosumer per bus (" + std::to_string(net.buses.size()) + ")");
    std::vector<int> owners(net.gas_nodes.size(), 0);
    for (std::size_t i = 0; i < net.prosumers.size(); ++i) {
        const auto& p = net.prosumers[i];
        const std::string name = "prosumer at bus " + std::to_string(p.bus_id);
        if (p.bus_id != static_cast<int>(i) + 1) invalid(name + ": prosumers must be listed in bus order");
        if (p.gas_node_id) {
            const int g = *p.gas_node_id;
            if (g < 1 || g > static_cast<int>(net.gas_nodes.size())) invalid(name + ": gas_node_id out of range");
            ++owners[g - 1];
        }
        if (p.dg_kind != DgKind::None) {
            if (!(p.p_dg_min < p.p_dg_max)) invalid(name + ": p_dg_min must be < p_dg_max");
            if (!std::isfinite(p.p_dg_max) || !std::isfinite(p.p_dg_min)) invalid(name + ": DG bounds must be finite");
        }
        if (p.dg_kind == DgKind::NonGasFueled && !(p.q_ngu > 0.0)) invalid(name + ": q_ngu must be > 0");
        if (p.dg_kind == DgKind::GasFueled) {
            if (!(p.eta_gu > 0.0)) invalid(name + ": eta_gu must be > 0");
            if (!p.gas_node_id) invalid(name + ": gas-fueled DG needs a gas node");
        }
        if (p.storage) {
            const auto& s = *p.storage;
            auto in01 = [](double v) { return v > 0.0 && v <= 1.0; };
            if (!in01(s.eta_st) || !in01(s.eta_ch) || !in01(s.eta_dh))
                invalid(name + ": storage efficiencies must lie in (0,1]");
            if (!(s.e_cap > 0.0)) invalid(name + ": e_cap must be > 0");
            if (!(s.x_min <= s.x_init && s.x_init <= s.x_max)) invalid(name + ": need x_min <= x_init <= x_max");
            if (!(s.p_ch_max >= 0.0) || !(s.p_dh_max >= 0.0)) invalid(name + ": storage power limits must be >= 0");
            if (s.Q_st.rows() != H || s.Q_st.cols() != H) invalid(name + ": Q_st must be H x H");
            if (!s.Q_st.allFinite()) invalid(name + ": Q_st is not finite");
            const double scale = std::max(1.0, s.Q_st.cwiseAbs().maxCoeff());
            if ((s.Q_st - s.Q_st.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
                invalid(name + ": Q_st is not symmetric");
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.Q_st, Eigen::EigenvaluesOnly);
            if (es.eigenvalues().minCoeff() < -1e-10 * scale) invalid(name + ": Q_st is not positive semidefinite");
        }
    }
    for (std::size_t g = 0; g < owners.size(); ++g) {
        if (owners[g] != 1)
            invalid("gas node " + std::to_string(g + 1) + ": must be owned by exactly one prosumer (found " +
                    std::to_string(owners[g]) + ")");
    }

    const auto& mk = net.market;
    check_profile(mk.q_e, H, "market q_e", true);
    check_profile(mk.l_e, H, "market l_e", true);
    check_profile(mk.q_g, H, "market q_g", false);
    check_profile(mk.l_g, H, "market l_g", false);
    for (int h = 0; h < H; ++h)
        if (!(mk.q_g[h] > 0.0)) invalid("market q_g[" + std::to_string(h) + "] must be > 0");
    if (!(mk.sigma_e_min >= 0.0 && mk.sigma_e_max > mk.sigma_e_min))
        invalid("market: need sigma_e_max > sigma_e_min >= 0");
    if (!(mk.sigma_g_min >= 0.0 && mk.sigma_g_max >= mk.sigma_g_min))
        invalid("market: need sigma_g_max >= sigma_g_min >= 0");
}

Network truncate_horizon(const Network& net, int H) {
    if (H < 1 || H > net.horizon.H)
        throw std::invalid_argument("truncate_horizon: H must lie in [1, " + std::to_string(net.horizon.H) + "]");
    Network out = net;
    out.horizon.H = H;
    auto cut = [H](std::vector<double>& v) { v.resize(static_cast<std::size_t>(H)); };
    for (auto& b : out.buses) cut(b.d_e);
    for (auto& g : out.gas_nodes) cut(g.d_g);
    for (auto& p : out.prosumers)
        if (p.storage) p.storage->Q_st = Eigen::MatrixXd(p.storage->Q_st.topLeftCorner(H, H));
    cut(out.market.q_e);
    cut(out.market.l_e);
    cut(out.market.q_g);
    cut(out.market.l_g);
    return out;
}

}  // namespace iegds
