#include "iegds/gasflow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace iegds::gas {

std::string ModelSpec::name() const {
    return kind == ModelKind::Misoc ? std::string("misoc") : "pwa" + std::to_string(r);
}

std::string to_string(Block b) {
    switch (b) {
        case Block::CouplingEq: return "h_cpl";
        case Block::LocalEq: return "h_loc";
        case Block::CouplingIneq: return "g_cpl";
        case Block::LocalIneq: return "g_loc";
    }
    return "?";
}

std::vector<DirectedPipe> directed_pipes(const Network& net) {
    std::vector<DirectedPipe> out;
    out.reserve(net.pipes.size() * 2);
    for (std::size_t p = 0; p < net.pipes.size(); ++p) {
        const auto& pp = net.pipes[p];
        const int k = static_cast<int>(p);
        out.push_back({pp.from - 1, pp.to - 1, k, 2 * k + 1, pp.c_f, pp.phi_max});
        out.push_back({pp.to - 1, pp.from - 1, k, 2 * k, pp.c_f, pp.phi_max});
    }
    return out;
}

PipeSegments make_segments(double phi_max, double c_f, int r, const std::vector<double>& unit_bp) {
    if (r < 2) throw std::invalid_argument("PWA model needs r >= 2 regions, got " + std::to_string(r));
    if (!(phi_max > 0.0)) throw std::invalid_argument("PWA model needs phi_max > 0");
    PipeSegments s;
    s.c_f = c_f;
    s.breakpoints.resize(static_cast<std::size_t>(r) + 1);
    if (unit_bp.empty()) {
        for (int m = 0; m <= r; ++m) s.breakpoints[m] = phi_max * (2 * m - r) / r;
    } else {
        if (static_cast<int>(unit_bp.size()) != r + 1)
            throw std::invalid_argument("PWA breakpoints: expected r + 1 = " + std::to_string(r + 1) + " values");
        if (unit_bp.front() != -1.0 || unit_bp.back() != 1.0)
            throw std::invalid_argument("PWA breakpoints must start at -1 and end at 1");
        for (int m = 0; m <= r; ++m) s.breakpoints[m] = phi_max * unit_bp[m];
    }
    s.breakpoints.front() = -phi_max;
    s.breakpoints.back() = phi_max;
    for (int m = 0; m < r; ++m)
        if (!(s.breakpoints[m] < s.breakpoints[m + 1]))
            throw std::invalid_argument("PWA breakpoints must be strictly increasing");
    const double c2 = c_f * c_f;
    s.a.resize(r);
    s.b.resize(r);
    for (int m = 0; m < r; ++m) {
        const double lo = s.breakpoints[m];
        const double hi = s.breakpoints[m + 1];
        s.a[m] = (hi * hi - lo * lo) / (c2 * (hi - lo));
        s.b[m] = lo * lo / c2 - s.a[m] * lo;
    }
    return s;
}

int select_region(const PipeSegments& seg, double phi) {
    const double cap = seg.breakpoints.back();
    if (!(std::abs(phi) <= cap * (1.0 + 1e-9) + 1e-12))
        throw std::out_of_range("flow " + std::to_string(phi) + " outside capacity " + std::to_string(cap));
    const int r = seg.regions();
    for (int m = 0; m < r - 1; ++m)
        if (phi <= seg.breakpoints[m + 1]) return m;
    return r - 1;
}

double pwa_eval(const PipeSegments& seg, double phi) {
    const int m = select_region(seg, phi);
    return seg.a[m] * phi + seg.b[m];
}

double weymouth_flow(double psi_i, double psi_j, double c_f) {
    const double d = psi_i - psi_j;
    if (d == 0.0) return 0.0;
    return std::copysign(c_f * std::sqrt(std::abs(d)), d);
}

VariableMap::VariableMap(const Network& net, const std::vector<DirectedPipe>& labels, ModelKind kind, int r)
    : H_(net.horizon.H), r_(kind == ModelKind::Pwa ? r : 0), kind_(kind) {
    const int nn = static_cast<int>(net.gas_nodes.size());
    owned_.assign(nn, {});
    for (std::size_t l = 0; l < labels.size(); ++l) owned_[labels[l].from].push_back(static_cast<int>(l));
    node_y_.resize(nn);
    node_z_.resize(nn);
    label_y_.assign(labels.size(), -1);
    label_z_.assign(labels.size(), -1);
    const int per_label_y = (kind == ModelKind::Misoc ? 2 : 2 + r_) * H_;
    const int per_label_z = (kind == ModelKind::Misoc ? 1 : 1 + 3 * r_) * H_;
    int y = 0;
    int z = 0;
    for (int i = 0; i < nn; ++i) {
        node_y_[i] = y;
        node_z_[i] = z;
        y += 2 * H_;
        for (int l : owned_[i]) {
            label_y_[l] = y;
            label_z_[l] = z;
            y += per_label_y;
            z += per_label_z;
        }
    }
    num_y_ = y;
    num_z_ = z;
}

int VariableMap::n_y(int node) const {
    const int deg = static_cast<int>(owned_[node].size());
    return kind_ == ModelKind::Misoc ? H_ * (2 + 2 * deg) : H_ * (2 + (2 + r_) * deg);
}

int VariableMap::n_z(int node) const {
    const int deg = static_cast<int>(owned_[node].size());
    return kind_ == ModelKind::Misoc ? H_ * deg : H_ * (1 + 3 * r_) * deg;
}

namespace {

struct Emitter {
    Artifacts& art;
    void row(const char* family, Block block, int node, bool eq, std::vector<std::pair<int, double>> terms,
             double rhs) {
        art.rows.push_back(Row{family, block, node, eq, std::move(terms), rhs});
    }
    int z(int k) const { return art.z_index(k); }
};

// Rows shared by both models: direction big-M and reciprocity.
void emit_common(const Network& net, Emitter& em) {
    const auto& map = em.art.map;
    const int H = net.horizon.H;
    for (std::size_t l = 0; l < em.art.labels.size(); ++l) {
        const auto& d = em.art.labels[l];
        const int L = static_cast<int>(l);
        for (int h = 0; h < H; ++h) {
            const int phi = map.phi(L, h);
            const int del = em.z(map.delta(L, h));
            // -phi_max (1 - delta) <= phi <= phi_max delta
            em.row("flow_direction", Block::LocalIneq, d.from, false, {{phi, 1.0}, {del, -d.phi_max}}, 0.0);
            em.row("flow_direction", Block::LocalIneq, d.from, false, {{phi, -1.0}, {del, d.phi_max}}, d.phi_max);
        }
        if (d.reverse > L) {
            for (int h = 0; h < H; ++h)
                em.row("flow_reciprocity", Block::CouplingEq, d.from, true,
                       {{map.phi(L, h), 1.0}, {map.phi(d.reverse, h), 1.0}}, 0.0);
        }
    }
}

}  // namespace

Artifacts build_misoc(const Network& net) {
    Artifacts art;
    art.spec = ModelSpec::misoc();
    art.labels = directed_pipes(net);
    art.map = VariableMap(net, art.labels, ModelKind::Misoc, 0);
    for (const auto& g : net.gas_nodes)
        if (!std::isfinite(g.psi_max)) throw std::invalid_argument("MISOC envelopes need finite psi_max");
    Emitter em{art};
    emit_common(net, em);
    const auto& map = art.map;
    const int H = net.horizon.H;
    for (std::size_t l = 0; l < art.labels.size(); ++l) {
        const auto& d = art.labels[l];
        const int L = static_cast<int>(l);
        const double lo_i = net.gas_nodes[d.from].psi_min, hi_i = net.gas_nodes[d.from].psi_max;
        const double lo_j = net.gas_nodes[d.to].psi_min, hi_j = net.gas_nodes[d.to].psi_max;
        for (int h = 0; h < H; ++h) {
            const int nu = map.nu(L, h);
            const int pi = map.psi(d.from, h);
            const int pj = map.psi(d.to, h);
            const int del = em.z(map.delta(L, h));
            art.cones.push_back(Cone{d.from, L, h, nu, map.phi(L, h), d.c_f});
            // nu >= psi_j - psi_i + 2 delta (lo_i - hi_j)
            em.row("mccormick", Block::CouplingIneq, d.from, false,
                   {{nu, -1.0}, {pi, -1.0}, {pj, 1.0}, {del, 2.0 * (lo_i - hi_j)}}, 0.0);
            // nu >= psi_i - psi_j + (2 delta - 2)(hi_i - lo_j)
            em.row("mccormick", Block::CouplingIneq, d.from, false,
                   {{nu, -1.0}, {pi, 1.0}, {pj, -1.0}, {del, 2.0 * (hi_i - lo_j)}}, 2.0 * (hi_i - lo_j));
            // nu <= psi_j - psi_i + 2 delta (hi_i - lo_j)
            em.row("mccormick", Block::CouplingIneq, d.from, false,
                   {{nu, 1.0}, {pi, 1.0}, {pj, -1.0}, {del, -2.0 * (hi_i - lo_j)}}, 0.0);
            // nu <= psi_i - psi_j + (2 delta - 2)(lo_i - hi_j)
            em.row("mccormick", Block::CouplingIneq, d.from, false,
                   {{nu, 1.0}, {pi, -1.0}, {pj, 1.0}, {del, -2.0 * (lo_i - hi_j)}}, -2.0 * (lo_i - hi_j));
        }
    }
    return art;
}

Artifacts build_pwa(const Network& net, int r, const std::vector<double>& unit_bp) {
    if (r < 2) throw std::invalid_argument("PWA model needs r >= 2 regions, got " + std::to_string(r));
    Artifacts art;
    art.spec = ModelSpec::pwa(r);
    art.spec.unit_breakpoints = unit_bp;
    art.labels = directed_pipes(net);
    art.map = VariableMap(net, art.labels, ModelKind::Pwa, r);
    for (const auto& d : art.labels) art.segments.push_back(make_segments(d.phi_max, d.c_f, r, unit_bp));
    Emitter em{art};
    emit_common(net, em);
    const auto& map = art.map;
    const int H = net.horizon.H;
    for (std::size_t l = 0; l < art.labels.size(); ++l) {
        const auto& d = art.labels[l];
        const auto& seg = art.segments[l];
        const int L = static_cast<int>(l);
        const double lo_i = net.gas_nodes[d.from].psi_min, hi_i = net.gas_nodes[d.from].psi_max;
        const double lo_j = net.gas_nodes[d.to].psi_min, hi_j = net.gas_nodes[d.to].psi_max;
        const double cap = d.phi_max;
        for (int h = 0; h < H; ++h) {
            const int phi = map.phi(L, h);
            const int pi = map.psi(d.from, h);
            const int pj = map.psi(d.to, h);
            const int del = em.z(map.delta(L, h));
            const int nps = map.nu_psi(L, h);
            const int nps_rev = map.nu_psi(d.reverse, h);

            // sum_m (a^m nu^m + b^m gamma^m) = 2 nu_psi_ij + 2 nu_psi_ji - psi_i - psi_j
            std::vector<std::pair<int, double>> flow;
            for (int m = 0; m < r; ++m) {
                flow.emplace_back(map.nu_m(L, m, h), seg.a[m]);
                flow.emplace_back(em.z(map.gamma(L, m, h)), seg.b[m]);
            }
            flow.emplace_back(nps, -2.0);
            flow.emplace_back(nps_rev, -2.0);
            flow.emplace_back(pi, 1.0);
            flow.emplace_back(pj, 1.0);
            em.row("pwa_flow_equation", Block::CouplingEq, d.from, true, std::move(flow), 0.0);

            std::vector<std::pair<int, double>> choice;
            for (int m = 0; m < r; ++m) choice.emplace_back(em.z(map.gamma(L, m, h)), 1.0);
            em.row("pwa_region_choice", Block::LocalEq, d.from, true, std::move(choice), 1.0);

            // -psi_i + psi_j <= -(lo_i - hi_j)(1 - delta)
            em.row("pressure_direction", Block::CouplingIneq, d.from, false,
                   {{pi, -1.0}, {pj, 1.0}, {del, -(lo_i - hi_j)}}, -(lo_i - hi_j));
            // -psi_i + psi_j >= -(hi_i - lo_j) delta
            em.row("pressure_direction", Block::CouplingIneq, d.from, false,
                   {{pi, 1.0}, {pj, -1.0}, {del, -(hi_i - lo_j)}}, 0.0);

            for (int m = 0; m < r; ++m) {
                const double up = seg.breakpoints[m + 1];
                const double dn = seg.breakpoints[m];
                const int al = em.z(map.alpha(L, m, h));
                const int be = em.z(map.beta(L, m, h));
                const int ga = em.z(map.gamma(L, m, h));
                const int nm = map.nu_m(L, m, h);
                // region logic
                em.row("pwa_region_logic", Block::LocalIneq, d.from, false, {{phi, 1.0}, {al, cap - up}}, cap);
                em.row("pwa_region_logic", Block::LocalIneq, d.from, false, {{phi, -1.0}, {al, -cap - up}}, -up);
                em.row("pwa_region_logic", Block::LocalIneq, d.from, false, {{phi, -1.0}, {be, cap + dn}}, cap);
                em.row("pwa_region_logic", Block::LocalIneq, d.from, false, {{phi, 1.0}, {be, -cap + dn}}, dn);
                em.row("pwa_region_logic", Block::LocalIneq, d.from, false, {{al, -1.0}, {ga, 1.0}}, 0.0);
                em.row("pwa_region_logic", Block::LocalIneq, d.from, false, {{be, -1.0}, {ga, 1.0}}, 0.0);
                em.row("pwa_region_logic", Block::LocalIneq, d.from, false, {{al, 1.0}, {be, 1.0}, {ga, -1.0}}, 1.0);
                // nu^m = gamma^m phi
                em.row("pwa_flow_product", Block::LocalIneq, d.from, false, {{nm, -1.0}, {ga, -cap}}, 0.0);
                em.row("pwa_flow_product", Block::LocalIneq, d.from, false, {{nm, 1.0}, {ga, -cap}}, 0.0);
                em.row("pwa_flow_product", Block::LocalIneq, d.from, false, {{nm, 1.0}, {phi, -1.0}, {ga, cap}}, cap);
                em.row("pwa_flow_product", Block::LocalIneq, d.from, false, {{nm, -1.0}, {phi, 1.0}, {ga, cap}}, cap);
            }
            // nu_psi = delta psi_i
            em.row("pwa_pressure_product", Block::LocalIneq, d.from, false, {{nps, -1.0}, {del, lo_i}}, 0.0);
            em.row("pwa_pressure_product", Block::LocalIneq, d.from, false, {{nps, 1.0}, {pi, -1.0}, {del, -lo_i}},
                   -lo_i);
            em.row("pwa_pressure_product", Block::LocalIneq, d.from, false, {{nps, 1.0}, {del, -hi_i}}, 0.0);
            em.row("pwa_pressure_product", Block::LocalIneq, d.from, false, {{nps, -1.0}, {pi, 1.0}, {del, hi_i}},
                   hi_i);
        }
    }
    return art;
}

Artifacts build(const Network& net, const ModelSpec& spec) {
    return spec.kind == ModelKind::Misoc ? build_misoc(net) : build_pwa(net, spec.r, spec.unit_breakpoints);
}

}  // namespace iegds::gas
