#include "iegds/game.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace iegds::game {

using conic::kInf;
using conic::SpMat;
using conic::Triplet;

std::vector<DirectedLine> directed_lines(const Network& net) {
    std::vector<DirectedLine> out;
    out.reserve(net.lines.size() * 2);
    for (std::size_t l = 0; l < net.lines.size(); ++l) {
        const auto& ln = net.lines[l];
        const int k = static_cast<int>(l);
        out.push_back({ln.from - 1, ln.to - 1, k, ln.B, ln.G});
        out.push_back({ln.to - 1, ln.from - 1, k, ln.B, ln.G});
    }
    return out;
}

IndexMap::IndexMap(const Network& net, const std::vector<DirectedLine>& lines, const gas::VariableMap& gas)
    : H_(net.horizon.H), N_(net.num_agents()) {
    owned_.assign(N_, {});
    for (std::size_t l = 0; l < lines.size(); ++l) owned_[lines[l].from].push_back(static_cast<int>(l));
    x_begin_.resize(N_ + 1);
    line_begin_.assign(lines.size(), -1);
    int k = 0;
    for (int i = 0; i < N_; ++i) {
        x_begin_[i] = k;
        k += 8 * H_;
        for (int l : owned_[i]) {
            line_begin_[l] = k;
            k += H_;
        }
    }
    x_begin_[N_] = k;
    num_x_ = k;
    y_begin_ = k;
    z_begin_ = y_begin_ + gas.num_y();
    soc_begin_ = z_begin_ + gas.num_z();
    k = soc_begin_;
    soc_.assign(N_, -1);
    for (int i = 0; i < N_; ++i) {
        if (net.prosumers[i].storage) {
            soc_[i] = k;
            k += H_;
        }
    }
    penalty_begin_ = k;
    num_vars_ = k;
}

int GameInstance::family_id(const std::string& name) const {
    for (std::size_t f = 0; f < families.size(); ++f)
        if (families[f] == name) return static_cast<int>(f);
    return -1;
}

namespace {

// Fixed registration order keeps family ids stable across runs.
const char* const kFamilies[] = {
    "dg_limits",          "dg_gas_conversion",    "storage_dynamics",      "storage_power_limits",
    "storage_soc_limits", "grid_import_nonneg",   "grid_trade_bounds",     "angle_limits",
    "reference_angle",    "voltage_limits",       "power_balance",         "grid_exchange",
    "line_flow",          "transmission_injection", "gas_balance",         "gas_flow_limits",
    "pressure_limits",    "source_import",        "gas_consumption_bounds", "flow_direction",
    "flow_reciprocity",   "misoc_cone",           "mccormick",             "pwa_flow_equation",
    "pwa_region_choice",  "pressure_direction",   "pwa_region_logic",      "pwa_flow_product",
    "pwa_pressure_product", "binary_relaxation",  "flow_penalty",
};

using Terms = std::vector<std::pair<int, double>>;

class Builder {
public:
    explicit Builder(GameInstance& g) : g_(g) {
        for (const char* f : kFamilies) g_.families.emplace_back(f);
    }

    int fam(const std::string& name) const {
        const int id = g_.family_id(name);
        if (id < 0) throw std::logic_error("unregistered constraint family '" + name + "'");
        return id;
    }

    void eq(const std::string& family, int agent, const Terms& terms, double rhs) {
        const int r = static_cast<int>(beq_.size());
        for (auto [c, v] : terms) eqt_.emplace_back(r, c, v);
        beq_.push_back(rhs);
        g_.eq_meta.push_back({fam(family), agent});
    }
    void le(const std::string& family, int agent, const Terms& terms, double rhs) {
        const int r = static_cast<int>(bin_.size());
        for (auto [c, v] : terms) int_.emplace_back(r, c, v);
        bin_.push_back(rhs);
        g_.ineq_meta.push_back({fam(family), agent});
    }
    void bound(const std::string& family, int var, double lo, double hi) {
        g_.problem.lower[var] = lo;
        g_.problem.upper[var] = hi;
        g_.bound_family[var] = fam(family);
    }

    void finish() {
        auto& p = g_.problem;
        const int n = p.num_vars;
        p.eq_matrix.resize(static_cast<int>(beq_.size()), n);
        p.eq_matrix.setFromTriplets(eqt_.begin(), eqt_.end());
        p.eq_rhs = Eigen::Map<const Vec>(beq_.data(), static_cast<Eigen::Index>(beq_.size()));
        p.ineq_matrix.resize(static_cast<int>(bin_.size()), n);
        p.ineq_matrix.setFromTriplets(int_.begin(), int_.end());
        p.ineq_rhs = Eigen::Map<const Vec>(bin_.data(), static_cast<Eigen::Index>(bin_.size()));
    }

private:
    GameInstance& g_;
    std::vector<Triplet> eqt_, int_;
    std::vector<double> beq_, bin_;
};

// d_g of the gas node owned by each agent (zero profile when none).
std::vector<std::vector<double>> agent_gas_demand(const Network& net) {
    const int H = net.horizon.H;
    std::vector<std::vector<double>> out(net.prosumers.size(), std::vector<double>(H, 0.0));
    const auto node = net.agent_gas_node();
    for (std::size_t i = 0; i < node.size(); ++i)
        if (node[i] >= 0) out[i] = net.gas_nodes[node[i]].d_g;
    return out;
}

void build_objective(GameInstance& g) {
    const Network& net = g.net;
    const auto& idx = g.idx;
    const int H = idx.H(), N = idx.N();
    auto& p = g.problem;
    std::vector<Triplet> qt;
    p.linear.setZero();
    p.constant = 0.0;
    const auto dg = agent_gas_demand(net);

    for (int i = 0; i < N; ++i) {
        const auto& pr = net.prosumers[i];
        if (pr.dg_kind == DgKind::NonGasFueled) {
            for (int h = 0; h < H; ++h) {
                qt.emplace_back(idx.p_dg(i, h), idx.p_dg(i, h), 2.0 * pr.q_ngu);
                p.linear[idx.p_dg(i, h)] += pr.l_ngu;
            }
        }
        if (pr.storage) {
            const auto& Q = pr.storage->Q_st;
            for (int a = 0; a < H; ++a)
                for (int b = 0; b < H; ++b) {
                    if (Q(a, b) == 0.0) continue;
                    qt.emplace_back(idx.p_ch(i, a), idx.p_ch(i, b), 2.0 * Q(a, b));
                    qt.emplace_back(idx.p_dh(i, a), idx.p_dh(i, b), 2.0 * Q(a, b));
                }
        }
    }
    const auto& mk = net.market;
    for (int h = 0; h < H; ++h) {
        // 0.5 q (sigma^2 + sum p_i^2) + l sigma
        for (int i = 0; i < N; ++i) {
            for (int j = 0; j < N; ++j) {
                const double e = mk.q_e[h] * (i == j ? 2.0 : 1.0);
                const double gq = mk.q_g[h] * (i == j ? 2.0 : 1.0);
                if (e != 0.0) qt.emplace_back(idx.p_eg(i, h), idx.p_eg(j, h), e);
                qt.emplace_back(idx.d_gu(i, h), idx.d_gu(j, h), gq);
            }
            p.linear[idx.p_eg(i, h)] += mk.l_e[h];
        }
        // gas consumption s_i = d_gu_i + d_g_i with constant d_g_i
        double C = 0.0, C2 = 0.0;
        for (int i = 0; i < N; ++i) {
            C += dg[i][h];
            C2 += dg[i][h] * dg[i][h];
        }
        for (int i = 0; i < N; ++i) p.linear[idx.d_gu(i, h)] += mk.q_g[h] * (C + dg[i][h]) + mk.l_g[h];
        p.constant += 0.5 * mk.q_g[h] * (C * C + C2) + mk.l_g[h] * C;
    }
    p.quadratic.resize(p.num_vars, p.num_vars);
    p.quadratic.setFromTriplets(qt.begin(), qt.end());
}

}  // namespace

GameInstance assemble(const Network& net, const gas::ModelSpec& model) {
    validate(net);
    GameInstance g;
    g.net = net;
    g.gas = gas::build(net, model);
    g.lines = directed_lines(net);
    g.idx = IndexMap(net, g.lines, g.gas.map);
    const auto& idx = g.idx;
    const int H = idx.H(), N = idx.N();
    g.problem = conic::ConicProblem(idx.num_vars());
    g.bound_family.assign(idx.num_vars(), -1);
    Builder b(g);
    const auto owner_of = net.gas_node_owner();

    for (int i = 0; i < N; ++i) {
        const auto& pr = net.prosumers[i];
        const auto& bus = net.buses[i];
        for (int h = 0; h < H; ++h) {
            if (pr.dg_kind != DgKind::None) b.bound("dg_limits", idx.p_dg(i, h), pr.p_dg_min, pr.p_dg_max);
            else b.bound("dg_limits", idx.p_dg(i, h), 0.0, 0.0);
            const double pch = pr.storage ? pr.storage->p_ch_max : 0.0;
            const double pdh = pr.storage ? pr.storage->p_dh_max : 0.0;
            b.bound("storage_power_limits", idx.p_ch(i, h), 0.0, pch);
            b.bound("storage_power_limits", idx.p_dh(i, h), 0.0, pdh);
            b.bound("grid_import_nonneg", idx.p_eg(i, h), 0.0, kInf);
            if (pr.dg_kind == DgKind::GasFueled) {
                b.bound("dg_gas_conversion", idx.d_gu(i, h), 0.0, kInf);
                b.eq("dg_gas_conversion", i, {{idx.d_gu(i, h), 1.0}, {idx.p_dg(i, h), -pr.eta_gu}}, 0.0);
            } else {
                b.bound("dg_gas_conversion", idx.d_gu(i, h), 0.0, 0.0);
            }
            if (i == 0) b.eq("reference_angle", i, {{idx.theta(i, h), 1.0}}, 0.0);
            else b.bound("angle_limits", idx.theta(i, h), bus.theta_min, bus.theta_max);
            b.bound("voltage_limits", idx.v(i, h), bus.v_min, bus.v_max);
            if (bus.has_transmission_tie) {
                const double cap = bus.p_et_max ? *bus.p_et_max : kInf;
                b.bound("transmission_injection", idx.p_et(i, h), -cap, cap);
            } else {
                b.bound("transmission_injection", idx.p_et(i, h), 0.0, 0.0);
            }

            b.eq("power_balance", i,
                 {{idx.p_dg(i, h), 1.0}, {idx.p_eg(i, h), 1.0}, {idx.p_dh(i, h), 1.0}, {idx.p_ch(i, h), -1.0}},
                 bus.d_e[h]);
            Terms ex{{idx.p_eg(i, h), 1.0}, {idx.p_et(i, h), -1.0}};
            for (int l : idx.owned_lines(i)) ex.emplace_back(idx.p_line(l, h), 1.0);
            b.eq("grid_exchange", i, ex, 0.0);
            for (int l : idx.owned_lines(i)) {
                const auto& d = g.lines[l];
                b.eq("line_flow", i,
                     {{idx.p_line(l, h), 1.0},
                      {idx.theta(d.from, h), -d.B},
                      {idx.theta(d.to, h), d.B},
                      {idx.v(d.from, h), d.G},
                      {idx.v(d.to, h), -d.G}},
                     0.0);
            }
        }
        if (pr.storage) {
            const auto& s = *pr.storage;
            const double k = net.horizon.T_s / s.e_cap;
            for (int h = 0; h < H; ++h) {
                b.bound("storage_soc_limits", idx.soc(i, h), s.x_min, s.x_max);
                Terms t{{idx.soc(i, h), 1.0}, {idx.p_ch(i, h), -k * s.eta_ch}, {idx.p_dh(i, h), k / s.eta_dh}};
                if (h > 0) t.emplace_back(idx.soc(i, h - 1), -s.eta_st);
                b.eq("storage_dynamics", i, t, h == 0 ? s.eta_st * s.x_init : 0.0);
            }
        }
    }

    const auto& mk = net.market;
    for (int h = 0; h < H; ++h) {
        Terms up, dn;
        for (int i = 0; i < N; ++i) {
            up.emplace_back(idx.p_eg(i, h), 1.0);
            dn.emplace_back(idx.p_eg(i, h), -1.0);
        }
        b.le("grid_trade_bounds", -1, up, mk.sigma_e_max);
        b.le("grid_trade_bounds", -1, dn, -mk.sigma_e_min);
        double D = 0.0;
        for (const auto& gn : net.gas_nodes) D += gn.d_g[h];
        Terms gup, gdn;
        for (int i = 0; i < N; ++i) {
            if (net.prosumers[i].dg_kind != DgKind::GasFueled) continue;
            gup.emplace_back(idx.d_gu(i, h), 1.0);
            gdn.emplace_back(idx.d_gu(i, h), -1.0);
        }
        b.le("gas_consumption_bounds", -1, gup, mk.sigma_g_max - D);
        b.le("gas_consumption_bounds", -1, gdn, D - mk.sigma_g_min);
    }

    // Gas network: balance, bounds and the model rows.
    const auto& gm = g.gas.map;
    for (int k = 0; k < gm.num_nodes(); ++k) {
        const auto& gn = net.gas_nodes[k];
        const int owner = owner_of[k];
        for (int h = 0; h < H; ++h) {
            b.bound("pressure_limits", idx.gas(gm.psi(k, h)), gn.psi_min, gn.psi_max);
            b.bound("source_import", idx.gas(gm.gs(k, h)), 0.0, gn.is_source ? kInf : 0.0);
            Terms t{{idx.gas(gm.gs(k, h)), 1.0}, {idx.d_gu(owner, h), -1.0}};
            for (int l : gm.owned_labels(k)) t.emplace_back(idx.gas(gm.phi(l, h)), -1.0);
            b.eq("gas_balance", owner, t, gn.d_g[h]);
        }
        for (int l : gm.owned_labels(k)) {
            const double cap = g.gas.labels[l].phi_max;
            for (int h = 0; h < H; ++h) b.bound("gas_flow_limits", idx.gas(gm.phi(l, h)), -cap, cap);
        }
    }
    for (int k = 0; k < gm.num_z(); ++k) b.bound("binary_relaxation", idx.gas(g.gas.z_index(k)), 0.0, 1.0);
    for (const auto& row : g.gas.rows) {
        Terms t;
        t.reserve(row.terms.size());
        for (auto [c, v] : row.terms) t.emplace_back(idx.gas(c), v);
        const int owner = owner_of[row.node];
        if (row.equality) b.eq(row.family, owner, t, row.rhs);
        else b.le(row.family, owner, t, row.rhs);
    }
    for (const auto& c : g.gas.cones) {
        conic::ConeConstraint cc;
        cc.kind = conic::ConeKind::SquaredNorm;
        cc.epigraph = conic::AffineExpr::var(idx.gas(c.nu));
        cc.components.push_back(conic::AffineExpr::var(idx.gas(c.phi), 1.0 / c.c_f));
        g.problem.cones.push_back(std::move(cc));
    }
    if (!g.gas.cones.empty()) g.cone_family = b.fam("misoc_cone");

    b.finish();
    build_objective(g);
    return g;
}

GameInstance penalized(const GameInstance& inst, double rho) {
    if (!(rho >= 0.0)) throw std::invalid_argument("penalty weight must be >= 0");
    if (inst.num_penalty > 0) throw std::invalid_argument("instance is already penalized");
    GameInstance g = inst;
    g.rho = rho;
    const int L = static_cast<int>(g.gas.labels.size());
    const int H = g.idx.H();
    g.num_penalty = L;
    g.idx.append_penalty(L);
    const int n = g.idx.num_vars();
    auto& p = g.problem;
    const int n_old = p.num_vars;
    p.num_vars = n;
    p.linear.conservativeResize(n);
    p.lower.conservativeResize(n);
    p.upper.conservativeResize(n);
    for (int k = n_old; k < n; ++k) {
        p.linear[k] = rho;
        p.lower[k] = 0.0;
        p.upper[k] = kInf;
    }
    p.quadratic.conservativeResize(n, n);
    p.eq_matrix.conservativeResize(p.eq_matrix.rows(), n);
    g.bound_family.resize(n, g.family_id("flow_penalty"));

    const int fam = g.family_id("flow_penalty");
    const auto owner_of = g.net.gas_node_owner();
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(p.ineq_matrix.nonZeros()) + 4u * L * H);
    for (int c = 0; c < p.ineq_matrix.outerSize(); ++c)
        for (SpMat::InnerIterator it(p.ineq_matrix, c); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    int r = static_cast<int>(p.ineq_matrix.rows());
    std::vector<double> rhs(p.ineq_rhs.data(), p.ineq_rhs.data() + p.ineq_rhs.size());
    const auto& gm = g.gas.map;
    for (int l = 0; l < L; ++l) {
        const int tv = g.idx.penalty(l);
        const int agent = owner_of[g.gas.labels[l].from];
        for (int h = 0; h < H; ++h) {
            const int phi = g.idx.gas(gm.phi(l, h));
            t.emplace_back(r, phi, 1.0);
            t.emplace_back(r, tv, -1.0);
            rhs.push_back(0.0);
            g.ineq_meta.push_back({fam, agent});
            ++r;
            t.emplace_back(r, phi, -1.0);
            t.emplace_back(r, tv, -1.0);
            rhs.push_back(0.0);
            g.ineq_meta.push_back({fam, agent});
            ++r;
        }
    }
    p.ineq_matrix.resize(r, n);
    p.ineq_matrix.setFromTriplets(t.begin(), t.end());
    p.ineq_rhs = Eigen::Map<const Vec>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    return g;
}

double sigma_e(const GameInstance& inst, const Vec& u, int h) {
    double s = 0.0;
    for (int i = 0; i < inst.idx.N(); ++i) s += u[inst.idx.p_eg(i, h)];
    return s;
}

double sigma_g(const GameInstance& inst, const Vec& u, int h) {
    double s = 0.0;
    for (int i = 0; i < inst.idx.N(); ++i) s += u[inst.idx.d_gu(i, h)];
    for (const auto& gn : inst.net.gas_nodes) s += gn.d_g[h];
    return s;
}

namespace {

double agent_gas_demand_at(const GameInstance& inst, int agent, int h) {
    const auto& g = inst.net.prosumers[agent].gas_node_id;
    return g ? inst.net.gas_nodes[*g - 1].d_g[h] : 0.0;
}

}  // namespace

double local_cost(const GameInstance& inst, int i, const Vec& u) {
    const auto& idx = inst.idx;
    const auto& pr = inst.net.prosumers[i];
    const int H = idx.H();
    double f = 0.0;
    if (pr.dg_kind == DgKind::NonGasFueled)
        for (int h = 0; h < H; ++h) {
            const double p = u[idx.p_dg(i, h)];
            f += pr.q_ngu * p * p + pr.l_ngu * p;
        }
    if (pr.storage) {
        Vec ch(H), dh(H);
        for (int h = 0; h < H; ++h) {
            ch[h] = u[idx.p_ch(i, h)];
            dh[h] = u[idx.p_dh(i, h)];
        }
        f += ch.dot(pr.storage->Q_st * ch) + dh.dot(pr.storage->Q_st * dh);
    }
    return f;
}

double cost_J(const GameInstance& inst, int i, const Vec& u) {
    const auto& idx = inst.idx;
    const auto& mk = inst.net.market;
    double J = local_cost(inst, i, u);
    for (int h = 0; h < idx.H(); ++h) {
        const double peg = u[idx.p_eg(i, h)];
        J += mk.q_e[h] * sigma_e(inst, u, h) * peg + mk.l_e[h] * peg;
        const double s = u[idx.d_gu(i, h)] + agent_gas_demand_at(inst, i, h);
        J += mk.q_g[h] * sigma_g(inst, u, h) * s + mk.l_g[h] * s;
    }
    return J;
}

double potential_P(const GameInstance& inst, const Vec& u) {
    const auto& idx = inst.idx;
    const auto& mk = inst.net.market;
    double P = 0.0;
    for (int i = 0; i < idx.N(); ++i) P += local_cost(inst, i, u);
    for (int h = 0; h < idx.H(); ++h) {
        const double se = sigma_e(inst, u, h);
        const double sg = sigma_g(inst, u, h);
        double pe2 = 0.0, s2 = 0.0;
        for (int i = 0; i < idx.N(); ++i) {
            const double p = u[idx.p_eg(i, h)];
            const double s = u[idx.d_gu(i, h)] + agent_gas_demand_at(inst, i, h);
            pe2 += p * p;
            s2 += s * s;
        }
        P += 0.5 * mk.q_e[h] * (se * se + pe2) + mk.l_e[h] * se;
        P += 0.5 * mk.q_g[h] * (sg * sg + s2) + mk.l_g[h] * sg;
    }
    return P;
}

Vec potential_gradient(const GameInstance& inst, const Vec& u) {
    const auto& p = inst.problem;
    Vec g = p.linear;
    if (p.quadratic.nonZeros() > 0) g += p.quadratic * u;
    g.tail(g.size() - inst.idx.num_x()).setZero();
    return g;
}

Vec pseudo_gradient(const GameInstance& inst, const Vec& u) {
    const auto& idx = inst.idx;
    const auto& mk = inst.net.market;
    const int H = idx.H();
    Vec F = Vec::Zero(u.size());
    for (int i = 0; i < idx.N(); ++i) {
        const auto& pr = inst.net.prosumers[i];
        if (pr.dg_kind == DgKind::NonGasFueled)
            for (int h = 0; h < H; ++h) F[idx.p_dg(i, h)] = 2.0 * pr.q_ngu * u[idx.p_dg(i, h)] + pr.l_ngu;
        if (pr.storage) {
            Vec ch(H), dh(H);
            for (int h = 0; h < H; ++h) {
                ch[h] = u[idx.p_ch(i, h)];
                dh[h] = u[idx.p_dh(i, h)];
            }
            const Vec gc = 2.0 * pr.storage->Q_st * ch;
            const Vec gd = 2.0 * pr.storage->Q_st * dh;
            for (int h = 0; h < H; ++h) {
                F[idx.p_ch(i, h)] = gc[h];
                F[idx.p_dh(i, h)] = gd[h];
            }
        }
        for (int h = 0; h < H; ++h) {
            F[idx.p_eg(i, h)] = mk.q_e[h] * (sigma_e(inst, u, h) + u[idx.p_eg(i, h)]) + mk.l_e[h];
            const double s = u[idx.d_gu(i, h)] + agent_gas_demand_at(inst, i, h);
            F[idx.d_gu(i, h)] = mk.q_g[h] * (sigma_g(inst, u, h) + s) + mk.l_g[h];
        }
    }
    return F;
}

double ResidualReport::violation(const std::string& family) const {
    for (const auto& f : families)
        if (f.family == family) return f.max_violation;
    throw std::out_of_range("no constraint family '" + family + "'");
}

ResidualReport feasibility_residuals(const GameInstance& inst, const Vec& u, double tol) {
    if (u.size() != inst.problem.num_vars)
        throw std::invalid_argument("feasibility_residuals: u has " + std::to_string(u.size()) + " entries, expected " +
                                    std::to_string(inst.problem.num_vars));
    const auto& p = inst.problem;
    const std::size_t F = inst.families.size();
    std::vector<double> worst(F, 0.0);
    std::vector<int> count(F, 0);
    auto note = [&](int f, double v) {
        ++count[f];
        worst[f] = std::max(worst[f], v);
    };
    if (p.eq_matrix.rows() > 0) {
        const Vec r = p.eq_matrix * u - p.eq_rhs;
        for (Eigen::Index k = 0; k < r.size(); ++k) note(inst.eq_meta[k].family, std::abs(r[k]));
    }
    if (p.ineq_matrix.rows() > 0) {
        const Vec r = p.ineq_matrix * u - p.ineq_rhs;
        for (Eigen::Index k = 0; k < r.size(); ++k) note(inst.ineq_meta[k].family, std::max(0.0, r[k]));
    }
    for (int k = 0; k < p.num_vars; ++k) {
        const int f = inst.bound_family[k];
        if (f < 0) continue;
        note(f, std::max({0.0, p.lower[k] - u[k], u[k] - p.upper[k]}));
    }
    for (const auto& c : p.cones) {
        double s = 0.0;
        for (const auto& e : c.components) {
            const double v = e.eval(u);
            s += v * v;
        }
        const double lhs = c.kind == conic::ConeKind::SquaredNorm ? s : std::sqrt(s);
        note(inst.cone_family, std::max(0.0, lhs - c.epigraph.eval(u)));
    }
    ResidualReport rep;
    rep.tolerance = tol;
    for (std::size_t f = 0; f < F; ++f) {
        if (count[f] == 0) continue;
        rep.families.push_back({inst.families[f], count[f], worst[f]});
        rep.max_violation = std::max(rep.max_violation, worst[f]);
    }
    const int z0 = inst.idx.z_begin();
    for (int k = 0; k < inst.idx.num_z(); ++k) {
        const double z = u[z0 + k];
        rep.integrality_gap = std::max(rep.integrality_gap, std::min(std::abs(z), std::abs(1.0 - z)));
    }
    rep.feasible = rep.max_violation <= tol;
    rep.integral = rep.feasible && rep.integrality_gap <= tol;
    return rep;
}

std::vector<std::string> active_families(const GameInstance& inst) {
    std::vector<bool> used(inst.families.size(), false);
    for (const auto& m : inst.eq_meta) used[m.family] = true;
    for (const auto& m : inst.ineq_meta) used[m.family] = true;
    for (int f : inst.bound_family)
        if (f >= 0) used[f] = true;
    if (inst.cone_family >= 0 && !inst.problem.cones.empty()) used[inst.cone_family] = true;
    std::vector<std::string> out;
    for (std::size_t f = 0; f < used.size(); ++f)
        if (used[f]) out.push_back(inst.families[f]);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace iegds::game
