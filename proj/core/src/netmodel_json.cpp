#include "iegds/netmodel.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <string>

namespace iegds {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& msg) { throw NetworkError(NetworkError::Kind::Schema, msg); }

// Strict object reader: every key must be consumed, required keys must exist.
class Fields {
public:
    Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) schema_error(where_ + ": expected an object");
    }

    const json& req(const std::string& key) {
        auto it = j_.find(key);
        if (it == j_.end()) schema_error(where_ + ": missing field '" + key + "'");
        used_.insert(key);
        return *it;
    }
    const json* opt(const std::string& key) {
        auto it = j_.find(key);
        if (it == j_.end()) return nullptr;
        used_.insert(key);
        return &*it;
    }
    double num(const std::string& key) { return as_number(req(key), key); }
    int integer(const std::string& key) {
        const json& v = req(key);
        if (!v.is_number_integer()) schema_error(where_ + ": field '" + key + "' must be an integer");
        return v.get<int>();
    }
    bool boolean(const std::string& key) {
        const json& v = req(key);
        if (!v.is_boolean()) schema_error(where_ + ": field '" + key + "' must be a boolean");
        return v.get<bool>();
    }
    std::string str(const std::string& key) {
        const json& v = req(key);
        if (!v.is_string()) schema_error(where_ + ": field '" + key + "' must be a string");
        return v.get<std::string>();
    }
    std::vector<double> vec(const std::string& key) {
        const json& v = req(key);
        if (!v.is_array()) schema_error(where_ + ": field '" + key + "' must be an array");
        std::vector<double> out;
        out.reserve(v.size());
        for (const auto& e : v) out.push_back(as_number(e, key));
        return out;
    }
    const json& array(const std::string& key) {
        const json& v = req(key);
        if (!v.is_array()) schema_error(where_ + ": field '" + key + "' must be an array");
        return v;
    }
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) schema_error(where_ + ": unknown field '" + it.key() + "'");
    }
    const std::string& where() const { return where_; }

private:
    double as_number(const json& v, const std::string& key) const {
        if (!v.is_number()) schema_error(where_ + ": field '" + key + "' must be a number");
        return v.get<double>();
    }

    const json& j_;
    std::string where_;
    std::set<std::string> used_;
};

Storage storage_from_json(const json& j, const std::string& where) {
    Fields f(j, where);
    Storage s;
    s.e_cap = f.num("e_cap");
    s.eta_st = f.num("eta_st");
    s.eta_ch = f.num("eta_ch");
    s.eta_dh = f.num("eta_dh");
    s.x_min = f.num("x_min");
    s.x_max = f.num("x_max");
    s.x_init = f.num("x_init");
    s.p_ch_max = f.num("p_ch_max");
    s.p_dh_max = f.num("p_dh_max");
    const json& q = f.array("Q_st");
    const auto n = static_cast<Eigen::Index>(q.size());
    s.Q_st.resize(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const json& row = q[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
            schema_error(where + ": Q_st must be a square array of arrays");
        for (Eigen::Index c = 0; c < n; ++c) {
            const json& v = row[static_cast<std::size_t>(c)];
            if (!v.is_number()) schema_error(where + ": Q_st entries must be numbers");
            s.Q_st(r, c) = v.get<double>();
        }
    }
    f.finish();
    return s;
}

json storage_to_json(const Storage& s) {
    json q = json::array();
    for (Eigen::Index r = 0; r < s.Q_st.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < s.Q_st.cols(); ++c) row.push_back(s.Q_st(r, c));
        q.push_back(row);
    }
    return json{{"e_cap", s.e_cap},   {"eta_st", s.eta_st}, {"eta_ch", s.eta_ch},     {"eta_dh", s.eta_dh},
                {"x_min", s.x_min},   {"x_max", s.x_max},   {"x_init", s.x_init},     {"p_ch_max", s.p_ch_max},
                {"p_dh_max", s.p_dh_max}, {"Q_st", q}};
}

}  // namespace

Network network_from_json(const json& j) {
    Fields top(j, "network");
    const std::string fmt = top.str("format");
    if (fmt != "iegds-v1") schema_error("network: unsupported format '" + fmt + "' (expected iegds-v1)");
    Network net;
    {
        Fields f(top.req("horizon"), "horizon");
        net.horizon.H = f.integer("H");
        net.horizon.T_s = f.num("T_s");
        f.finish();
    }
    std::size_t k = 0;
    for (const auto& b : top.array("buses")) {
        Fields f(b, "buses[" + std::to_string(k++) + "]");
        ElectricalBus bus;
        bus.id = f.integer("id");
        bus.theta_min = f.num("theta_min");
        bus.theta_max = f.num("theta_max");
        bus.v_min = f.num("v_min");
        bus.v_max = f.num("v_max");
        bus.d_e = f.vec("d_e");
        bus.has_transmission_tie = f.boolean("has_transmission_tie");
        if (const json* p = f.opt("p_et_max")) {
            if (!p->is_number()) schema_error(f.where() + ": field 'p_et_max' must be a number");
            bus.p_et_max = p->get<double>();
        }
        f.finish();
        net.buses.push_back(std::move(bus));
    }
    k = 0;
    for (const auto& l : top.array("lines")) {
        Fields f(l, "lines[" + std::to_string(k++) + "]");
        PowerLine line;
        line.from = f.integer("from");
        line.to = f.integer("to");
        line.B = f.num("B");
        line.G = f.num("G");
        f.finish();
        net.lines.push_back(line);
    }
    k = 0;
    for (const auto& g : top.array("gas_nodes")) {
        Fields f(g, "gas_nodes[" + std::to_string(k++) + "]");
        GasNode node;
        node.id = f.integer("id");
        node.psi_min = f.num("psi_min");
        node.psi_max = f.num("psi_max");
        node.d_g = f.vec("d_g");
        node.is_source = f.boolean("is_source");
        f.finish();
        net.gas_nodes.push_back(std::move(node));
    }
    k = 0;
    for (const auto& p : top.array("pipes")) {
        Fields f(p, "pipes[" + std::to_string(k++) + "]");
        GasPipe pipe;
        pipe.from = f.integer("from");
        pipe.to = f.integer("to");
        pipe.c_f = f.num("c_f");
        pipe.phi_max = f.num("phi_max");
        f.finish();
        net.pipes.push_back(pipe);
    }
    k = 0;
    for (const auto& p : top.array("prosumers")) {
        const std::string where = "prosumers[" + std::to_string(k++) + "]";
        Fields f(p, where);
        Prosumer pr;
        pr.bus_id = f.integer("bus_id");
        if (const json* g = f.opt("gas_node_id")) {
            if (!g->is_null()) {
                if (!g->is_number_integer()) schema_error(where + ": field 'gas_node_id' must be an integer or null");
                pr.gas_node_id = g->get<int>();
            }
        }
        pr.dg_kind = dg_kind_from_string(f.str("dg_kind"));
        pr.p_dg_min = f.num("p_dg_min");
        pr.p_dg_max = f.num("p_dg_max");
        pr.q_ngu = f.num("q_ngu");
        pr.l_ngu = f.num("l_ngu");
        pr.eta_gu = f.num("eta_gu");
        if (const json* s = f.opt("storage")) {
            if (!s->is_null()) pr.storage = storage_from_json(*s, where + ".storage");
        }
        f.finish();
        net.prosumers.push_back(std::move(pr));
    }
    {
        Fields f(top.req("market"), "market");
        auto& m = net.market;
        m.q_e = f.vec("q_e");
        m.l_e = f.vec("l_e");
        m.q_g = f.vec("q_g");
        m.l_g = f.vec("l_g");
        m.sigma_e_min = f.num("sigma_e_min");
        m.sigma_e_max = f.num("sigma_e_max");
        m.sigma_g_min = f.num("sigma_g_min");
        m.sigma_g_max = f.num("sigma_g_max");
        f.finish();
    }
    top.finish();
    validate(net);
    return net;
}

json network_to_json(const Network& net) {
    json j;
    j["format"] = "iegds-v1";
    j["horizon"] = {{"H", net.horizon.H}, {"T_s", net.horizon.T_s}};
    j["buses"] = json::array();
    for (const auto& b : net.buses) {
        json e = {{"id", b.id},       {"theta_min", b.theta_min}, {"theta_max", b.theta_max},
                  {"v_min", b.v_min}, {"v_max", b.v_max},         {"d_e", b.d_e},
                  {"has_transmission_tie", b.has_transmission_tie}};
        if (b.p_et_max) e["p_et_max"] = *b.p_et_max;
        j["buses"].push_back(e);
    }
    j["lines"] = json::array();
    for (const auto& l : net.lines) j["lines"].push_back({{"from", l.from}, {"to", l.to}, {"B", l.B}, {"G", l.G}});
    j["gas_nodes"] = json::array();
    for (const auto& g : net.gas_nodes)
        j["gas_nodes"].push_back({{"id", g.id},
                                  {"psi_min", g.psi_min},
                                  {"psi_max", g.psi_max},
                                  {"d_g", g.d_g},
                                  {"is_source", g.is_source}});
    j["pipes"] = json::array();
    for (const auto& p : net.pipes)
        j["pipes"].push_back({{"from", p.from}, {"to", p.to}, {"c_f", p.c_f}, {"phi_max", p.phi_max}});
    j["prosumers"] = json::array();
    for (const auto& p : net.prosumers) {
        json e = {{"bus_id", p.bus_id},     {"dg_kind", to_string(p.dg_kind)}, {"p_dg_min", p.p_dg_min},
                  {"p_dg_max", p.p_dg_max}, {"q_ngu", p.q_ngu},                {"l_ngu", p.l_ngu},
                  {"eta_gu", p.eta_gu}};
        e["gas_node_id"] = p.gas_node_id ? json(*p.gas_node_id) : json(nullptr);
        e["storage"] = p.storage ? storage_to_json(*p.storage) : json(nullptr);
        j["prosumers"].push_back(e);
    }
    const auto& m = net.market;
    j["market"] = {{"q_e", m.q_e},
                   {"l_e", m.l_e},
                   {"q_g", m.q_g},
                   {"l_g", m.l_g},
                   {"sigma_e_min", m.sigma_e_min},
                   {"sigma_e_max", m.sigma_e_max},
                   {"sigma_g_min", m.sigma_g_min},
                   {"sigma_g_max", m.sigma_g_max}};
    return j;
}

Network load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw NetworkError(NetworkError::Kind::Io, "cannot open '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw NetworkError(NetworkError::Kind::Parse, path + ": " + e.what());
    }
    return network_from_json(j);
}

void save_network(const Network& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw NetworkError(NetworkError::Kind::Io, "cannot write '" + path + "'");
    out << network_to_json(net).dump(1) << '\n';
}

}  // namespace iegds
