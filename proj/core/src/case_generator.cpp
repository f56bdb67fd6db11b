#include "iegds/netmodel.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

namespace iegds {

using nlohmann::json;

std::uint64_t CounterRng::next_u64() {
    // splitmix64 finalizer applied to a Weyl sequence keyed by the seed
    std::uint64_t z = key_ * 0x9E3779B97F4A7C15ull + (++counter_) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double CounterRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double CounterRng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t CounterRng::below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("CounterRng::below: n must be positive");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v;
    do {
        v = next_u64();
    } while (v >= limit);
    return v % n;
}

namespace {

void read_unit(const json& j, UnitPrototype& u, const std::string& where) {
    if (!j.is_object()) throw std::invalid_argument("knobs." + where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        if (!it->is_number()) throw std::invalid_argument("knobs." + where + "." + k + ": expected a number");
        const double v = it->get<double>();
        if (k == "p_dg_min") u.p_dg_min = v;
        else if (k == "p_dg_max") u.p_dg_max = v;
        else if (k == "q_ngu") u.q_ngu = v;
        else if (k == "l_ngu") u.l_ngu = v;
        else if (k == "eta_gu") u.eta_gu = v;
        else throw std::invalid_argument("knobs." + where + ": unknown field '" + k + "'");
    }
}

json unit_json(const UnitPrototype& u) {
    return {{"p_dg_min", u.p_dg_min}, {"p_dg_max", u.p_dg_max}, {"q_ngu", u.q_ngu}, {"l_ngu", u.l_ngu},
            {"eta_gu", u.eta_gu}};
}

// Partial Fisher-Yates: k distinct entries of pool in draw order.
std::vector<int> pick(CounterRng& rng, std::vector<int> pool, int k) {
    for (int i = 0; i < k; ++i) {
        const auto j = static_cast<std::size_t>(i) + rng.below(pool.size() - static_cast<std::size_t>(i));
        std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    }
    pool.resize(static_cast<std::size_t>(k));
    std::sort(pool.begin(), pool.end());
    return pool;
}

}  // namespace

CaseKnobs CaseKnobs::from_json(const json& j) {
    CaseKnobs k;
    if (!j.is_object()) throw std::invalid_argument("knobs: expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        const json& v = *it;
        auto number = [&]() {
            if (!v.is_number()) throw std::invalid_argument("knobs." + key + ": expected a number");
            return v.get<double>();
        };
        auto count = [&]() {
            if (!v.is_number_integer()) throw std::invalid_argument("knobs." + key + ": expected an integer");
            return v.get<int>();
        };
        if (key == "gas_load_scale_min") k.gas_load_scale_min = number();
        else if (key == "gas_load_scale_max") k.gas_load_scale_max = number();
        else if (key == "num_gas_dg") k.num_gas_dg = count();
        else if (key == "num_non_gas_dg") k.num_non_gas_dg = count();
        else if (key == "num_storage") k.num_storage = count();
        else if (key == "dg_capacity_jitter") k.dg_capacity_jitter = number();
        else if (key == "gas_dg") read_unit(v, k.gas_dg, key);
        else if (key == "non_gas_dg") read_unit(v, k.non_gas_dg, key);
        else if (key == "storage") {
            if (!v.is_object()) throw std::invalid_argument("knobs.storage: expected an object");
            auto& s = k.storage;
            for (auto st = v.begin(); st != v.end(); ++st) {
                if (!st->is_number()) throw std::invalid_argument("knobs.storage." + st.key() + ": expected a number");
                const double x = st->get<double>();
                const std::string& f = st.key();
                if (f == "e_cap") s.e_cap = x;
                else if (f == "eta_st") s.eta_st = x;
                else if (f == "eta_ch") s.eta_ch = x;
                else if (f == "eta_dh") s.eta_dh = x;
                else if (f == "x_min") s.x_min = x;
                else if (f == "x_max") s.x_max = x;
                else if (f == "x_init") s.x_init = x;
                else if (f == "p_ch_max") s.p_ch_max = x;
                else if (f == "p_dh_max") s.p_dh_max = x;
                else if (f == "q_st") s.q_st = x;
                else throw std::invalid_argument("knobs.storage: unknown field '" + f + "'");
            }
        } else {
            throw std::invalid_argument("knobs: unknown field '" + key + "'");
        }
    }
    return k;
}

json CaseKnobs::to_json() const {
    const auto& s = storage;
    return {{"gas_load_scale_min", gas_load_scale_min},
            {"gas_load_scale_max", gas_load_scale_max},
            {"num_gas_dg", num_gas_dg},
            {"num_non_gas_dg", num_non_gas_dg},
            {"num_storage", num_storage},
            {"dg_capacity_jitter", dg_capacity_jitter},
            {"gas_dg", unit_json(gas_dg)},
            {"non_gas_dg", unit_json(non_gas_dg)},
            {"storage",
             {{"e_cap", s.e_cap},
              {"eta_st", s.eta_st},
              {"eta_ch", s.eta_ch},
              {"eta_dh", s.eta_dh},
              {"x_min", s.x_min},
              {"x_max", s.x_max},
              {"x_init", s.x_init},
              {"p_ch_max", s.p_ch_max},
              {"p_dh_max", s.p_dh_max},
              {"q_st", s.q_st}}}};
}

Network generate_case(const Network& base, std::uint64_t seed, const CaseKnobs& knobs) {
    validate(base);
    const int N = base.num_agents();
    const std::vector<int> gas_node = base.agent_gas_node();
    std::vector<int> gas_capable;
    for (int i = 0; i < N; ++i)
        if (gas_node[i] >= 0) gas_capable.push_back(i);

    auto fail = [](const std::string& m) { throw std::invalid_argument("generate_case: " + m); };
    if (!(knobs.gas_load_scale_min >= 0.0 && knobs.gas_load_scale_min <= knobs.gas_load_scale_max))
        fail("need 0 <= gas_load_scale_min <= gas_load_scale_max");
    if (knobs.num_gas_dg < 0 || knobs.num_non_gas_dg < 0 || knobs.num_storage < 0) fail("counts must be >= 0");
    if (knobs.num_gas_dg > static_cast<int>(gas_capable.size()))
        fail("num_gas_dg = " + std::to_string(knobs.num_gas_dg) + " exceeds the " +
             std::to_string(gas_capable.size()) + " prosumers with a gas node");
    if (knobs.num_gas_dg + knobs.num_non_gas_dg > N)
        fail("num_gas_dg + num_non_gas_dg = " + std::to_string(knobs.num_gas_dg + knobs.num_non_gas_dg) +
             " exceeds the " + std::to_string(N) + " buses");
    if (knobs.num_storage > N)
        fail("num_storage = " + std::to_string(knobs.num_storage) + " exceeds the " + std::to_string(N) + " buses");
    if (!(knobs.dg_capacity_jitter >= 0.0 && knobs.dg_capacity_jitter < 1.0))
        fail("dg_capacity_jitter must lie in [0, 1)");

    CounterRng rng(seed);
    Network out = base;
    for (auto& g : out.gas_nodes) {
        const double s = rng.uniform(knobs.gas_load_scale_min, knobs.gas_load_scale_max);
        for (auto& d : g.d_g) d *= s;
    }
    for (auto& p : out.prosumers) {
        p.dg_kind = DgKind::None;
        p.p_dg_min = 0.0;
        p.p_dg_max = 0.0;
        p.q_ngu = 0.0;
        p.l_ngu = 0.0;
        p.eta_gu = 1.0;
        p.storage.reset();
    }
    const std::vector<int> gas_dg = pick(rng, gas_capable, knobs.num_gas_dg);
    std::vector<int> rest;
    for (int i = 0; i < N; ++i)
        if (!std::binary_search(gas_dg.begin(), gas_dg.end(), i)) rest.push_back(i);
    const std::vector<int> other_dg = pick(rng, rest, knobs.num_non_gas_dg);
    std::vector<int> all(static_cast<std::size_t>(N));
    std::iota(all.begin(), all.end(), 0);
    const std::vector<int> storage = pick(rng, all, knobs.num_storage);

    const double jit = knobs.dg_capacity_jitter;
    for (int i : gas_dg) {
        auto& p = out.prosumers[static_cast<std::size_t>(i)];
        p.dg_kind = DgKind::GasFueled;
        p.p_dg_min = knobs.gas_dg.p_dg_min;
        p.p_dg_max = knobs.gas_dg.p_dg_max * rng.uniform(1.0 - jit, 1.0 + jit);
        p.eta_gu = knobs.gas_dg.eta_gu;
    }
    for (int i : other_dg) {
        auto& p = out.prosumers[static_cast<std::size_t>(i)];
        p.dg_kind = DgKind::NonGasFueled;
        p.p_dg_min = knobs.non_gas_dg.p_dg_min;
        p.p_dg_max = knobs.non_gas_dg.p_dg_max * rng.uniform(1.0 - jit, 1.0 + jit);
        p.q_ngu = knobs.non_gas_dg.q_ngu;
        p.l_ngu = knobs.non_gas_dg.l_ngu;
    }
    const int H = base.horizon.H;
    for (int i : storage) {
        const auto& sp = knobs.storage;
        Storage s;
        s.e_cap = sp.e_cap;
        s.eta_st = sp.eta_st;
        s.eta_ch = sp.eta_ch;
        s.eta_dh = sp.eta_dh;
        s.x_min = sp.x_min;
        s.x_max = sp.x_max;
        s.x_init = sp.x_init;
        s.p_ch_max = sp.p_ch_max;
        s.p_dh_max = sp.p_dh_max;
        s.Q_st = sp.q_st * Eigen::MatrixXd::Identity(H, H);
        out.prosumers[static_cast<std::size_t>(i)].storage = s;
    }
    validate(out);
    return out;
}

}  // namespace iegds
