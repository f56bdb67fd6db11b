#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace iegds {

// Identifiers in files are 1-based and must equal the position in their array + 1.

struct Horizon {
    int H = 1;
    double T_s = 1.0;
};

struct ElectricalBus {
    int id = 0;
    double theta_min = 0.0;
    double theta_max = 0.0;
    double v_min = 1.0;
    double v_max = 1.0;
    std::vector<double> d_e;
    bool has_transmission_tie = false;
    std::optional<double> p_et_max;
};

struct PowerLine {
    int from = 0;
    int to = 0;
    double B = 0.0;
    double G = 0.0;
};

struct GasNode {
    int id = 0;
    double psi_min = 0.0;
    double psi_max = 0.0;
    std::vector<double> d_g;
    bool is_source = false;
};

struct GasPipe {
    int from = 0;
    int to = 0;
    double c_f = 1.0;
    double phi_max = 1.0;
};

enum class DgKind { None, GasFueled, NonGasFueled };

std::string to_string(DgKind k);
DgKind dg_kind_from_string(const std::string& s);

struct Storage {
    double e_cap = 1.0;
    double eta_st = 1.0;
    double eta_ch = 1.0;
    double eta_dh = 1.0;
    double x_min = 0.0;
    double x_max = 1.0;
    double x_init = 0.5;
    double p_ch_max = 0.0;
    double p_dh_max = 0.0;
    Eigen::MatrixXd Q_st;  // H x H, positive semidefinite
};

struct Prosumer {
    int bus_id = 0;
    std::optional<int> gas_node_id;
    DgKind dg_kind = DgKind::None;
    double p_dg_min = 0.0;
    double p_dg_max = 0.0;
    double q_ngu = 0.0;
    double l_ngu = 0.0;
    double eta_gu = 1.0;
    std::optional<Storage> storage;
};

struct MarketParams {
    std::vector<double> q_e;
    std::vector<double> l_e;
    std::vector<double> q_g;
    std::vector<double> l_g;
    double sigma_e_min = 0.0;
    double sigma_e_max = 0.0;
    double sigma_g_min = 0.0;
    double sigma_g_max = 0.0;
};

// 0-based undirected graph view.
struct GraphView {
    int num_nodes = 0;
    std::vector<std::pair<int, int>> edges;
};

struct Network {
    Horizon horizon;
    std::vector<ElectricalBus> buses;
    std::vector<PowerLine> lines;
    std::vector<GasNode> gas_nodes;
    std::vector<GasPipe> pipes;
    std::vector<Prosumer> prosumers;
    MarketParams market;

    int num_agents() const { return static_cast<int>(prosumers.size()); }
    GraphView electrical_graph() const;
    GraphView gas_graph() const;
    // Agent (prosumer index) owning each gas node, and the reverse map (-1 if none).
    std::vector<int> gas_node_owner() const;
    std::vector<int> agent_gas_node() const;
};

class NetworkError : public std::runtime_error {
public:
    enum class Kind { Io, Parse, Schema, Validation };
    NetworkError(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

// Checks every invariant; throws NetworkError(Validation) naming the offending element.
void validate(const Network& net);

Network network_from_json(const nlohmann::json& j);
nlohmann::json network_to_json(const Network& net);
Network load_network(const std::string& path);
void save_network(const Network& net, const std::string& path);

bool is_connected(const GraphView& g);
// Throws std::logic_error for disconnected graphs.
bool is_spanning_tree(const GraphView& g);

// Keeps the first H steps of every profile; H must not exceed the current horizon.
Network truncate_horizon(const Network& net, int H);

struct UnitPrototype {
    double p_dg_min = 0.0;
    double p_dg_max = 0.0;
    double q_ngu = 0.0;
    double l_ngu = 0.0;
    double eta_gu = 1.0;
};

struct StoragePrototype {
    double e_cap = 400.0;
    double eta_st = 0.99;
    double eta_ch = 0.95;
    double eta_dh = 0.95;
    double x_min = 0.1;
    double x_max = 0.9;
    double x_init = 0.5;
    double p_ch_max = 80.0;
    double p_dh_max = 80.0;
    double q_st = 0.002;  // Q_st = q_st * I
};

struct CaseKnobs {
    double gas_load_scale_min = 0.6;
    double gas_load_scale_max = 1.4;
    int num_gas_dg = 4;
    int num_non_gas_dg = 5;
    int num_storage = 6;
    UnitPrototype gas_dg{0.0, 150.0, 0.0, 0.0, 0.02};
    UnitPrototype non_gas_dg{0.0, 120.0, 0.004, 0.05, 1.0};
    double dg_capacity_jitter = 0.25;  // capacities drawn in [1-j, 1+j] x prototype
    StoragePrototype storage;

    static CaseKnobs from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

// Counter-based generator: the k-th draw is splitmix64(seed * golden + k).
class CounterRng {
public:
    static constexpr const char* kName = "splitmix64-counter/v1";
    explicit CounterRng(std::uint64_t seed) : key_(seed) {}
    std::uint64_t next_u64();
    double uniform();                  // [0, 1)
    double uniform(double lo, double hi);
    std::uint64_t below(std::uint64_t n);  // unbiased in [0, n)

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

Network generate_case(const Network& base, std::uint64_t seed, const CaseKnobs& knobs = {});

}  // namespace iegds
