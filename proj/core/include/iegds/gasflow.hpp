#pragma once

#include "iegds/netmodel.hpp"

#include <string>
#include <utility>
#include <vector>

namespace iegds::gas {

enum class ModelKind { Misoc, Pwa };

struct ModelSpec {
    ModelKind kind = ModelKind::Misoc;
    int r = 0;  // PWA region count
    // Optional PWA breakpoints on [-1, 1] (scaled by each pipe's capacity). Empty means uniform.
    std::vector<double> unit_breakpoints;

    static ModelSpec misoc() { return {ModelKind::Misoc, 0, {}}; }
    static ModelSpec pwa(int r) { return {ModelKind::Pwa, r, {}}; }
    std::string name() const;  // "misoc", "pwa20", ...
};

// Each undirected pipe p yields labels 2p = (from, to) and 2p+1 = (to, from).
struct DirectedPipe {
    int from = 0;  // 0-based gas node, owner of the label
    int to = 0;
    int pipe = 0;
    int reverse = 0;
    double c_f = 1.0;
    double phi_max = 1.0;
};

std::vector<DirectedPipe> directed_pipes(const Network& net);

// Secant approximation of phi^2 / c^2 on one directed pipe.
struct PipeSegments {
    std::vector<double> breakpoints;  // r + 1 increasing values from -phi_max to phi_max
    std::vector<double> a;
    std::vector<double> b;
    double c_f = 1.0;

    int regions() const { return static_cast<int>(a.size()); }
};

PipeSegments make_segments(double phi_max, double c_f, int r, const std::vector<double>& unit_breakpoints = {});

// Region containing phi; a flow on a shared breakpoint belongs to the lower region.
// Throws std::out_of_range when |phi| exceeds capacity beyond a 1e-9 relative margin.
int select_region(const PipeSegments& seg, double phi);
double pwa_eval(const PipeSegments& seg, double phi);

double weymouth_flow(double psi_i, double psi_j, double c_f);

// Index layout of y = col(y_i) and z = col(z_i) over gas nodes in id order.
//   y_i = (psi_i, g_i, per owned label: phi, nu)                      MISOC
//   y_i = (psi_i, g_i, per owned label: phi, nu_psi, nu^1..nu^r)      PWA
//   z_i = (per owned label: delta)                                    MISOC
//   z_i = (per owned label: delta, per region: alpha^m, beta^m, gamma^m)  PWA
// every entry above is a length-H block.
class VariableMap {
public:
    VariableMap() = default;
    VariableMap(const Network& net, const std::vector<DirectedPipe>& labels, ModelKind kind, int r);

    int H() const { return H_; }
    int r() const { return r_; }
    ModelKind kind() const { return kind_; }
    int num_y() const { return num_y_; }
    int num_z() const { return num_z_; }
    int num_nodes() const { return static_cast<int>(node_y_.size()); }

    int n_y(int node) const;
    int n_z(int node) const;
    int y_begin(int node) const { return node_y_[node]; }
    int z_begin(int node) const { return node_z_[node]; }
    const std::vector<int>& owned_labels(int node) const { return owned_[node]; }

    int psi(int node, int h) const { return node_y_[node] + h; }
    int gs(int node, int h) const { return node_y_[node] + H_ + h; }
    int phi(int label, int h) const { return label_y_[label] + h; }
    int nu(int label, int h) const { return label_y_[label] + H_ + h; }  // MISOC
    int nu_psi(int label, int h) const { return label_y_[label] + H_ + h; }  // PWA
    int nu_m(int label, int m, int h) const { return label_y_[label] + (2 + m) * H_ + h; }
    int delta(int label, int h) const { return label_z_[label] + h; }
    int alpha(int label, int m, int h) const { return label_z_[label] + (1 + 3 * m) * H_ + h; }
    int beta(int label, int m, int h) const { return label_z_[label] + (2 + 3 * m) * H_ + h; }
    int gamma(int label, int m, int h) const { return label_z_[label] + (3 + 3 * m) * H_ + h; }

private:
    int H_ = 0;
    int r_ = 0;
    ModelKind kind_ = ModelKind::Misoc;
    int num_y_ = 0;
    int num_z_ = 0;
    std::vector<int> node_y_;
    std::vector<int> node_z_;
    std::vector<int> label_y_;
    std::vector<int> label_z_;
    std::vector<std::vector<int>> owned_;
};

enum class Block { CouplingEq, LocalEq, CouplingIneq, LocalIneq };
std::string to_string(Block b);

// A linear row over the gas index space: y occupies [0, num_y), z follows at num_y + k.
struct Row {
    std::string family;
    Block block = Block::LocalIneq;
    int node = 0;
    bool equality = false;  // equality: terms = rhs, otherwise terms <= rhs
    std::vector<std::pair<int, double>> terms;
    double rhs = 0.0;
};

// nu >= phi^2 / c_f^2 in the gas index space.
struct Cone {
    int node = 0;
    int label = 0;
    int h = 0;
    int nu = 0;
    int phi = 0;
    double c_f = 1.0;
};

struct Artifacts {
    ModelSpec spec;
    std::vector<DirectedPipe> labels;
    VariableMap map;
    std::vector<PipeSegments> segments;  // per label, PWA only
    std::vector<Row> rows;
    std::vector<Cone> cones;

    int z_index(int k) const { return map.num_y() + k; }
};

Artifacts build_misoc(const Network& net);
Artifacts build_pwa(const Network& net, int r, const std::vector<double>& unit_breakpoints = {});
Artifacts build(const Network& net, const ModelSpec& spec);

}  // namespace iegds::gas
