#pragma once

#include "iegds/conic.hpp"
#include "iegds/gasflow.hpp"
#include "iegds/netmodel.hpp"

#include <string>
#include <vector>

namespace iegds::game {

using conic::Vec;

// Electrical lines expand like pipes: line l gives labels 2l = (from, to) and 2l+1 = (to, from).
struct DirectedLine {
    int from = 0;  // 0-based bus, owner of the label
    int to = 0;
    int line = 0;
    double B = 0.0;
    double G = 0.0;
};

// Flat layout of u = (x, y, z, soc, t):
//   x_i = (p_dg, p_ch, p_dh, p_eg, d_gu, theta, v, p_et, p_line per owned label), each length H
//   y, z as in gas::VariableMap
//   soc: storage state after each step, H per storage owner
//   t: flow-penalty epigraphs, one per directed pipe (present only in penalized instances)
class IndexMap {
public:
    IndexMap() = default;
    IndexMap(const Network& net, const std::vector<DirectedLine>& lines, const gas::VariableMap& gas);

    int H() const { return H_; }
    int N() const { return N_; }
    int num_x() const { return num_x_; }
    int num_vars() const { return num_vars_; }
    int x_begin(int i) const { return x_begin_[i]; }
    int n_x(int i) const { return x_begin_[i + 1] - x_begin_[i]; }
    const std::vector<int>& owned_lines(int i) const { return owned_[i]; }

    int p_dg(int i, int h) const { return x_begin_[i] + h; }
    int p_ch(int i, int h) const { return x_begin_[i] + H_ + h; }
    int p_dh(int i, int h) const { return x_begin_[i] + 2 * H_ + h; }
    int p_eg(int i, int h) const { return x_begin_[i] + 3 * H_ + h; }
    int d_gu(int i, int h) const { return x_begin_[i] + 4 * H_ + h; }
    int theta(int i, int h) const { return x_begin_[i] + 5 * H_ + h; }
    int v(int i, int h) const { return x_begin_[i] + 6 * H_ + h; }
    int p_et(int i, int h) const { return x_begin_[i] + 7 * H_ + h; }
    int p_line(int label, int h) const { return line_begin_[label] + h; }

    int y_begin() const { return y_begin_; }
    int z_begin() const { return z_begin_; }
    int num_y() const { return z_begin_ - y_begin_; }
    int num_z() const { return soc_begin_ - z_begin_; }
    // Gas index space (y then z) to flat index.
    int gas(int k) const { return y_begin_ + k; }
    bool has_storage(int i) const { return soc_[i] >= 0; }
    int soc(int i, int h) const { return soc_[i] + h; }
    int soc_begin() const { return soc_begin_; }
    int penalty_begin() const { return penalty_begin_; }
    int penalty(int label) const { return penalty_begin_ + label; }
    void append_penalty(int count) { num_vars_ = penalty_begin_ + count; }

private:
    int H_ = 0;
    int N_ = 0;
    int num_x_ = 0;
    int y_begin_ = 0;
    int z_begin_ = 0;
    int soc_begin_ = 0;
    int penalty_begin_ = 0;
    int num_vars_ = 0;
    std::vector<int> x_begin_;
    std::vector<int> line_begin_;
    std::vector<std::vector<int>> owned_;
    std::vector<int> soc_;
};

struct RowMeta {
    int family = 0;
    int agent = -1;  // owning prosumer, -1 for aggregate rows
};

// Assembled convexified game: the potential over conv(U) as a conic program,
// with every row, bound and cone tagged by a constraint family.
struct GameInstance {
    Network net;
    gas::Artifacts gas;
    std::vector<DirectedLine> lines;
    IndexMap idx;
    conic::ConicProblem problem;
    std::vector<std::string> families;
    std::vector<RowMeta> eq_meta;
    std::vector<RowMeta> ineq_meta;
    std::vector<int> bound_family;  // per variable, -1 if free
    int cone_family = -1;
    double rho = 0.0;
    int num_penalty = 0;

    int family_id(const std::string& name) const;  // -1 if absent
};

std::vector<DirectedLine> directed_lines(const Network& net);

GameInstance assemble(const Network& net, const gas::ModelSpec& model);

// Adds rho * sum over directed pipes of ||phi_(i,j)||_inf via one epigraph per pipe and 2H rows.
// Throws std::invalid_argument for negative rho or an already penalized instance.
GameInstance penalized(const GameInstance& inst, double rho);

// Cost of agent i at the x block of u (the remaining entries are ignored).
double cost_J(const GameInstance& inst, int agent, const Vec& u);
double local_cost(const GameInstance& inst, int agent, const Vec& u);
// Exact potential of the game at the x block of u.
double potential_P(const GameInstance& inst, const Vec& u);
// Gradient of potential_P, full length of u with zeros outside x.
Vec potential_gradient(const GameInstance& inst, const Vec& u);
// Stacked partial gradients of each J_i in its own x_i block (the pseudogradient).
Vec pseudo_gradient(const GameInstance& inst, const Vec& u);

double sigma_e(const GameInstance& inst, const Vec& u, int h);
double sigma_g(const GameInstance& inst, const Vec& u, int h);

struct FamilyResidual {
    std::string family;
    int count = 0;
    double max_violation = 0.0;
};

struct ResidualReport {
    std::vector<FamilyResidual> families;
    double max_violation = 0.0;
    double integrality_gap = 0.0;
    double tolerance = 1e-6;
    bool feasible = false;  // continuous constraints within tolerance
    bool integral = false;  // additionally every z within tolerance of {0, 1}

    double violation(const std::string& family) const;  // throws std::out_of_range if unknown
};

ResidualReport feasibility_residuals(const GameInstance& inst, const Vec& u, double tol = 1e-6);

// Families that carry at least one row, bound or cone, sorted by name.
std::vector<std::string> active_families(const GameInstance& inst);

}  // namespace iegds::game
