#pragma once

#include "iegds/conic.hpp"
#include "iegds/game.hpp"
#include "iegds/gasflow.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <vector>

namespace iegds::recovery {

using conic::Vec;
using Mat = Eigen::MatrixXd;
using IMat = Eigen::MatrixXi;

// 1 iff phi >= 0.
int recover_delta(double phi);

// Binaries recovered from relaxed flows. Matrices are labels x H.
struct RecoveredBinaries {
    gas::ModelKind kind = gas::ModelKind::Misoc;
    int r = 0;
    IMat delta;
    IMat region;  // active PWA region m*, -1 under MISOC

    int H() const { return static_cast<int>(delta.cols()); }
    int gamma(int label, int m, int h) const { return region(label, h) == m ? 1 : 0; }
    int alpha(int label, int m, int h) const { return m >= region(label, h) ? 1 : 0; }
    int beta(int label, int m, int h) const { return m <= region(label, h) ? 1 : 0; }
};

// phi_hat is labels x H. A directed pair whose flows are both exactly zero keeps
// delta = 1 on the even (forward) label and 0 on its reverse, so the pair stays
// complementary. Throws std::logic_error if the region binaries break the linking rows.
RecoveredBinaries recover_binaries(const gas::Artifacts& art, const Mat& phi_hat);

// Max violation of -alpha + gamma <= 0, -beta + gamma <= 0, alpha + beta - gamma <= 1
// and of sum_m gamma = 1. Zero for MISOC.
int region_logic_violations(const RecoveredBinaries& bin);

// One step of the pressure system: E psi compared against theta.
struct StepSystem {
    Mat E;      // labels x nodes
    Vec theta;  // labels
};

StepSystem build_E_theta(const std::vector<gas::DirectedPipe>& labels, int num_nodes,
                         const Eigen::VectorXi& delta_h, const Vec& phi_h);
// theta~ from the active secant a^m* phi + b^m* of every label.
StepSystem build_E_theta_pwa(const std::vector<gas::DirectedPipe>& labels,
                             const std::vector<gas::PipeSegments>& segments, int num_nodes,
                             const Eigen::VectorXi& delta_h, const Eigen::VectorXi& region_h, const Vec& phi_h);

struct RecoverySettings {
    double w_tau = 1.0;
    double w_J = 1.0;
    // On trees, replace the LP point by a shifted pseudo-inverse solution when that is no worse.
    bool polish = true;
    conic::SolverSettings solver{1e-10, 1e-10, 1e-10};
};

struct StepRecovery {
    Vec psi;
    Vec tau;  // max(0, theta - E psi), zero-length for PWA
    double J = 0.0;
    double tau_max = 0.0;
    bool polished = false;
    int iterations = 0;
};

// min w_tau ||tau||_inf + w_J ||E psi - theta||_inf  s.t. E psi + tau >= theta, lo <= psi <= hi, tau >= 0.
StepRecovery recover_pressures_misoc(const StepSystem& sys, const Vec& lo, const Vec& hi,
                                     const RecoverySettings& settings = {});
// min ||E psi - theta~||_inf  s.t. lo <= psi <= hi.
StepRecovery recover_pressures_pwa(const StepSystem& sys, const Vec& lo, const Vec& hi,
                                   const RecoverySettings& settings = {});

// True when the node pairs touched by the rows of E form a spanning tree on its columns.
bool rows_form_tree(const Mat& E);

// Minimum-norm solution E^+ theta via a rank-revealing factorization (threshold 1e-10 ||E||).
// Throws std::domain_error when E does not describe a tree.
Vec particular_solution_psi0(const Mat& E, const Vec& theta);

// Shift test with j the argmax of psi0 (ties: smaller upper bound, then lower id) and k the
// argmin (ties: larger upper bound, then lower id).
bool shift_condition(const Vec& psi0, const Vec& lo, const Vec& hi);

// Constant shifts c with lo <= psi0 + c <= hi; empty when first > second.
std::pair<double, double> shift_interval(const Vec& psi0, const Vec& lo, const Vec& hi);

// nu (MISOC) or nu_psi (PWA) per label/step, plus nu^m per region for PWA.
struct AuxBlocks {
    Mat nu;
    std::vector<Mat> nu_m;
};

// psi is nodes x H, phi labels x H.
AuxBlocks rebuild_aux(const gas::Artifacts& art, const RecoveredBinaries& bin, const Mat& psi, const Mat& phi);

struct PressureRecoveryResult {
    gas::ModelKind kind = gas::ModelKind::Misoc;
    Mat psi;  // nodes x H
    Mat tau;  // labels x H, zero for PWA
    Vec J_step;
    Vec tau_step;
    double J = 0.0;
    double tau_max = 0.0;
    bool tree = false;
    std::vector<StepSystem> systems;
    std::vector<Vec> psi0;  // per step, empty when the gas graph is not a tree
    std::vector<bool> shift_ok;
    std::vector<bool> polished;
    AuxBlocks aux;

    // ||tau||_inf for MISOC, J~ for PWA.
    double violation() const { return kind == gas::ModelKind::Misoc ? tau_max : J; }
};

PressureRecoveryResult recover_pressures(const Network& net, const gas::Artifacts& art, const RecoveredBinaries& bin,
                                         const Mat& phi_hat, const RecoverySettings& settings = {});

// Per-step E, theta, psi, tau for triage.
nlohmann::json debug_dump(const PressureRecoveryResult& res);

// Flow and pressure blocks read out of a full strategy vector.
Mat flows(const game::GameInstance& inst, const Vec& u);
Mat pressures(const game::GameInstance& inst, const Vec& u);

// u~: x, g_s, phi and storage from u_hat; psi, nu and z recovered; penalty epigraphs reset to max |phi|.
Vec compose_strategy(const game::GameInstance& inst, const Vec& u_hat, const RecoveredBinaries& bin,
                     const PressureRecoveryResult& res);

}  // namespace iegds::recovery
