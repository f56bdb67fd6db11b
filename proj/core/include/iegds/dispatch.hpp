#pragma once

#include "iegds/conic.hpp"
#include "iegds/game.hpp"
#include "iegds/gasflow.hpp"
#include "iegds/recovery.hpp"

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace iegds::dispatch {

using conic::Vec;
using recovery::IMat;
using recovery::Mat;

enum class Status { ExactGne, EpsGne, MaxIterNoFeasible };
std::string to_string(Status s);  // exact_gne, eps_gne, max_iter_no_feasible

struct PenaltyState {
    int ell = 1;
    double rho = 0.0;
    double rho_lo = 0.0;
    double rho_hi = std::numeric_limits<double>::infinity();
    double rho_seed = 1.0;
    double growth = 2.0;
    bool finished = false;  // set when the first iterate is already feasible
};

// Records the outcome of iteration ell and moves to ell + 1.
PenaltyState update_penalty(PenaltyState s, bool violated);

struct Settings {
    int max_outer = 10;
    double rho_seed = 1.0;
    double rho_growth = 2.0;
    double violation_tol = 1e-6;
    double bracket_rel = 1e-3;  // early stop when rho_hi - rho_lo < bracket_rel * max(1, rho_hi)
    double residual_tol = 1e-6;
    double deviation_tol = 1e-9;
    conic::SolverSettings solver;
    recovery::RecoverySettings recovery;
};

struct IterationRecord {
    int ell = 0;
    double rho = 0.0;
    double rho_lo = 0.0;
    double rho_hi = 0.0;  // bracket before the update
    double violation = 0.0;
    double tau_max = 0.0;
    double J = 0.0;
    double potential = 0.0;  // P at the recovered iterate (equals P at the stage-1 point)
    bool violated = true;
    std::string stage1_status;
    int stage1_iterations = 0;
    double stage1_seconds = 0.0;
};

// Relative gas-flow deviation on one undirected pipe and step.
struct Deviation {
    int pipe = 0;
    int from = 0;  // 1-based node ids
    int to = 0;
    int h = 0;
    double phi = 0.0;
    double weymouth = 0.0;
    double delta = 0.0;
    bool undefined_reference = false;  // weymouth == 0 with a nonzero flow; delta left at 0
};

Deviation deviation(double phi, double psi_i, double psi_j, double c_f, double tol = 1e-9);
// phi labels x H, psi nodes x H; reported on the forward label of each pipe.
std::vector<Deviation> gasflow_deviation(const gas::Artifacts& art, const Mat& phi, const Mat& psi,
                                         double tol = 1e-9);
double mean_abs_deviation(const std::vector<Deviation>& d);  // over defined entries, 0 if none

struct Outcome {
    Status status = Status::MaxIterNoFeasible;
    std::string model;
    int ell_bar = 0;  // iteration of the returned iterate
    double rho_bar = 0.0;
    std::optional<double> epsilon;  // empty when the first iterate is unusable
    double potential_first = 0.0;
    double potential = 0.0;
    double violation = 0.0;  // at the returned iterate
    double mean_abs_cost = 0.0;
    double epsilon_pct = 0.0;  // 100 epsilon / mean |J_i|
    double mean_abs_dev = 0.0;
    int undefined_deviations = 0;
    double seconds = 0.0;
    bool tree = false;
    Vec u;  // returned iterate in the unpenalized layout
    IMat delta;
    std::vector<IterationRecord> trace;
    std::vector<Deviation> deviations;
    game::ResidualReport residuals;
    std::vector<std::string> warnings;

    bool success() const { return status != Status::MaxIterNoFeasible; }
};

class Stage1Failure : public std::runtime_error {
public:
    Stage1Failure(const std::string& msg, std::vector<IterationRecord> trace)
        : std::runtime_error(msg), trace_(std::move(trace)) {}
    const std::vector<IterationRecord>& trace() const { return trace_; }

private:
    std::vector<IterationRecord> trace_;
};

Outcome run_two_stage(const Network& net, const gas::ModelSpec& model, const Settings& settings = {});

// Potential minimum over the convexified set with every z fixed; empty if infeasible.
std::optional<double> fixed_binary_potential(const game::GameInstance& inst, const Vec& z,
                                             const conic::SolverSettings& solver = {});

enum class BaselineKind { FixedDirSoc, SocPen, SocScp };
std::string to_string(BaselineKind k);  // fixed_dir_soc, soc_pen, soc_scp

struct BaselineOptions {
    double pen_weight = 1.0;  // soc_pen: weight on sum of nu
    int max_rounds = 10;      // soc_scp
    double cone_tol = 1e-5;   // soc_scp: stop when every cone is tight to this
    double deviation_tol = 1e-9;
    conic::SolverSettings solver;
};

struct BaselineOutcome {
    BaselineKind kind = BaselineKind::FixedDirSoc;
    bool solved = false;
    int rounds = 0;
    double potential = 0.0;
    double objective = 0.0;  // potential plus any penalty
    double max_cone_slack = 0.0;  // max nu - phi^2/c^2
    double mean_abs_dev = 0.0;
    int undefined_deviations = 0;
    double seconds = 0.0;
    Vec u;
    std::vector<Deviation> deviations;
    std::string note;
};

// Directions are labels x H, typically the delta of a two-stage outcome. Throws
// std::invalid_argument when the shape does not match the network.
BaselineOutcome run_baseline(const Network& net, BaselineKind kind, const IMat& directions,
                             const BaselineOptions& options = {});

}  // namespace iegds::dispatch
