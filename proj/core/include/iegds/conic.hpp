#pragma once

#include <Eigen/Sparse>
#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace iegds::conic {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Triplet = Eigen::Triplet<double, int>;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Sum of coefficient * variable plus a constant.
struct AffineExpr {
    std::vector<std::pair<int, double>> terms;
    double constant = 0.0;

    static AffineExpr var(int index, double coef = 1.0) { return AffineExpr{{{index, coef}}, 0.0}; }
    static AffineExpr value(double c) { return AffineExpr{{}, c}; }
    double eval(const Vec& x) const;
};

enum class ConeKind {
    Norm,        // epigraph >= ||components||_2
    SquaredNorm  // epigraph >= ||components||_2^2
};

struct ConeConstraint {
    ConeKind kind = ConeKind::Norm;
    AffineExpr epigraph;
    std::vector<AffineExpr> components;
};

// minimize 0.5 x'Px + q'x + c
// subject to  A_eq x = b_eq,  G x <= h,  lower <= x <= upper,  cones.
struct ConicProblem {
    int num_vars = 0;
    SpMat quadratic;  // full symmetric storage, may be empty
    Vec linear;
    double constant = 0.0;
    SpMat eq_matrix;
    Vec eq_rhs;
    SpMat ineq_matrix;
    Vec ineq_rhs;
    Vec lower;
    Vec upper;
    std::vector<ConeConstraint> cones;

    explicit ConicProblem(int n = 0);

    // Throws std::invalid_argument naming the first inconsistency.
    void validate() const;
    double objective(const Vec& x) const;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, MaxIter };

std::string to_string(SolveStatus s);

struct SolverSettings {
    double eps_abs = 1e-8;
    double eps_gap = 1e-8;
    double eps_infeasible = 1e-8;
    int max_iter = 100;
    std::uint64_t deterministic_seed = 0;  // the method is deterministic; kept for reproducibility records
    double static_reg = 1e-8;
    int refine_steps = 4;
    bool equilibrate = true;
    int equilibrate_iters = 15;
};

struct SolveResult {
    SolveStatus status = SolveStatus::MaxIter;
    Vec x;
    Vec eq_dual;      // one per equality row
    Vec ineq_dual;    // >= 0, one per inequality row
    Vec lower_dual;   // >= 0, zero where the bound is infinite
    Vec upper_dual;
    std::vector<Vec> cone_duals;  // in the lifted second-order cone coordinates
    double objective = 0.0;
    double primal_residual = 0.0;  // normalized, see solve()
    double dual_residual = 0.0;
    double gap = 0.0;
    double complementarity = 0.0;  // |s'z| in the embedded problem, unscaled
    int iterations = 0;
    double seconds = 0.0;
};

// Homogeneous self-dual interior point method. Residuals and gap are
// normalized by 1 + the magnitude of the terms they are built from.
SolveResult solve(const ConicProblem& problem, const SolverSettings& settings = {});

}  // namespace iegds::conic
