#pragma once

#include "iegds/conic.hpp"

#include <vector>

namespace iegds::conic::detail {

// Row layout of the standard form  Ax + s = b,  s in K.
// K = zero cone (m_zero rows) x nonnegative orthant (m_nonneg rows) x SOC blocks.
struct ConeLayout {
    int m_zero = 0;
    int m_nonneg = 0;
    std::vector<int> soc_start;
    std::vector<int> soc_dim;
    int m = 0;

    int degree() const { return m_nonneg + static_cast<int>(soc_dim.size()); }
};

// Nesterov-Todd scaling at (s, z). For the orthant W is diagonal; each SOC
// block is stored through its normalized scaling point and factor eta.
struct Scaling {
    Vec w_diag;                 // orthant: sqrt(s/z)
    std::vector<Vec> w_bar;     // SOC: unit hyperbolic scaling point
    std::vector<double> eta;
    Vec lambda;                 // W z = W^{-1} s, zero on the zero cone
};

void shift_into_cone(const ConeLayout& k, Vec& v);

// False if s or z left the interior (numerical breakdown).
bool compute_scaling(const ConeLayout& k, const Vec& s, const Vec& z, Scaling& out);

void apply_w(const ConeLayout& k, const Scaling& sc, const Vec& v, Vec& out);
void apply_w_inv(const ConeLayout& k, const Scaling& sc, const Vec& v, Vec& out);

// Jordan product and its inverse with respect to lambda.
void jordan_product(const ConeLayout& k, const Vec& u, const Vec& v, Vec& out);
void lambda_divide(const ConeLayout& k, const Vec& lambda, const Vec& v, Vec& out);

// Adds sigma*mu*e to v on the non-zero cones.
void add_identity(const ConeLayout& k, double scale, Vec& v);

// Dense H = W'W for one SOC block.
Eigen::MatrixXd soc_hessian(const Vec& w_bar, double eta);

// Largest alpha <= alpha_max keeping v + alpha*d in the cone (zero cone ignored).
double step_length(const ConeLayout& k, const Vec& v, const Vec& d, double alpha_max);

}  // namespace iegds::conic::detail
