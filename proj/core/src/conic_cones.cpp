#include "conic_cones.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace iegds::conic::detail {

namespace {

double soc_det(const double* v, int n) {
    double t = 0.0;
    for (int i = 1; i < n; ++i) t += v[i] * v[i];
    return v[0] * v[0] - t;
}

double soc_tail_norm(const double* v, int n) {
    double t = 0.0;
    for (int i = 1; i < n; ++i) t += v[i] * v[i];
    return std::sqrt(t);
}

// Smallest alpha > 0 where v + alpha d leaves the second-order cone.
double soc_step(const double* v, const double* d, int n, double alpha_max) {
    double a = soc_det(d, n);
    double b = v[0] * d[0];
    for (int i = 1; i < n; ++i) b -= v[i] * d[i];
    double c = std::max(0.0, soc_det(v, n));

    double alpha = alpha_max;
    if (d[0] < 0.0) alpha = std::min(alpha, -v[0] / d[0]);

    // roots of a t^2 + 2 b t + c
    const double scale = std::max({std::abs(a), std::abs(b), c, 1e-300});
    if (std::abs(a) <= 1e-15 * scale) {
        if (b < 0.0) alpha = std::min(alpha, c / (-2.0 * b));
        return std::max(alpha, 0.0);
    }
    double disc = b * b - a * c;
    if (disc < 0.0) return std::max(alpha, 0.0);
    double q = -(b + std::copysign(std::sqrt(disc), b));
    double r1 = q / a;
    double r2 = (q != 0.0) ? c / q : std::numeric_limits<double>::infinity();
    for (double r : {r1, r2}) {
        if (r > 0.0 && std::isfinite(r)) alpha = std::min(alpha, r);
    }
    return std::max(alpha, 0.0);
}

}  // namespace

void shift_into_cone(const ConeLayout& k, Vec& v) {
    const double tiny = std::sqrt(std::numeric_limits<double>::epsilon());
    for (int i = 0; i < k.m_zero; ++i) v[i] = 0.0;
    if (k.m_nonneg > 0) {
        double mn = v.segment(k.m_zero, k.m_nonneg).minCoeff();
        if (mn < tiny) v.segment(k.m_zero, k.m_nonneg).array() += 1.0 - mn;
    }
    for (std::size_t c = 0; c < k.soc_dim.size(); ++c) {
        double* p = v.data() + k.soc_start[c];
        double alpha = p[0] - soc_tail_norm(p, k.soc_dim[c]);
        if (alpha < tiny) p[0] += 1.0 - alpha;
    }
}

bool compute_scaling(const ConeLayout& k, const Vec& s, const Vec& z, Scaling& out) {
    out.lambda.setZero(k.m);
    out.w_diag.resize(k.m_nonneg);
    for (int i = 0; i < k.m_nonneg; ++i) {
        const double si = s[k.m_zero + i];
        const double zi = z[k.m_zero + i];
        if (!(si > 0.0) || !(zi > 0.0)) return false;
        out.w_diag[i] = std::sqrt(si / zi);
        out.lambda[k.m_zero + i] = std::sqrt(si * zi);
    }
    const std::size_t nc = k.soc_dim.size();
    out.w_bar.resize(nc);
    out.eta.resize(nc);
    for (std::size_t c = 0; c < nc; ++c) {
        const int st = k.soc_start[c];
        const int n = k.soc_dim[c];
        const double ds = soc_det(s.data() + st, n);
        const double dz = soc_det(z.data() + st, n);
        if (!(ds > 0.0) || !(dz > 0.0) || s[st] <= 0.0 || z[st] <= 0.0) return false;
        const double rs = std::sqrt(ds);
        const double rz = std::sqrt(dz);
        Vec sb = s.segment(st, n) / rs;
        Vec zb = z.segment(st, n) / rz;
        const double gamma = std::sqrt(std::max(0.5 * (1.0 + sb.dot(zb)), 1e-300));
        Vec w(n);
        w[0] = (sb[0] + zb[0]) / (2.0 * gamma);
        w.tail(n - 1) = (sb.tail(n - 1) - zb.tail(n - 1)) / (2.0 * gamma);
        // renormalize so that w'Jw = 1 exactly
        double wd = w[0] * w[0] - w.tail(n - 1).squaredNorm();
        if (wd > 0.0) w /= std::sqrt(wd);
        out.w_bar[c] = w;
        out.eta[c] = std::sqrt(rs / rz);
    }
    // lambda = W z on the cones
    Vec wz;
    apply_w(k, out, z, wz);
    out.lambda.tail(k.m - k.m_zero - k.m_nonneg) = wz.tail(k.m - k.m_zero - k.m_nonneg);
    return true;
}

void apply_w(const ConeLayout& k, const Scaling& sc, const Vec& v, Vec& out) {
    out.setZero(k.m);
    for (int i = 0; i < k.m_nonneg; ++i) out[k.m_zero + i] = sc.w_diag[i] * v[k.m_zero + i];
    for (std::size_t c = 0; c < k.soc_dim.size(); ++c) {
        const int st = k.soc_start[c];
        const int n = k.soc_dim[c];
        const Vec& w = sc.w_bar[c];
        const double eta = sc.eta[c];
        const double v0 = v[st];
        double w1v1 = 0.0;
        for (int i = 1; i < n; ++i) w1v1 += w[i] * v[st + i];
        out[st] = eta * (w[0] * v0 + w1v1);
        const double f = w1v1 / (1.0 + w[0]) + v0;
        for (int i = 1; i < n; ++i) out[st + i] = eta * (v[st + i] + f * w[i]);
    }
}

void apply_w_inv(const ConeLayout& k, const Scaling& sc, const Vec& v, Vec& out) {
    out.setZero(k.m);
    for (int i = 0; i < k.m_nonneg; ++i) out[k.m_zero + i] = v[k.m_zero + i] / sc.w_diag[i];
    for (std::size_t c = 0; c < k.soc_dim.size(); ++c) {
        const int st = k.soc_start[c];
        const int n = k.soc_dim[c];
        const Vec& w = sc.w_bar[c];
        const double eta = sc.eta[c];
        const double v0 = v[st];
        double w1v1 = 0.0;
        for (int i = 1; i < n; ++i) w1v1 += w[i] * v[st + i];
        out[st] = (w[0] * v0 - w1v1) / eta;
        const double f = w1v1 / (1.0 + w[0]) - v0;
        for (int i = 1; i < n; ++i) out[st + i] = (v[st + i] + f * w[i]) / eta;
    }
}

void jordan_product(const ConeLayout& k, const Vec& u, const Vec& v, Vec& out) {
    out.setZero(k.m);
    for (int i = 0; i < k.m_nonneg; ++i) out[k.m_zero + i] = u[k.m_zero + i] * v[k.m_zero + i];
    for (std::size_t c = 0; c < k.soc_dim.size(); ++c) {
        const int st = k.soc_start[c];
        const int n = k.soc_dim[c];
        out[st] = u.segment(st, n).dot(v.segment(st, n));
        for (int i = 1; i < n; ++i) out[st + i] = u[st] * v[st + i] + v[st] * u[st + i];
    }
}

void lambda_divide(const ConeLayout& k, const Vec& lambda, const Vec& v, Vec& out) {
    out.setZero(k.m);
    for (int i = 0; i < k.m_nonneg; ++i) out[k.m_zero + i] = v[k.m_zero + i] / lambda[k.m_zero + i];
    for (std::size_t c = 0; c < k.soc_dim.size(); ++c) {
        const int st = k.soc_start[c];
        const int n = k.soc_dim[c];
        const double* l = lambda.data() + st;
        const double det = soc_det(l, n);
        double l1v1 = 0.0;
        for (int i = 1; i < n; ++i) l1v1 += l[i] * v[st + i];
        const double w0 = (l[0] * v[st] - l1v1) / det;
        out[st] = w0;
        for (int i = 1; i < n; ++i) out[st + i] = (v[st + i] - w0 * l[i]) / l[0];
    }
}

void add_identity(const ConeLayout& k, double scale, Vec& v) {
    for (int i = 0; i < k.m_nonneg; ++i) v[k.m_zero + i] += scale;
    for (std::size_t c = 0; c < k.soc_dim.size(); ++c) v[k.soc_start[c]] += scale;
}

Eigen::MatrixXd soc_hessian(const Vec& w, double eta) {
    const int n = static_cast<int>(w.size());
    Eigen::MatrixXd W(n, n);
    W(0, 0) = w[0];
    W.block(0, 1, 1, n - 1) = w.tail(n - 1).transpose();
    W.block(1, 0, n - 1, 1) = w.tail(n - 1);
    W.block(1, 1, n - 1, n - 1) = Eigen::MatrixXd::Identity(n - 1, n - 1) +
                                  w.tail(n - 1) * w.tail(n - 1).transpose() / (1.0 + w[0]);
    return eta * eta * (W * W);
}

double step_length(const ConeLayout& k, const Vec& v, const Vec& d, double alpha_max) {
    double alpha = alpha_max;
    for (int i = 0; i < k.m_nonneg; ++i) {
        const double di = d[k.m_zero + i];
        if (di < 0.0) alpha = std::min(alpha, -v[k.m_zero + i] / di);
    }
    for (std::size_t c = 0; c < k.soc_dim.size(); ++c) {
        const int st = k.soc_start[c];
        alpha = std::min(alpha, soc_step(v.data() + st, d.data() + st, k.soc_dim[c], alpha));
    }
    return std::max(alpha, 0.0);
}

}  // namespace iegds::conic::detail
