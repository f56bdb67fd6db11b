#include "iegds/conic.hpp"

#include "conic_cones.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

namespace iegds::conic {

using detail::ConeLayout;
using detail::Scaling;

double AffineExpr::eval(const Vec& x) const {
    double v = constant;
    for (const auto& [i, c] : terms) v += c * x[i];
    return v;
}

ConicProblem::ConicProblem(int n)
    : num_vars(n),
      quadratic(n, n),
      linear(Vec::Zero(n)),
      eq_matrix(0, n),
      eq_rhs(0),
      ineq_matrix(0, n),
      ineq_rhs(0),
      lower(Vec::Constant(n, -kInf)),
      upper(Vec::Constant(n, kInf)) {}

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Unbounded: return "unbounded";
        case SolveStatus::MaxIter: return "max_iter";
    }
    return "unknown";
}

void ConicProblem::validate() const {
    const int n = num_vars;
    auto fail = [](const std::string& m) { throw std::invalid_argument("conic problem: " + m); };
    if (n < 0) fail("negative variable count");
    if (quadratic.rows() != n || quadratic.cols() != n) fail("quadratic term has wrong shape");
    if (linear.size() != n) fail("linear term has wrong length");
    if (eq_matrix.cols() != n || eq_matrix.rows() != eq_rhs.size()) fail("equality block shape mismatch");
    if (ineq_matrix.cols() != n || ineq_matrix.rows() != ineq_rhs.size()) fail("inequality block shape mismatch");
    if (lower.size() != n || upper.size() != n) fail("bound vectors have wrong length");
    for (int i = 0; i < n; ++i) {
        if (std::isnan(lower[i]) || std::isnan(upper[i]) || lower[i] > upper[i])
            fail("inconsistent bounds on variable " + std::to_string(i));
    }
    if (n > 0) {
        SpMat diff = SpMat(quadratic.transpose()) - quadratic;
        double asym = 0.0;
        for (int k = 0; k < diff.outerSize(); ++k)
            for (SpMat::InnerIterator it(diff, k); it; ++it) asym = std::max(asym, std::abs(it.value()));
        double mag = 1.0;
        for (int k = 0; k < quadratic.outerSize(); ++k)
            for (SpMat::InnerIterator it(quadratic, k); it; ++it) mag = std::max(mag, std::abs(it.value()));
        if (asym > 1e-12 * mag) fail("quadratic term is not symmetric");
    }
    auto check_expr = [&](const AffineExpr& e, std::size_t c) {
        for (const auto& [i, v] : e.terms) {
            if (i < 0 || i >= n) fail("cone " + std::to_string(c) + " references variable out of range");
            if (!std::isfinite(v)) fail("cone " + std::to_string(c) + " has a non-finite coefficient");
        }
    };
    for (std::size_t c = 0; c < cones.size(); ++c) {
        check_expr(cones[c].epigraph, c);
        if (cones[c].components.empty()) fail("cone " + std::to_string(c) + " has no components");
        for (const auto& e : cones[c].components) check_expr(e, c);
    }
}

double ConicProblem::objective(const Vec& x) const {
    double v = constant + linear.dot(x);
    if (quadratic.nonZeros() > 0) v += 0.5 * x.dot(quadratic * x);
    return v;
}

namespace {

// Where each original constraint landed in the standard form.
struct RowMap {
    std::vector<int> eq_row;
    std::vector<int> ineq_row;
    std::vector<int> lower_row;  // -1 when the bound is infinite
    std::vector<int> upper_row;
    std::vector<int> fixed_row;  // zero-cone row for lower == upper
    std::vector<int> cone_start;
    std::vector<int> cone_dim;
};

struct StandardForm {
    int n = 0;
    SpMat P;  // full symmetric
    Vec q;
    SpMat A;
    Vec b;
    ConeLayout cones;
    RowMap map;
};

StandardForm to_standard_form(const ConicProblem& pr) {
    StandardForm sf;
    const int n = pr.num_vars;
    sf.n = n;
    sf.P = pr.quadratic;
    sf.P.makeCompressed();
    sf.q = pr.linear;

    std::vector<Triplet> trip;
    std::vector<double> rhs;
    int row = 0;
    auto add_sparse_rows = [&](const SpMat& M, const Vec& r, double sign, std::vector<int>& where) {
        SpMat Mr = M;  // column major; gather via transpose for row order
        SpMat Mt = Mr.transpose();
        where.resize(M.rows());
        for (int i = 0; i < Mt.outerSize(); ++i) {
            for (SpMat::InnerIterator it(Mt, i); it; ++it) trip.emplace_back(row, it.row(), sign * it.value());
            rhs.push_back(sign * r[i]);
            where[i] = row++;
        }
    };

    RowMap& map = sf.map;
    // zero cone
    add_sparse_rows(pr.eq_matrix, pr.eq_rhs, 1.0, map.eq_row);
    map.fixed_row.assign(n, -1);
    for (int j = 0; j < n; ++j) {
        if (pr.lower[j] == pr.upper[j]) {
            trip.emplace_back(row, j, 1.0);
            rhs.push_back(pr.lower[j]);
            map.fixed_row[j] = row++;
        }
    }
    sf.cones.m_zero = row;
    // nonnegative orthant
    add_sparse_rows(pr.ineq_matrix, pr.ineq_rhs, 1.0, map.ineq_row);
    map.lower_row.assign(n, -1);
    map.upper_row.assign(n, -1);
    for (int j = 0; j < n; ++j) {
        if (pr.lower[j] == pr.upper[j]) continue;
        if (std::isfinite(pr.lower[j])) {
            trip.emplace_back(row, j, -1.0);
            rhs.push_back(-pr.lower[j]);
            map.lower_row[j] = row++;
        }
        if (std::isfinite(pr.upper[j])) {
            trip.emplace_back(row, j, 1.0);
            rhs.push_back(pr.upper[j]);
            map.upper_row[j] = row++;
        }
    }
    sf.cones.m_nonneg = row - sf.cones.m_zero;
    // second-order cones: s = affine(x) means A-row = -coef, b = constant
    auto add_expr = [&](const AffineExpr& e, double scale, double shift) {
        for (const auto& [i, c] : e.terms) trip.emplace_back(row, i, -scale * c);
        rhs.push_back(scale * e.constant + shift);
        ++row;
    };
    for (const auto& cone : pr.cones) {
        const int start = row;
        if (cone.kind == ConeKind::Norm) {
            add_expr(cone.epigraph, 1.0, 0.0);
            for (const auto& e : cone.components) add_expr(e, 1.0, 0.0);
        } else {
            // t >= ||w||^2  <=>  (t + 1, t - 1, 2w) in SOC
            add_expr(cone.epigraph, 1.0, 1.0);
            add_expr(cone.epigraph, 1.0, -1.0);
            for (const auto& e : cone.components) add_expr(e, 2.0, 0.0);
        }
        const int dim = row - start;
        sf.cones.soc_start.push_back(start);
        sf.cones.soc_dim.push_back(dim);
        map.cone_start.push_back(start);
        map.cone_dim.push_back(dim);
    }
    sf.cones.m = row;
    sf.A.resize(row, n);
    sf.A.setFromTriplets(trip.begin(), trip.end());
    sf.A.makeCompressed();
    sf.b = Eigen::Map<Vec>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    return sf;
}

double inf_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Ruiz equilibration of [P A'; A 0]; row scaling is made uniform inside each SOC block.
struct Equilibration {
    Vec D;  // variables
    Vec E;  // rows
    double c = 1.0;
};

Equilibration equilibrate(StandardForm& sf, const SolverSettings& st) {
    Equilibration eq;
    const int n = sf.n;
    const int m = sf.cones.m;
    eq.D = Vec::Ones(n);
    eq.E = Vec::Ones(m);
    if (!st.equilibrate) return eq;
    auto clamp = [](double v) {
        if (!(v > 1e-8)) return 1.0;
        return std::clamp(v, 1e-4, 1e4);
    };
    for (int it = 0; it < st.equilibrate_iters; ++it) {
        Vec cn = Vec::Zero(n);
        Vec rn = Vec::Zero(m);
        for (int k = 0; k < sf.P.outerSize(); ++k)
            for (SpMat::InnerIterator i(sf.P, k); i; ++i) cn[k] = std::max(cn[k], std::abs(i.value()));
        for (int k = 0; k < sf.A.outerSize(); ++k)
            for (SpMat::InnerIterator i(sf.A, k); i; ++i) {
                const double a = std::abs(i.value());
                cn[k] = std::max(cn[k], a);
                rn[i.row()] = std::max(rn[i.row()], a);
            }
        Vec dd(n), ee(m);
        for (int j = 0; j < n; ++j) dd[j] = 1.0 / std::sqrt(clamp(cn[j]));
        for (int i = 0; i < m; ++i) ee[i] = 1.0 / std::sqrt(clamp(rn[i]));
        for (std::size_t c = 0; c < sf.cones.soc_dim.size(); ++c) {
            const int s0 = sf.cones.soc_start[c];
            const int d = sf.cones.soc_dim[c];
            const double mean = ee.segment(s0, d).mean();
            ee.segment(s0, d).setConstant(mean);
        }
        sf.P = dd.asDiagonal() * sf.P * dd.asDiagonal();
        sf.A = ee.asDiagonal() * sf.A * dd.asDiagonal();
        eq.D.array() *= dd.array();
        eq.E.array() *= ee.array();
        if ((dd.array() - 1.0).abs().maxCoeff() < 1e-3 && (m == 0 || (ee.array() - 1.0).abs().maxCoeff() < 1e-3))
            break;
    }
    sf.q = eq.D.asDiagonal() * sf.q;
    sf.b = eq.E.asDiagonal() * sf.b;
    // cost scaling
    double pn = 0.0;
    if (n > 0) {
        Vec cn = Vec::Zero(n);
        for (int k = 0; k < sf.P.outerSize(); ++k)
            for (SpMat::InnerIterator i(sf.P, k); i; ++i) cn[k] = std::max(cn[k], std::abs(i.value()));
        pn = cn.mean();
    }
    const double cs = std::max(pn, inf_norm(sf.q));
    eq.c = 1.0 / std::clamp(cs > 1e-8 ? cs : 1.0, 1e-4, 1e4);
    sf.P *= eq.c;
    sf.q *= eq.c;
    return eq;
}

// Quasi-definite reduced KKT system. Nonnegative rows with a single nonzero
// are eliminated into the (1,1) block since they only shift its diagonal.
class KktSystem {
public:
    KktSystem(const StandardForm& sf, double reg, int refine)
        : n_(sf.n), m_(sf.cones.m), k_(sf.cones), reg_(reg), refine_(refine) {
        SpMat At = sf.A.transpose();  // columns of At are rows of A
        kept_pos_.assign(m_, -1);
        single_col_.assign(m_, -1);
        single_val_.assign(m_, 0.0);
        int pos = 0;
        for (int i = 0; i < m_; ++i) {
            const bool nonneg = i >= k_.m_zero && i < k_.m_zero + k_.m_nonneg;
            const int nnz = At.outerIndexPtr()[i + 1] - At.outerIndexPtr()[i];
            if (nonneg && nnz == 1) {
                SpMat::InnerIterator it(At, i);
                single_col_[i] = it.row();
                single_val_[i] = it.value();
            } else {
                kept_pos_[i] = pos++;
            }
        }
        dim_ = n_ + pos;

        std::vector<Triplet> t;
        for (int k = 0; k < sf.P.outerSize(); ++k)
            for (SpMat::InnerIterator it(sf.P, k); it; ++it)
                if (it.row() > k) t.emplace_back(it.row(), k, it.value());
        for (int j = 0; j < n_; ++j) t.emplace_back(j, j, 0.0);
        for (int i = 0; i < m_; ++i) {
            if (kept_pos_[i] < 0) continue;
            for (SpMat::InnerIterator it(At, i); it; ++it) t.emplace_back(n_ + kept_pos_[i], it.row(), it.value());
            t.emplace_back(n_ + kept_pos_[i], n_ + kept_pos_[i], 0.0);
        }
        for (std::size_t c = 0; c < k_.soc_dim.size(); ++c) {
            const int st = k_.soc_start[c];
            const int d = k_.soc_dim[c];
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < a; ++b) t.emplace_back(n_ + kept_pos_[st + a], n_ + kept_pos_[st + b], 0.0);
        }
        K_.resize(dim_, dim_);
        K_.setFromTriplets(t.begin(), t.end());
        K_.makeCompressed();

        pdiag_.assign(n_, 0.0);
        for (int k = 0; k < sf.P.outerSize(); ++k)
            for (SpMat::InnerIterator it(sf.P, k); it; ++it)
                if (it.row() == k) pdiag_[k] = it.value();

        xdiag_slot_.resize(n_);
        for (int j = 0; j < n_; ++j) xdiag_slot_[j] = slot(j, j);
        zdiag_slot_.assign(m_, -1);
        for (int i = 0; i < m_; ++i)
            if (kept_pos_[i] >= 0) zdiag_slot_[i] = slot(n_ + kept_pos_[i], n_ + kept_pos_[i]);
        for (std::size_t c = 0; c < k_.soc_dim.size(); ++c) {
            const int st = k_.soc_start[c];
            const int d = k_.soc_dim[c];
            std::vector<int> sl(static_cast<std::size_t>(d * d), -1);
            for (int a = 0; a < d; ++a)
                for (int b = 0; b <= a; ++b) sl[a * d + b] = slot(n_ + kept_pos_[st + a], n_ + kept_pos_[st + b]);
            soc_slots_.push_back(std::move(sl));
        }
        Ktrue_ = K_;
        ldlt_.analyzePattern(K_);
    }

    // H diagonal for the orthant, dense blocks for the cones. Returns false on factorization failure.
    bool update(const Vec& h_nonneg, const std::vector<Eigen::MatrixXd>& h_soc) {
        h_single_.assign(m_, 0.0);
        std::vector<double> xd = pdiag_;
        for (int i = 0; i < k_.m_nonneg; ++i) {
            const int r = k_.m_zero + i;
            if (single_col_[r] >= 0) {
                h_single_[r] = h_nonneg[i];
                xd[single_col_[r]] += single_val_[r] * single_val_[r] / h_nonneg[i];
            }
        }
        double* v = K_.valuePtr();
        double* vt = Ktrue_.valuePtr();
        for (int j = 0; j < n_; ++j) {
            vt[xdiag_slot_[j]] = xd[j];
            v[xdiag_slot_[j]] = xd[j] + reg_;
        }
        for (int i = 0; i < k_.m_zero; ++i) {
            vt[zdiag_slot_[i]] = 0.0;
            v[zdiag_slot_[i]] = -reg_;
        }
        for (int i = 0; i < k_.m_nonneg; ++i) {
            const int r = k_.m_zero + i;
            if (zdiag_slot_[r] < 0) continue;
            vt[zdiag_slot_[r]] = -h_nonneg[i];
            v[zdiag_slot_[r]] = -h_nonneg[i] - reg_;
        }
        for (std::size_t c = 0; c < k_.soc_dim.size(); ++c) {
            const int d = k_.soc_dim[c];
            const auto& H = h_soc[c];
            for (int a = 0; a < d; ++a)
                for (int b = 0; b <= a; ++b) {
                    const int s = soc_slots_[c][a * d + b];
                    vt[s] = -H(a, b);
                    v[s] = -H(a, b) - (a == b ? reg_ : 0.0);
                }
        }
        ldlt_.factorize(K_);
        if (ldlt_.info() != Eigen::Success) return false;
        const Vec& dvec = ldlt_.vectorD();
        return dvec.allFinite();
    }

    // Solves [P+D  A'; A  -H] [x; z] = [rx; rz] on the full row set.
    void solve(const Vec& rx, const Vec& rz, Vec& x, Vec& z) const {
        Vec rhs(dim_);
        rhs.head(n_) = rx;
        for (int i = 0; i < m_; ++i) {
            if (kept_pos_[i] >= 0) {
                rhs[n_ + kept_pos_[i]] = rz[i];
            } else {
                rhs[single_col_[i]] += single_val_[i] * rz[i] / h_single_[i];
            }
        }
        Vec sol = ldlt_.solve(rhs);
        const double tol = 1e-11 * (1.0 + inf_norm(rhs));
        for (int k = 0; k < refine_; ++k) {
            Vec r = rhs - Ktrue_.selfadjointView<Eigen::Lower>() * sol;
            if (inf_norm(r) <= tol) break;
            sol += ldlt_.solve(r);
        }
        x = sol.head(n_);
        z.resize(m_);
        for (int i = 0; i < m_; ++i) {
            if (kept_pos_[i] >= 0) {
                z[i] = sol[n_ + kept_pos_[i]];
            } else {
                z[i] = (single_val_[i] * x[single_col_[i]] - rz[i]) / h_single_[i];
            }
        }
    }

    int dim() const { return dim_; }

private:
    int slot(int row, int col) const {
        const int* outer = K_.outerIndexPtr();
        const int* inner = K_.innerIndexPtr();
        const int* b = inner + outer[col];
        const int* e = inner + outer[col + 1];
        const int* p = std::lower_bound(b, e, row);
        if (p == e || *p != row) throw std::logic_error("kkt pattern slot missing");
        return static_cast<int>(p - inner);
    }

    int n_;
    int m_;
    int dim_ = 0;
    ConeLayout k_;
    double reg_;
    int refine_;
    std::vector<int> kept_pos_;
    std::vector<int> single_col_;
    std::vector<double> single_val_;
    std::vector<double> h_single_;
    std::vector<double> pdiag_;
    std::vector<int> xdiag_slot_;
    std::vector<int> zdiag_slot_;
    std::vector<std::vector<int>> soc_slots_;
    SpMat K_;
    SpMat Ktrue_;
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

struct Metrics {
    double pres = kInf;
    double dres = kInf;
    double gap = kInf;
    double pobj = 0.0;
    double comp = 0.0;
};

}  // namespace

SolveResult solve(const ConicProblem& problem, const SolverSettings& settings) {
    const auto t0 = std::chrono::steady_clock::now();
    problem.validate();

    const StandardForm orig = to_standard_form(problem);
    StandardForm sf = orig;
    const Equilibration eq = equilibrate(sf, settings);
    const ConeLayout& K = sf.cones;
    const int n = sf.n;
    const int m = K.m;

    SolveResult res;
    auto finish = [&](SolveStatus status, const Vec& x, const Vec& s, const Vec& z, double tau, const Metrics& met,
                      int iters) {
        res.status = status;
        const double tt = (status == SolveStatus::Optimal || status == SolveStatus::MaxIter) ? tau : 1.0;
        res.x = eq.D.cwiseProduct(x) / tt;
        Vec zu = eq.E.cwiseProduct(z) / (eq.c * tt);
        (void)s;
        const RowMap& map = orig.map;
        res.eq_dual.resize(static_cast<Eigen::Index>(map.eq_row.size()));
        for (std::size_t i = 0; i < map.eq_row.size(); ++i) res.eq_dual[i] = zu[map.eq_row[i]];
        res.ineq_dual.resize(static_cast<Eigen::Index>(map.ineq_row.size()));
        for (std::size_t i = 0; i < map.ineq_row.size(); ++i) res.ineq_dual[i] = zu[map.ineq_row[i]];
        res.lower_dual = Vec::Zero(n);
        res.upper_dual = Vec::Zero(n);
        for (int j = 0; j < n; ++j) {
            if (map.lower_row[j] >= 0) res.lower_dual[j] = zu[map.lower_row[j]];
            if (map.upper_row[j] >= 0) res.upper_dual[j] = zu[map.upper_row[j]];
            if (map.fixed_row[j] >= 0) {
                const double v = zu[map.fixed_row[j]];
                (v >= 0 ? res.upper_dual[j] : res.lower_dual[j]) = std::abs(v);
            }
        }
        res.cone_duals.clear();
        for (std::size_t c = 0; c < map.cone_start.size(); ++c)
            res.cone_duals.push_back(zu.segment(map.cone_start[c], map.cone_dim[c]));
        res.objective = problem.objective(res.x);
        res.primal_residual = met.pres;
        res.dual_residual = met.dres;
        res.gap = met.gap;
        res.complementarity = met.comp;
        res.iterations = iters;
        res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return res;
    };

    const double reg = settings.static_reg;
    KktSystem kkt(sf, reg, settings.refine_steps);

    // unscaled quantities for termination
    auto metrics = [&](const Vec& x, const Vec& s, const Vec& z, double tau) {
        Metrics mt;
        Vec xu = eq.D.cwiseProduct(x) / tau;
        Vec su = s.cwiseQuotient(eq.E) / tau;
        Vec zu = eq.E.cwiseProduct(z) / (eq.c * tau);
        Vec Px = orig.P.nonZeros() ? Vec(orig.P * xu) : Vec(Vec::Zero(n));
        Vec Ax = orig.A * xu;
        Vec Atz = orig.A.transpose() * zu;
        const double xPx = xu.dot(Px);
        mt.pobj = 0.5 * xPx + orig.q.dot(xu);
        const double dobj = -0.5 * xPx - orig.b.dot(zu);
        mt.pres = inf_norm(Ax + su - orig.b) / (1.0 + std::max({inf_norm(orig.b), inf_norm(Ax), inf_norm(su)}));
        mt.dres = inf_norm(Px + Atz + orig.q) / (1.0 + std::max({inf_norm(orig.q), inf_norm(Px), inf_norm(Atz)}));
        mt.gap = std::abs(mt.pobj - dobj) / (1.0 + std::min(std::abs(mt.pobj), std::abs(dobj)));
        mt.comp = std::abs(su.tail(m - K.m_zero).dot(zu.tail(m - K.m_zero)));
        return mt;
    };

    // initial point
    Vec x(n), z(m), s(m);
    {
        Vec hn = Vec::Ones(K.m_nonneg);
        std::vector<Eigen::MatrixXd> hs;
        for (int d : K.soc_dim) hs.push_back(Eigen::MatrixXd::Identity(d, d));
        if (!kkt.update(hn, hs)) {
            return finish(SolveStatus::MaxIter, Vec::Zero(n), Vec::Zero(m), Vec::Zero(m), 1.0, Metrics{}, 0);
        }
        kkt.solve(-sf.q, sf.b, x, z);
        s = -z;
        detail::shift_into_cone(K, s);
        detail::shift_into_cone(K, z);
        for (int i = 0; i < K.m_zero; ++i) s[i] = 0.0;
    }
    double tau = 1.0;
    double kappa = 1.0;

    Scaling sc;
    Vec x1, z1, x2, z2, tmp, tmp2;
    Metrics met;
    const double degree = static_cast<double>(K.degree());
    int iter = 0;

    // best iterate so far; rounding noise can push a nearly converged run away again
    auto score = [&](const Metrics& mt) {
        return std::max({mt.pres / settings.eps_abs, mt.dres / settings.eps_abs, mt.gap / settings.eps_gap});
    };
    Vec bx, bs, bz;
    double btau = 1.0, bscore = kInf;
    Metrics bmet;
    int biter = 0;

    for (; iter <= settings.max_iter; ++iter) {
        met = metrics(x, s, z, tau);
        if (met.pres <= settings.eps_abs && met.dres <= settings.eps_abs && met.gap <= settings.eps_gap) {
            return finish(SolveStatus::Optimal, x, s, z, tau, met, iter);
        }
        const double sc_now = score(met);
        if (std::isfinite(sc_now) && sc_now < bscore) {
            bscore = sc_now;
            bx = x, bs = s, bz = z, btau = tau, bmet = met, biter = iter;
        } else if (iter - biter >= 10 && bscore < 1e3) {
            break;
        }
        // certificates of infeasibility once tau has collapsed relative to kappa
        if (tau < kappa) {
            Vec zz = eq.E.cwiseProduct(z);
            const double zn = inf_norm(zz);
            const double bz = orig.b.dot(zz);
            if (zn > 0 && bz < -settings.eps_infeasible * zn &&
                inf_norm(orig.A.transpose() * zz) <= settings.eps_infeasible * std::abs(bz)) {
                met.pres = met.dres = met.gap = kInf;
                return finish(SolveStatus::Infeasible, Vec::Zero(n), s, zz, 1.0, met, iter);
            }
            Vec xx = eq.D.cwiseProduct(x);
            Vec ss = s.cwiseQuotient(eq.E);
            const double qx = orig.q.dot(xx);
            const double Pn = orig.P.nonZeros() ? inf_norm(orig.P * xx) : 0.0;
            if (qx < -settings.eps_infeasible * inf_norm(xx) && Pn <= settings.eps_infeasible * std::abs(qx) &&
                inf_norm(orig.A * xx + ss) <= settings.eps_infeasible * std::abs(qx)) {
                met.pres = met.dres = met.gap = kInf;
                return finish(SolveStatus::Unbounded, xx, ss, Vec::Zero(m), 1.0, met, iter);
            }
        }
        if (iter == settings.max_iter) break;

        // residuals of the embedding
        Vec Px = sf.P.nonZeros() ? Vec(sf.P * x) : Vec(Vec::Zero(n));
        const Vec rx = Px + sf.A.transpose() * z + sf.q * tau;
        const Vec rz = sf.A * x + s - sf.b * tau;
        const double xPx = x.dot(Px);
        const double rtau = sf.q.dot(x) + sf.b.dot(z) + kappa + xPx / tau;
        const double mu = (s.tail(m - K.m_zero).dot(z.tail(m - K.m_zero)) + tau * kappa) / (degree + 1.0);

        if (!detail::compute_scaling(K, s, z, sc)) break;
        std::vector<Eigen::MatrixXd> hs;
        for (std::size_t c = 0; c < K.soc_dim.size(); ++c) hs.push_back(detail::soc_hessian(sc.w_bar[c], sc.eta[c]));
        if (!kkt.update(sc.w_diag.array().square().matrix(), hs)) break;

        kkt.solve(-sf.q, sf.b, x1, z1);
        const Vec v = sf.q + Px * (2.0 / tau);
        Vec Px1 = sf.P.nonZeros() ? Vec(sf.P * (x1 - x / tau)) : Vec(Vec::Zero(n));
        detail::apply_w(K, sc, z1, tmp);
        const double denom = -((x1 - x / tau).dot(Px1) + tmp.squaredNorm() + kappa / tau);

        struct Dir {
            Vec dx, dz, ds;
            double dtau = 0, dkappa = 0;
        };
        auto direction = [&](const Vec& dx_r, const Vec& dz_r, double dtau_r, const Vec& ds_r, double dkappa_r,
                             Dir& d) {
            Vec q1;
            detail::lambda_divide(K, sc.lambda, ds_r, q1);
            Vec wq;
            detail::apply_w(K, sc, q1, wq);
            kkt.solve(-dx_r, -dz_r + wq, x2, z2);
            d.dtau = (-dtau_r + dkappa_r / tau - v.dot(x2) - sf.b.dot(z2)) / denom;
            d.dx = x2 + d.dtau * x1;
            d.dz = z2 + d.dtau * z1;
            Vec wdz;
            detail::apply_w(K, sc, d.dz, wdz);
            Vec inner = q1 + wdz;
            detail::apply_w(K, sc, inner, d.ds);
            d.ds = -d.ds;
            d.dkappa = -(dkappa_r + kappa * d.dtau) / tau;
        };
        auto max_step = [&](const Dir& d, double amax) {
            double a = amax;
            a = detail::step_length(K, s, d.ds, a);
            a = detail::step_length(K, z, d.dz, a);
            if (d.dtau < 0) a = std::min(a, -tau / d.dtau);
            if (d.dkappa < 0) a = std::min(a, -kappa / d.dkappa);
            return a;
        };

        // predictor
        Vec ds_aff;
        detail::jordan_product(K, sc.lambda, sc.lambda, ds_aff);
        Dir aff;
        direction(rx, rz, rtau, ds_aff, tau * kappa, aff);
        const double alpha_aff = max_step(aff, 1.0);
        const double sigma = std::pow(1.0 - alpha_aff, 3);

        // corrector
        Vec wis, wz, corr;
        detail::apply_w_inv(K, sc, aff.ds, wis);
        detail::apply_w(K, sc, aff.dz, wz);
        detail::jordan_product(K, wis, wz, corr);
        Vec ds_c = ds_aff + corr;
        detail::add_identity(K, -sigma * mu, ds_c);
        const double dk_c = tau * kappa + aff.dtau * aff.dkappa - sigma * mu;
        Dir cd;
        direction((1.0 - sigma) * rx, (1.0 - sigma) * rz, (1.0 - sigma) * rtau, ds_c, dk_c, cd);
        double alpha = max_step(cd, 1.0 / 0.99);
        alpha = std::min(1.0, 0.99 * alpha);
        // a blown-up scaling near the boundary; keep the last finite iterate
        if (!std::isfinite(denom) || !std::isfinite(alpha) || !std::isfinite(cd.dtau) || !cd.dx.allFinite() ||
            !cd.dz.allFinite() || !cd.ds.allFinite())
            break;
        if (alpha < 1e-10) break;

        x += alpha * cd.dx;
        z += alpha * cd.dz;
        s += alpha * cd.ds;
        tau += alpha * cd.dtau;
        kappa += alpha * cd.dkappa;
        for (int i = 0; i < K.m_zero; ++i) s[i] = 0.0;
        if (!(tau > 0) || !(kappa > 0) || !x.allFinite() || !z.allFinite()) break;
    }
    met = metrics(x, s, z, tau);
    if (bx.size() && !(score(met) <= bscore)) return finish(SolveStatus::MaxIter, bx, bs, bz, btau, bmet, iter);
    return finish(SolveStatus::MaxIter, x, s, z, tau, met, iter);
}

}  // namespace iegds::conic
