#include "gmdcascade/conic.hpp"

#include "gmdcascade/textio.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gmdcascade::conic {

double LinearExpr::eval(const std::vector<double>& x) const {
    double v = constant;
    for (const auto& [j, a] : terms) v += a * x[static_cast<std::size_t>(j)];
    return v;
}

const char* to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::unbounded: return "unbounded";
        case SolveStatus::numerical_failure: return "numerical_failure";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// Program builders

int ConicProgram::add_variable(double lower, double upper, std::string name) {
    if (lower > upper) throw std::invalid_argument("variable lower bound exceeds upper bound");
    lower_.push_back(lower);
    upper_.push_back(upper);
    objective_.push_back(0.0);
    names_.push_back(std::move(name));
    return static_cast<int>(lower_.size()) - 1;
}

void ConicProgram::set_objective_coefficient(int var, double coef) {
    if (var < 0 || var >= num_variables()) throw std::out_of_range("objective variable index out of range");
    objective_[static_cast<std::size_t>(var)] = coef;
}

void ConicProgram::check_expr(const LinearExpr& e) const {
    for (const auto& [j, a] : e.terms) {
        if (j < 0 || j >= num_variables()) throw std::out_of_range("constraint references unknown variable");
        if (!std::isfinite(a)) throw std::invalid_argument("non-finite constraint coefficient");
    }
    if (!std::isfinite(e.constant)) throw std::invalid_argument("non-finite constraint constant");
}

int ConicProgram::add_equality(LinearExpr lhs, double rhs) {
    check_expr(lhs);
    lhs.constant -= rhs;
    Constraint c;
    c.kind = ConstraintKind::equality;
    c.expr = std::move(lhs);
    constraints_.push_back(std::move(c));
    return static_cast<int>(constraints_.size()) - 1;
}

int ConicProgram::add_inequality(LinearExpr lhs, double rhs) {
    check_expr(lhs);
    lhs.constant -= rhs;
    Constraint c;
    c.kind = ConstraintKind::inequality;
    c.expr = std::move(lhs);
    constraints_.push_back(std::move(c));
    return static_cast<int>(constraints_.size()) - 1;
}

int ConicProgram::add_soc(std::vector<LinearExpr> terms, LinearExpr bound) {
    if (terms.empty()) throw std::invalid_argument("second-order cone needs at least one term");
    for (const auto& t : terms) check_expr(t);
    check_expr(bound);
    Constraint c;
    c.kind = ConstraintKind::soc;
    c.expr = std::move(bound);
    c.cone_terms = std::move(terms);
    constraints_.push_back(std::move(c));
    return static_cast<int>(constraints_.size()) - 1;
}

int ConicProgram::add_rotated_soc(LinearExpr u, LinearExpr v, std::vector<LinearExpr> terms) {
    if (terms.empty()) throw std::invalid_argument("rotated cone needs at least one term");
    for (const auto& t : terms) check_expr(t);
    check_expr(u);
    check_expr(v);
    Constraint c;
    c.kind = ConstraintKind::rotated_soc;
    c.expr = std::move(u);
    c.expr2 = std::move(v);
    c.cone_terms = std::move(terms);
    constraints_.push_back(std::move(c));
    return static_cast<int>(constraints_.size()) - 1;
}

int ConicProgram::add_bounds(int var, double lower, double upper) {
    if (var < 0 || var >= num_variables()) throw std::out_of_range("bounds reference unknown variable");
    if (lower > upper) throw std::invalid_argument("bounds: lower exceeds upper");
    Constraint c;
    c.kind = ConstraintKind::bounds;
    c.var = var;
    c.lower = lower;
    c.upper = upper;
    constraints_.push_back(std::move(c));
    return static_cast<int>(constraints_.size()) - 1;
}

double ConicProgram::objective_value(const std::vector<double>& x) const {
    double v = objective_constant_;
    for (std::size_t j = 0; j < objective_.size(); ++j) v += objective_[j] * x[j];
    return v;
}

// ---------------------------------------------------------------------------
// Auditor

namespace {

double norm2(const std::vector<LinearExpr>& terms, const std::vector<double>& x, double scale = 1.0) {
    double s = 0.0;
    for (const auto& t : terms) {
        const double v = scale * t.eval(x);
        s += v * v;
    }
    return std::sqrt(s);
}

double bound_violation(double v, double lo, double hi) {
    double r = 0.0;
    if (std::isfinite(lo)) r = std::max(r, lo - v);
    if (std::isfinite(hi)) r = std::max(r, v - hi);
    return r;
}

}  // namespace

Audit audit(const ConicProgram& prog, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != prog.num_variables()) throw std::invalid_argument("audit: wrong point size");
    Audit a;
    for (int j = 0; j < prog.num_variables(); ++j) {
        a.max_primal_residual =
            std::max(a.max_primal_residual, bound_violation(x[static_cast<std::size_t>(j)], prog.lower(j), prog.upper(j)));
    }
    for (const auto& c : prog.constraints()) {
        switch (c.kind) {
            case ConstraintKind::equality:
                a.max_primal_residual = std::max(a.max_primal_residual, std::abs(c.expr.eval(x)));
                break;
            case ConstraintKind::inequality:
                a.max_primal_residual = std::max(a.max_primal_residual, c.expr.eval(x));
                break;
            case ConstraintKind::bounds:
                a.max_primal_residual = std::max(
                    a.max_primal_residual, bound_violation(x[static_cast<std::size_t>(c.var)], c.lower, c.upper));
                break;
            case ConstraintKind::soc:
                a.max_cone_violation = std::max(a.max_cone_violation, norm2(c.cone_terms, x) - c.expr.eval(x));
                break;
            case ConstraintKind::rotated_soc: {
                const double u = c.expr.eval(x);
                const double v = c.expr2.eval(x);
                const double w = norm2(c.cone_terms, x);
                a.max_cone_violation = std::max({a.max_cone_violation, w * w - u * v, -u, -v});
                break;
            }
        }
    }
    return a;
}

// ---------------------------------------------------------------------------
// Standard form  A x + s = b,  s in {0}^z x R+^l x Q^{q1} x ...

namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor>;
using Vec = Eigen::VectorXd;

struct Row {
    std::vector<std::pair<int, double>> terms;  // coefficients of A
    double b = 0.0;
};

struct StandardForm {
    int n = 0;
    int zero = 0;
    int nonneg = 0;
    std::vector<int> soc;
    SpMat A;
    Vec b;
    Vec c;
    [[nodiscard]] int m() const { return static_cast<int>(b.size()); }
};

// s = b - A x equals the affine expression e(x) = a'x + k when A = -a, b = k.
Row as_slack(const LinearExpr& e, double scale = 1.0) {
    Row r;
    r.terms.reserve(e.terms.size());
    for (const auto& [j, a] : e.terms) r.terms.emplace_back(j, -scale * a);
    r.b = scale * e.constant;
    return r;
}

Row sum_rows(const LinearExpr& a, const LinearExpr& b, double sign) {
    LinearExpr e = a;
    for (const auto& [j, v] : b.terms) e.terms.emplace_back(j, sign * v);
    e.constant += sign * b.constant;
    return as_slack(e);
}

StandardForm to_standard_form(const ConicProgram& prog) {
    std::vector<Row> zero_rows, nonneg_rows;
    std::vector<std::vector<Row>> cones;

    auto add_bounds = [&](int j, double lo, double hi) {
        if (std::isfinite(lo) && std::isfinite(hi) && lo == hi) {
            zero_rows.push_back({{{j, 1.0}}, lo});  // s = lo - x = 0
            return;
        }
        if (std::isfinite(lo)) nonneg_rows.push_back({{{j, -1.0}}, -lo});  // x - lo >= 0
        if (std::isfinite(hi)) nonneg_rows.push_back({{{j, 1.0}}, hi});    // hi - x >= 0
    };

    for (int j = 0; j < prog.num_variables(); ++j) add_bounds(j, prog.lower(j), prog.upper(j));

    for (const auto& c : prog.constraints()) {
        switch (c.kind) {
            case ConstraintKind::equality: zero_rows.push_back(as_slack(c.expr, -1.0)); break;
            case ConstraintKind::inequality: nonneg_rows.push_back(as_slack(c.expr, -1.0)); break;
            case ConstraintKind::bounds: add_bounds(c.var, c.lower, c.upper); break;
            case ConstraintKind::soc: {
                std::vector<Row> block{as_slack(c.expr)};
                for (const auto& t : c.cone_terms) block.push_back(as_slack(t));
                cones.push_back(std::move(block));
                break;
            }
            case ConstraintKind::rotated_soc: {
                // u v >= |w|^2, u, v >= 0  <=>  |(u - v, 2w)| <= u + v
                std::vector<Row> block{sum_rows(c.expr, c.expr2, 1.0), sum_rows(c.expr, c.expr2, -1.0)};
                for (const auto& t : c.cone_terms) block.push_back(as_slack(t, 2.0));
                cones.push_back(std::move(block));
                break;
            }
        }
    }

    StandardForm sf;
    sf.n = prog.num_variables();
    sf.zero = static_cast<int>(zero_rows.size());
    sf.nonneg = static_cast<int>(nonneg_rows.size());
    std::vector<const Row*> all;
    for (const auto& r : zero_rows) all.push_back(&r);
    for (const auto& r : nonneg_rows) all.push_back(&r);
    for (const auto& blk : cones) {
        sf.soc.push_back(static_cast<int>(blk.size()));
        for (const auto& r : blk) all.push_back(&r);
    }
    const int m = static_cast<int>(all.size());
    std::vector<Eigen::Triplet<double>> trips;
    sf.b.resize(m);
    for (int i = 0; i < m; ++i) {
        sf.b[i] = all[static_cast<std::size_t>(i)]->b;
        for (const auto& [j, a] : all[static_cast<std::size_t>(i)]->terms) {
            if (a != 0.0) trips.emplace_back(i, j, a);
        }
    }
    sf.A.resize(m, sf.n);
    sf.A.setFromTriplets(trips.begin(), trips.end());
    sf.A.makeCompressed();
    sf.c.resize(sf.n);
    for (int j = 0; j < sf.n; ++j) sf.c[j] = prog.objective()[static_cast<std::size_t>(j)];
    return sf;
}

// Projection of (t, z) onto the Lorentz cone |z| <= t, in place.
void project_soc(double* v, int len) {
    double t = v[0];
    double nz = 0.0;
    for (int i = 1; i < len; ++i) nz += v[i] * v[i];
    nz = std::sqrt(nz);
    if (nz <= t) return;
    if (nz <= -t) {
        std::fill(v, v + len, 0.0);
        return;
    }
    const double alpha = 0.5 * (t + nz);
    v[0] = alpha;
    const double scale = alpha / nz;
    for (int i = 1; i < len; ++i) v[i] *= scale;
}

// Projection onto the dual cone product (zero-cone duals are free).
void project_dual_cone(Vec& y, const StandardForm& sf) {
    int off = sf.zero;
    for (int i = 0; i < sf.nonneg; ++i) y[off + i] = std::max(0.0, y[off + i]);
    off += sf.nonneg;
    for (int len : sf.soc) {
        project_soc(y.data() + off, len);
        off += len;
    }
}

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// Ruiz-equilibrated copy of the data: A~ = D A E, b~ = sb D b, c~ = sc E c.
struct Scaled {
    SpMat A;
    Vec b, c;
    Vec D, E;
    double sb = 1.0, sc = 1.0;

    [[nodiscard]] Vec unscale_x(const Vec& xs) const { return E.cwiseProduct(xs) / sb; }
};

Scaled equilibrate(const StandardForm& sf, int passes) {
    Scaled out;
    const int m = sf.m();
    const int n = sf.n;
    SpMat& A = out.A;
    Vec& D = out.D;
    Vec& E = out.E;
    A = sf.A;
    D = Vec::Ones(m);
    E = Vec::Ones(n);

    // Rows within a cone block share one scale factor so the cone is preserved.
    std::vector<int> block_of(static_cast<std::size_t>(m));
    std::vector<std::pair<int, int>> blocks;  // [start, len)
    for (int i = 0; i < sf.zero + sf.nonneg; ++i) blocks.emplace_back(i, 1);
    int off = sf.zero + sf.nonneg;
    for (int len : sf.soc) {
        blocks.emplace_back(off, len);
        off += len;
    }
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        for (int i = 0; i < blocks[k].second; ++i) block_of[static_cast<std::size_t>(blocks[k].first + i)] = static_cast<int>(k);
    }

    for (int pass = 0; pass < passes; ++pass) {
        Vec row_max = Vec::Zero(m);
        Vec col_max = Vec::Zero(n);
        for (int j = 0; j < n; ++j) {
            for (SpMat::InnerIterator it(A, j); it; ++it) {
                const double a = std::abs(it.value());
                row_max[it.row()] = std::max(row_max[it.row()], a);
                col_max[j] = std::max(col_max[j], a);
            }
        }
        std::vector<double> block_max(blocks.size(), 0.0);
        for (int i = 0; i < m; ++i) {
            auto& bm = block_max[static_cast<std::size_t>(block_of[static_cast<std::size_t>(i)])];
            bm = std::max(bm, row_max[i]);
        }
        Vec dr(m), dc(n);
        for (int i = 0; i < m; ++i) {
            const double v = block_max[static_cast<std::size_t>(block_of[static_cast<std::size_t>(i)])];
            dr[i] = v > 0.0 ? 1.0 / std::sqrt(std::clamp(v, 1e-4, 1e4)) : 1.0;
        }
        for (int j = 0; j < n; ++j) dc[j] = col_max[j] > 0.0 ? 1.0 / std::sqrt(std::clamp(col_max[j], 1e-4, 1e4)) : 1.0;
        A = dr.asDiagonal() * A * dc.asDiagonal();
        D = D.cwiseProduct(dr);
        E = E.cwiseProduct(dc);
    }
    A.makeCompressed();

    out.b = D.cwiseProduct(sf.b);
    out.c = E.cwiseProduct(sf.c);
    const double nb = out.b.norm();
    const double nc = out.c.norm();
    out.sb = nb > 1e-12 ? 1.0 / std::clamp(nb, 1e-4, 1e4) : 1.0;
    out.sc = nc > 1e-12 ? 1.0 / std::clamp(nc, 1e-4, 1e4) : 1.0;
    out.b *= out.sb;
    out.c *= out.sc;
    return out;
}

// Operator splitting on the homogeneous self-dual embedding.
class Splitting {
public:
    Splitting(const StandardForm& sf, const SolverSettings& s) : sf_(sf), set_(s) {}

    ConicSolution run();

private:
    void solve_m(const Vec& ax, const Vec& ay, Vec& zx, Vec& zy) const;

    const StandardForm& sf_;
    const SolverSettings& set_;
    SpMat A_;
    Vec b_, c_;
    Vec D_, E_;
    double sb_ = 1.0, sc_ = 1.0;
    Eigen::SimplicialLLT<SpMat> llt_;
};


// Solves [[I, A'], [-A, I]] [zx; zy] = [ax; ay].
void Splitting::solve_m(const Vec& ax, const Vec& ay, Vec& zx, Vec& zy) const {
    zx = llt_.solve(ax - A_.transpose() * ay);
    zy = ay + A_ * zx;
}

ConicSolution Splitting::run() {
    const int n = sf_.n;
    const int m = sf_.m();
    ConicSolution out;

    {
        Scaled sc = equilibrate(sf_, set_.ruiz_passes);
        A_ = std::move(sc.A);
        b_ = std::move(sc.b);
        c_ = std::move(sc.c);
        D_ = std::move(sc.D);
        E_ = std::move(sc.E);
        sb_ = sc.sb;
        sc_ = sc.sc;
    }
    SpMat K = A_.transpose() * A_;
    SpMat I(n, n);
    I.setIdentity();
    K += I;
    llt_.compute(K);
    if (llt_.info() != Eigen::Success) return out;

    // g = M^{-1} h with h = (c, b)
    Vec gx, gy;
    solve_m(c_, b_, gx, gy);
    const double hg = c_.dot(gx) + b_.dot(gy);
    const double denom = 1.0 + hg;

    Vec ux = Vec::Zero(n), uy = Vec::Zero(m);
    Vec vx = Vec::Zero(n), vy = Vec::Zero(m);
    double ut = 1.0, vt = 1.0;

    const double alpha = set_.relaxation;
    const double tol = set_.tol;
    // Optimality criteria run tighter than tol so the objective lands within tol in absolute terms.
    const double otol = 0.1 * tol;

    // Unscaled data norms for the relative criteria.
    const double nc = inf_norm(sf_.c);

    Vec px, py, tx, ty;
    for (int it = 1; it <= set_.max_iterations; ++it) {
        // Linear step: (I + Q) u~ = u + v
        const Vec wx = ux + vx;
        const Vec wy = uy + vy;
        const double wt = ut + vt;
        solve_m(wx, wy, px, py);
        const double tt = (wt + c_.dot(px) + b_.dot(py)) / denom;
        tx = px - gx * tt;
        ty = py - gy * tt;

        // Over-relaxation and projection onto R^n x K* x R+.
        const Vec rx = alpha * tx + (1.0 - alpha) * ux;
        const Vec ry = alpha * ty + (1.0 - alpha) * uy;
        const double rt = alpha * tt + (1.0 - alpha) * ut;

        Vec nx = rx - vx;
        Vec ny = ry - vy;
        double nt = std::max(0.0, rt - vt);
        project_dual_cone(ny, sf_);

        vx = vx - rx + nx;
        vy = vy - ry + ny;
        vt = vt - rt + nt;
        ux = std::move(nx);
        uy = std::move(ny);
        ut = nt;

        if (it % set_.check_interval != 0 && it != set_.max_iterations) continue;
        out.iterations = it;

        // Directions in unscaled space.
        const Vec xd = E_.cwiseProduct(ux) / sb_;
        const Vec yd = D_.cwiseProduct(uy) / sc_;
        const Vec sd = vy.cwiseQuotient(D_) / sb_;

        if (ut > 1e-12) {
            const Vec x = xd / ut;
            const Vec y = yd / ut;
            const Vec s = sd / ut;
            const Vec Ax = sf_.A * x;
            const double pres = inf_norm(Ax + s - sf_.b);
            const double dres = inf_norm(sf_.A.transpose() * y + sf_.c);
            const double cx = sf_.c.dot(x);
            const double by = sf_.b.dot(y);
            const double gap = std::abs(cx + by);
            const bool ok = pres <= tol &&
                            dres <= otol * (1.0 + std::max(nc, inf_norm(sf_.A.transpose() * y))) &&
                            gap <= otol * (1.0 + std::max(std::abs(cx), std::abs(by)));
            if (ok) {
                out.status = SolveStatus::optimal;
                out.x.assign(x.data(), x.data() + n);
                return out;
            }
        }

        const double by = sf_.b.dot(yd);
        if (by < 0.0) {
            const double r = inf_norm(sf_.A.transpose() * yd) / -by;
            if (r <= tol) {
                out.status = SolveStatus::infeasible;
                return out;
            }
        }
        const double cx = sf_.c.dot(xd);
        if (cx < 0.0) {
            const double r = inf_norm(sf_.A * xd + sd) / -cx;
            if (r <= tol) {
                out.status = SolveStatus::unbounded;
                return out;
            }
        }
    }
    // Iteration cap: report the best current point with its residuals.
    if (ut > 1e-12) {
        const Vec x = E_.cwiseProduct(ux) / (sb_ * ut);
        out.x.assign(x.data(), x.data() + n);
    }
    out.status = SolveStatus::numerical_failure;
    return out;
}

// Primal-dual interior point on the homogeneous self-dual embedding with
// Nesterov-Todd scaling and a Mehrotra predictor-corrector.
//   equalities  A x = b           (zero-cone rows)
//   cone rows   G x + s = h, s in R+^l x Q^{q1} x ...
class InteriorPoint {
public:
    InteriorPoint(const StandardForm& sf, const SolverSettings& s) : sf_(sf), set_(s) {}

    ConicSolution run();

private:
    struct Direction {
        Vec x, y, z, s;
        double tau = 0.0, kappa = 0.0;
    };

    void update_scaling(const Vec& s, const Vec& z);
    [[nodiscard]] Vec apply_w(const Vec& v, bool inverse) const;
    [[nodiscard]] Vec apply_w2(const Vec& v) const;
    [[nodiscard]] Vec circ(const Vec& u, const Vec& v) const;
    [[nodiscard]] Vec inv_circ(const Vec& lam, const Vec& v) const;
    [[nodiscard]] double min_eig(const Vec& v) const;
    void add_identity(Vec& v, double a) const;
    [[nodiscard]] double max_step(const Vec& u, const Vec& d) const;

    bool factor();
    [[nodiscard]] Vec solve_kkt(const Vec& rhs) const;
    [[nodiscard]] Vec mul_kkt(const Vec& v) const;

    const StandardForm& sf_;
    const SolverSettings& set_;
    int n_ = 0, meq_ = 0, mg_ = 0, l_ = 0;
    std::vector<int> q_, qoff_;
    SpMat A_, G_, At_, Gt_;
    Vec b_, h_, c_;

    Vec wl_;                  // nonnegative block: sqrt(s / z)
    std::vector<double> eta_; // cone blocks: W = eta * [[w0, w1'], [w1, I + w1 w1' / (1 + w0)]]
    std::vector<Vec> wbar_;
    Vec lambda_;

    static constexpr double kReg = 1e-8;
    bool analyzed_ = false;
    Eigen::SimplicialLDLT<SpMat> ldlt_;
};

void InteriorPoint::update_scaling(const Vec& s, const Vec& z) {
    lambda_.resize(mg_);
    for (int i = 0; i < l_; ++i) {
        wl_[i] = std::sqrt(s[i] / z[i]);
        lambda_[i] = std::sqrt(s[i] * z[i]);
    }
    for (std::size_t k = 0; k < q_.size(); ++k) {
        const int o = qoff_[k];
        const int len = q_[k];
        const auto sv = s.segment(o, len);
        const auto zv = z.segment(o, len);
        const double sres = std::max(sv[0] * sv[0] - sv.tail(len - 1).squaredNorm(), 1e-300);
        const double zres = std::max(zv[0] * zv[0] - zv.tail(len - 1).squaredNorm(), 1e-300);
        const Vec sb = sv / std::sqrt(sres);
        const Vec zb = zv / std::sqrt(zres);
        const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
        Vec w(len);
        w[0] = (sb[0] + zb[0]) / (2.0 * gamma);
        w.tail(len - 1) = (sb.tail(len - 1) - zb.tail(len - 1)) / (2.0 * gamma);
        w[0] = std::sqrt(1.0 + w.tail(len - 1).squaredNorm());
        wbar_[k] = std::move(w);
        eta_[k] = std::pow(sres / zres, 0.25);
    }
    lambda_.tail(mg_ - l_) = apply_w(z, false).tail(mg_ - l_);
}

Vec InteriorPoint::apply_w(const Vec& v, bool inverse) const {
    Vec out(mg_);
    for (int i = 0; i < l_; ++i) out[i] = inverse ? v[i] / wl_[i] : v[i] * wl_[i];
    for (std::size_t k = 0; k < q_.size(); ++k) {
        const int o = qoff_[k];
        const int len = q_[k];
        const Vec& w = wbar_[k];
        const double sign = inverse ? -1.0 : 1.0;
        const double e = inverse ? 1.0 / eta_[k] : eta_[k];
        const double v0 = v[o];
        const auto v1 = v.segment(o + 1, len - 1);
        const auto w1 = w.tail(len - 1);
        const double w1v1 = w1.dot(v1);
        out[o] = e * (w[0] * v0 + sign * w1v1);
        out.segment(o + 1, len - 1) = e * (v1 + (sign * v0 + w1v1 / (1.0 + w[0])) * w1);
    }
    return out;
}

Vec InteriorPoint::apply_w2(const Vec& v) const {
    Vec out(mg_);
    for (int i = 0; i < l_; ++i) out[i] = wl_[i] * wl_[i] * v[i];
    for (std::size_t k = 0; k < q_.size(); ++k) {
        const int o = qoff_[k];
        const int len = q_[k];
        const Vec& w = wbar_[k];
        const double e2 = eta_[k] * eta_[k];
        const auto seg = v.segment(o, len);
        out.segment(o, len) = e2 * (2.0 * w.dot(seg)) * w;
        out[o] -= e2 * seg[0];
        out.segment(o + 1, len - 1) += e2 * seg.tail(len - 1);
    }
    return out;
}

Vec InteriorPoint::circ(const Vec& u, const Vec& v) const {
    Vec out(mg_);
    for (int i = 0; i < l_; ++i) out[i] = u[i] * v[i];
    for (std::size_t k = 0; k < q_.size(); ++k) {
        const int o = qoff_[k];
        const int len = q_[k];
        out[o] = u.segment(o, len).dot(v.segment(o, len));
        out.segment(o + 1, len - 1) = u[o] * v.segment(o + 1, len - 1) + v[o] * u.segment(o + 1, len - 1);
    }
    return out;
}

// Solves lam o x = v.
Vec InteriorPoint::inv_circ(const Vec& lam, const Vec& v) const {
    Vec out(mg_);
    for (int i = 0; i < l_; ++i) out[i] = v[i] / lam[i];
    for (std::size_t k = 0; k < q_.size(); ++k) {
        const int o = qoff_[k];
        const int len = q_[k];
        const auto l1 = lam.segment(o + 1, len - 1);
        const auto v1 = v.segment(o + 1, len - 1);
        const double det = lam[o] * lam[o] - l1.squaredNorm();
        const double x0 = (lam[o] * v[o] - l1.dot(v1)) / det;
        out[o] = x0;
        out.segment(o + 1, len - 1) = (v1 - x0 * l1) / lam[o];
    }
    return out;
}

double InteriorPoint::min_eig(const Vec& v) const {
    double m = kInf;
    for (int i = 0; i < l_; ++i) m = std::min(m, v[i]);
    for (std::size_t k = 0; k < q_.size(); ++k) {
        m = std::min(m, v[qoff_[k]] - v.segment(qoff_[k] + 1, q_[k] - 1).norm());
    }
    return m;
}

void InteriorPoint::add_identity(Vec& v, double a) const {
    for (int i = 0; i < l_; ++i) v[i] += a;
    for (int o : qoff_) v[o] += a;
}

// Largest alpha with u + alpha d in the cone product (kInf if unbounded).
double InteriorPoint::max_step(const Vec& u, const Vec& d) const {
    double alpha = kInf;
    for (int i = 0; i < l_; ++i) {
        if (d[i] < 0.0) alpha = std::min(alpha, -u[i] / d[i]);
    }
    for (std::size_t k = 0; k < q_.size(); ++k) {
        const int o = qoff_[k];
        const int len = q_[k];
        const auto u1 = u.segment(o + 1, len - 1);
        const auto d1 = d.segment(o + 1, len - 1);
        const double a = d[o] * d[o] - d1.squaredNorm();
        const double b = u[o] * d[o] - u1.dot(d1);
        const double c = std::max(u[o] * u[o] - u1.squaredNorm(), 0.0);
        const double disc = b * b - a * c;
        if (a < 0.0 || (b < 0.0 && disc >= 0.0)) {
            const double den = -b + std::sqrt(std::max(disc, 0.0));
            alpha = std::min(alpha, den > 0.0 ? c / den : 0.0);
        }
    }
    return alpha;
}

bool InteriorPoint::factor() {
    const int dim = n_ + meq_ + mg_;
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(A_.nonZeros() + G_.nonZeros() + dim) + 16 * q_.size());
    for (int j = 0; j < n_; ++j) trips.emplace_back(j, j, kReg);
    for (int j = 0; j < n_; ++j) {
        for (SpMat::InnerIterator it(A_, j); it; ++it) trips.emplace_back(n_ + it.row(), j, it.value());
        for (SpMat::InnerIterator it(G_, j); it; ++it) trips.emplace_back(n_ + meq_ + it.row(), j, it.value());
    }
    for (int i = 0; i < meq_; ++i) trips.emplace_back(n_ + i, n_ + i, -kReg);
    const int zo = n_ + meq_;
    for (int i = 0; i < l_; ++i) trips.emplace_back(zo + i, zo + i, -wl_[i] * wl_[i] - kReg);
    for (std::size_t k = 0; k < q_.size(); ++k) {
        const int o = zo + qoff_[k];
        const Vec& w = wbar_[k];
        const double e2 = eta_[k] * eta_[k];
        for (int c = 0; c < q_[k]; ++c) {
            for (int r = c; r < q_[k]; ++r) {
                double v = 2.0 * e2 * w[r] * w[c];
                if (r == c) v += (r == 0 ? -e2 : e2);
                trips.emplace_back(o + r, o + c, r == c ? -v - kReg : -v);
            }
        }
    }
    SpMat K(dim, dim);
    K.setFromTriplets(trips.begin(), trips.end());
    if (!analyzed_) {
        ldlt_.analyzePattern(K);
        analyzed_ = true;
    }
    ldlt_.factorize(K);
    return ldlt_.info() == Eigen::Success;
}

Vec InteriorPoint::mul_kkt(const Vec& v) const {
    const auto vx = v.head(n_);
    const auto vy = v.segment(n_, meq_);
    const Vec vz = v.tail(mg_);
    Vec out(n_ + meq_ + mg_);
    out.head(n_) = At_ * vy + Gt_ * vz;
    out.segment(n_, meq_) = A_ * vx;
    out.tail(mg_) = G_ * vx - apply_w2(vz);
    return out;
}

Vec InteriorPoint::solve_kkt(const Vec& rhs) const {
    Vec sol = ldlt_.solve(rhs);
    const double scale = 1.0 + inf_norm(rhs);
    for (int k = 0; k < 8; ++k) {
        const Vec r = rhs - mul_kkt(sol);
        if (inf_norm(r) <= 1e-14 * scale) break;
        sol += ldlt_.solve(r);
    }
    return sol;
}

ConicSolution InteriorPoint::run() {
    ConicSolution out;
    const Scaled sc = equilibrate(sf_, set_.ruiz_passes);
    n_ = sf_.n;
    meq_ = sf_.zero;
    mg_ = sf_.m() - meq_;
    l_ = sf_.nonneg;
    q_ = sf_.soc;
    int off = l_;
    for (int len : q_) {
        qoff_.push_back(off);
        off += len;
    }
    A_ = sc.A.topRows(meq_);
    G_ = sc.A.bottomRows(mg_);
    At_ = A_.transpose();
    Gt_ = G_.transpose();
    b_ = sc.b.head(meq_);
    h_ = sc.b.tail(mg_);
    c_ = sc.c;
    const int nu = l_ + static_cast<int>(q_.size());

    wl_ = Vec::Ones(l_);
    eta_.assign(q_.size(), 1.0);
    wbar_.clear();
    for (int len : q_) {
        Vec e = Vec::Zero(len);
        e[0] = 1.0;
        wbar_.push_back(std::move(e));
    }
    if (!factor()) return out;

    const int dim = n_ + meq_ + mg_;
    auto split = [&](const Vec& v, Vec& x, Vec& y, Vec& z) {
        x = v.head(n_);
        y = v.segment(n_, meq_);
        z = v.tail(mg_);
    };

    Vec x, y, z, s, tmp;
    {
        Vec rhs = Vec::Zero(dim);
        rhs.segment(n_, meq_) = b_;
        rhs.tail(mg_) = h_;
        split(solve_kkt(rhs), x, tmp, s);
        s = -s;
        const double ap = -min_eig(s);
        if (ap >= 0.0) add_identity(s, 1.0 + ap);
        rhs.setZero();
        rhs.head(n_) = -c_;
        split(solve_kkt(rhs), tmp, y, z);
        const double ad = -min_eig(z);
        if (ad >= 0.0) add_identity(z, 1.0 + ad);
    }
    double tau = 1.0, kappa = 1.0;

    const double eps = std::min(1e-8, 1e-2 * set_.tol);
    const double bh_norm = std::max(inf_norm(b_), inf_norm(h_));
    const double c_norm = inf_norm(c_);

    double pres = kInf, dres = kInf, gap = kInf, relgap = kInf;
    double best_merit = kInf, best_tau = 1.0;
    Vec best_x = x;
    std::array<double, 4> best_res{kInf, kInf, kInf, kInf};
    for (int it = 0; it <= set_.ipm_max_iterations; ++it) {
        out.iterations = it;
        const Vec rx = At_ * y + Gt_ * z + c_ * tau;
        const Vec ry = b_ * tau - A_ * x;
        const Vec rz = h_ * tau - G_ * x - s;
        const double cx = c_.dot(x);
        const double byhz = b_.dot(y) + h_.dot(z);
        const double rt = -cx - byhz - kappa;

        pres = std::max(inf_norm(ry), inf_norm(rz)) / tau / (1.0 + bh_norm);
        dres = inf_norm(rx) / tau / (1.0 + c_norm);
        gap = s.dot(z) / (tau * tau);
        const double pcost = cx / tau;
        const double dcost = -byhz / tau;
        relgap = gap / std::max(1.0, std::min(std::abs(pcost), std::abs(dcost)));
        if (!std::isfinite(pres + dres + gap + relgap)) break;
        const double merit = std::max({pres, dres, std::min(gap, relgap)});
        if (merit < best_merit) {
            best_merit = merit;
            best_x = x;
            best_tau = tau;
            best_res = {pres, dres, gap, relgap};
        }
        if (pres < eps && dres < eps && (gap < eps || relgap < eps)) {
            out.status = SolveStatus::optimal;
            break;
        }
        if (byhz < 0.0 && inf_norm(At_ * y + Gt_ * z) / -byhz < eps) {
            out.status = SolveStatus::infeasible;
            return out;
        }
        if (cx < 0.0 && std::max(inf_norm(A_ * x), inf_norm(G_ * x + s)) / -cx < eps) {
            out.status = SolveStatus::unbounded;
            return out;
        }
        if (it == set_.ipm_max_iterations) break;

        update_scaling(s, z);
        if (!factor()) break;
        Vec u2 = Vec::Zero(dim);
        u2.head(n_) = -c_;
        u2.segment(n_, meq_) = b_;
        u2.tail(mg_) = h_;
        u2 = solve_kkt(u2);
        const double u2dot = c_.dot(u2.head(n_)) + b_.dot(u2.segment(n_, meq_)) + h_.dot(u2.tail(mg_));

        auto direction = [&](double eta, const Vec& ds_rhs, double dk_rhs) {
            Direction d;
            const Vec wt = apply_w(inv_circ(lambda_, ds_rhs), false);
            Vec rhs(dim);
            rhs.head(n_) = -eta * rx;
            rhs.segment(n_, meq_) = eta * ry;
            rhs.tail(mg_) = eta * rz - wt;
            const Vec u1 = solve_kkt(rhs);
            const double u1dot = c_.dot(u1.head(n_)) + b_.dot(u1.segment(n_, meq_)) + h_.dot(u1.tail(mg_));
            d.tau = (-eta * rt + dk_rhs / tau + u1dot) / (kappa / tau - u2dot);
            const Vec full = u1 + d.tau * u2;
            split(full, d.x, d.y, d.z);
            d.s = wt - apply_w2(d.z);
            d.kappa = (dk_rhs - kappa * d.tau) / tau;
            return d;
        };
        auto step_to_boundary = [&](const Direction& d) {
            double a = std::min(max_step(s, d.s), max_step(z, d.z));
            if (d.tau < 0.0) a = std::min(a, -tau / d.tau);
            if (d.kappa < 0.0) a = std::min(a, -kappa / d.kappa);
            return a;
        };

        const double mu = (s.dot(z) + tau * kappa) / (nu + 1);
        const Vec lam2 = circ(lambda_, lambda_);
        const Direction aff = direction(1.0, -lam2, -tau * kappa);
        const double a_aff = std::min(1.0, step_to_boundary(aff));
        const double sigma = std::clamp(std::pow(1.0 - a_aff, 3), 0.0, 1.0);

        Vec ds_rhs = -lam2 - circ(apply_w(aff.s, true), apply_w(aff.z, false));
        add_identity(ds_rhs, sigma * mu);
        const double dk_rhs = -tau * kappa - aff.tau * aff.kappa + sigma * mu;
        const Direction d = direction(1.0 - sigma, ds_rhs, dk_rhs);
        const double alpha = std::min(1.0, 0.99 * step_to_boundary(d));
        if (!(alpha > 1e-10)) break;

        x += alpha * d.x;
        y += alpha * d.y;
        z += alpha * d.z;
        s += alpha * d.s;
        tau += alpha * d.tau;
        kappa += alpha * d.kappa;
    }

    if (out.status != SolveStatus::optimal) {
        // Stalled or diverged: fall back to the best iterate seen.
        x = best_x;
        tau = best_tau;
        const double loose = set_.tol;
        const auto& r = best_res;
        if (r[0] < loose && r[1] < loose && (r[2] < loose || r[3] < loose)) out.status = SolveStatus::optimal;
    }
    const Vec xs = sc.unscale_x(x / tau);
    out.x.assign(xs.data(), xs.data() + n_);
    return out;
}

}  // namespace

ConicSolution solve(const ConicProgram& prog, const SolverSettings& settings) {
    if (settings.backend) return settings.backend(prog, settings);
    const auto start = std::chrono::steady_clock::now();

    const StandardForm sf = to_standard_form(prog);
    ConicSolution sol;
    if (sf.n == 0 && sf.m() == 0) {
        sol.status = SolveStatus::optimal;
    } else {
        if (settings.method == SolverMethod::operator_splitting) {
            Splitting solver(sf, settings);
            sol = solver.run();
        } else {
            InteriorPoint solver(sf, settings);
            sol = solver.run();
        }
    }

    if (!sol.x.empty() || sf.n == 0) {
        if (sol.x.empty()) sol.x.assign(static_cast<std::size_t>(sf.n), 0.0);
        sol.objective = prog.objective_value(sol.x);
        const Audit a = audit(prog, sol.x);
        sol.max_primal_residual = a.max_primal_residual;
        sol.max_cone_violation = a.max_cone_violation;
    }
    sol.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return sol;
}

std::string format_program(const ConicProgram& prog) {
    const StandardForm sf = to_standard_form(prog);
    std::ostringstream out;
    out << "# n " << sf.n << "\n# m " << sf.m() << "\n# zero " << sf.zero << "\n# nonneg " << sf.nonneg << "\n# soc";
    for (int q : sf.soc) out << ' ' << q;
    out << "\n# objective_constant " << textio::fmt(prog.objective_constant()) << '\n';
    for (int j = 0; j < sf.n; ++j) {
        if (sf.c[j] != 0.0) out << "c " << j << ' ' << textio::fmt(sf.c[j]) << '\n';
    }
    for (int j = 0; j < sf.n; ++j) {
        for (SpMat::InnerIterator it(sf.A, j); it; ++it) {
            out << "A " << it.row() << ' ' << j << ' ' << textio::fmt(it.value()) << '\n';
        }
    }
    for (int i = 0; i < sf.m(); ++i) {
        if (sf.b[i] != 0.0) out << "b " << i << ' ' << textio::fmt(sf.b[i]) << '\n';
    }
    return out.str();
}

}  // namespace gmdcascade::conic
