#include "diqkd/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace diqkd {

namespace {

constexpr double kPivotEps = 1e-11;
constexpr double kCostEps = 1e-11;
constexpr double kFeasTol = 1e-9;

// Dense simplex tableau; the last row holds reduced costs of a minimisation and
// the last column the right-hand side.
struct Tableau {
    int m, width;
    std::vector<double> t;
    std::vector<int> basis;

    double& at(int r, int k) { return t[static_cast<std::size_t>(r * width + k)]; }
    int rhs() const { return width - 1; }

    void pivot(int pr, int pc)
    {
        double inv = 1.0 / at(pr, pc);
        for (int k = 0; k < width; ++k) at(pr, k) *= inv;
        at(pr, pc) = 1.0;
        for (int r = 0; r <= m; ++r) {
            if (r == pr) continue;
            double f = at(r, pc);
            if (f == 0.0) continue;
            for (int k = 0; k < width; ++k) at(r, k) -= f * at(pr, k);
            at(r, pc) = 0.0;
        }
        basis[pr] = pc;
    }

    void drop_row(int r)
    {
        t.erase(t.begin() + static_cast<std::ptrdiff_t>(r * width), t.begin() + static_cast<std::ptrdiff_t>((r + 1) * width));
        basis.erase(basis.begin() + r);
        --m;
    }

    // Returns false if unbounded.
    bool run(int ncols, PivotRule rule, int& pivots, int max_pivots)
    {
        while (pivots < max_pivots) {
            int enter = -1;
            double best = -kCostEps;
            for (int k = 0; k < ncols; ++k) {
                double d = at(m, k);
                if (d < best) {
                    enter = k;
                    if (rule == PivotRule::bland) break;
                    best = d;
                }
            }
            if (enter < 0) return true;
            int leave = -1;
            double ratio = std::numeric_limits<double>::infinity();
            for (int r = 0; r < m; ++r) {
                double a = at(r, enter);
                if (a <= kPivotEps) continue;
                double q = std::max(0.0, at(r, rhs())) / a;
                if (q < ratio - 1e-14 || (q <= ratio + 1e-14 && leave >= 0 && basis[r] < basis[leave])) {
                    if (q < ratio) ratio = q;
                    leave = r;
                }
            }
            if (leave < 0) return false;
            pivot(leave, enter);
            ++pivots;
        }
        throw std::runtime_error("lp_solve: pivot limit reached");
    }
};

}  // namespace

LpSolution lp_solve(const LpProblem& p, PivotRule rule)
{
    if (p.rows < 0 || p.cols <= 0 || p.A.size() != static_cast<std::size_t>(p.rows * p.cols) ||
        p.b.size() != static_cast<std::size_t>(p.rows) || p.c.size() != static_cast<std::size_t>(p.cols))
        throw ShapeError("lp_solve: inconsistent problem dimensions");
    for (double v : p.b)
        if (!std::isfinite(v)) throw DomainError("lp_solve: non-finite rhs");

    const int n = p.cols;
    // Row scaling to unit max-abs, rhs made nonnegative.
    std::vector<std::vector<double>> rows;
    std::vector<double> rhs;
    for (int r = 0; r < p.rows; ++r) {
        double mx = 0.0;
        for (int k = 0; k < n; ++k) mx = std::max(mx, std::fabs(p.at(r, k)));
        if (mx == 0.0) {
            if (std::fabs(p.b[r]) > kFeasTol) return {LpStatus::infeasible, 0.0, {}, 0};
            continue;
        }
        double s = (p.b[r] < 0.0 ? -1.0 : 1.0) / mx;
        std::vector<double> row(n);
        for (int k = 0; k < n; ++k) row[k] = p.at(r, k) * s;
        rows.push_back(std::move(row));
        rhs.push_back(p.b[r] * s);
    }
    const int m = static_cast<int>(rows.size());

    Tableau T{m, n + m + 1, std::vector<double>(static_cast<std::size_t>((m + 1) * (n + m + 1)), 0.0), std::vector<int>(m)};
    for (int r = 0; r < m; ++r) {
        for (int k = 0; k < n; ++k) T.at(r, k) = rows[r][k];
        T.at(r, n + r) = 1.0;
        T.at(r, T.rhs()) = rhs[r];
        T.basis[r] = n + r;
        for (int k = 0; k < n; ++k) T.at(m, k) -= rows[r][k];
        T.at(m, T.rhs()) -= rhs[r];
    }

    int pivots = 0;
    const int max_pivots = 200 * (n + m + 10);
    T.run(n, rule, pivots, max_pivots);  // phase 1 is bounded below by 0
    if (-T.at(T.m, T.rhs()) > kFeasTol * std::max(1, m)) return {LpStatus::infeasible, 0.0, {}, pivots};

    // Drive artificials out of the basis or drop redundant rows.
    for (int r = 0; r < T.m;) {
        if (T.basis[r] < n) {
            ++r;
            continue;
        }
        int col = -1;
        double best = 1e-9;
        for (int k = 0; k < n; ++k)
            if (std::fabs(T.at(r, k)) > best) {
                best = std::fabs(T.at(r, k));
                col = k;
                if (rule == PivotRule::bland) break;
            }
        if (col >= 0) {
            T.pivot(r, col);
            ++pivots;
            ++r;
        } else {
            T.drop_row(r);
        }
    }

    // Phase 2 costs: minimise -c over the original columns.
    for (int k = 0; k < T.width; ++k) T.at(T.m, k) = 0.0;
    for (int k = 0; k < n; ++k) T.at(T.m, k) = -p.c[k];
    for (int r = 0; r < T.m; ++r) {
        int bc = T.basis[r];
        double cb = bc < n ? -p.c[bc] : 0.0;
        if (cb == 0.0) continue;
        for (int k = 0; k < T.width; ++k) T.at(T.m, k) -= cb * T.at(r, k);
    }
    if (!T.run(n, rule, pivots, max_pivots)) return {LpStatus::unbounded, 0.0, {}, pivots};

    LpSolution sol{LpStatus::optimal, 0.0, std::vector<double>(n, 0.0), pivots};
    for (int r = 0; r < T.m; ++r)
        if (T.basis[r] < n) sol.x[T.basis[r]] = std::max(0.0, T.at(r, T.rhs()));
    for (int k = 0; k < n; ++k) sol.objective += p.c[k] * sol.x[k];
    return sol;
}

LocalityResult is_local(const Behavior& b, double tol, PivotRule rule)
{
    auto verts = deterministic_vertices(b.nA, b.nB, b.nX, b.nY);
    const int nv = static_cast<int>(verts.size());
    const int ne = static_cast<int>(b.table.size());
    // Rows: each table entry plus normalisation; columns: weights then +/- slacks.
    const int m = ne + 1;
    LpProblem lp(m, nv + 2 * m);
    for (int i = 0; i < ne; ++i) {
        for (int v = 0; v < nv; ++v) lp.at(i, v) = verts[v].table[i];
        lp.b[i] = b.table[i];
    }
    for (int v = 0; v < nv; ++v) lp.at(ne, v) = 1.0;
    lp.b[ne] = 1.0;
    for (int i = 0; i < m; ++i) {
        lp.at(i, nv + 2 * i) = 1.0;
        lp.at(i, nv + 2 * i + 1) = -1.0;
        lp.c[nv + 2 * i] = lp.c[nv + 2 * i + 1] = -1.0;
    }
    LpSolution s = lp_solve(lp, rule);
    if (s.status != LpStatus::optimal) throw std::runtime_error("is_local: slack LP not optimal");
    LocalityResult out{false, -s.objective, std::vector<double>(s.x.begin(), s.x.begin() + nv)};
    out.local = out.distance <= tol;
    return out;
}

double local_bound(const Behavior& coeffs)
{
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& v : deterministic_vertices(coeffs.nA, coeffs.nB, coeffs.nX, coeffs.nY)) {
        double s = 0.0;
        for (std::size_t i = 0; i < v.table.size(); ++i) s += coeffs.table[i] * v.table[i];
        best = std::max(best, s);
    }
    return best;
}

Behavior chsh_coefficients()
{
    Behavior c;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int x = 0; x < 2; ++x)
                for (int y = 0; y < 2; ++y) c(a, b, x, y) = ((a ^ b) == (x & y)) ? 1.0 : -1.0;
    return c;
}

Behavior chsh_up_coefficients()
{
    Behavior c;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int x = 0; x < 2; ++x)
                for (int y = 0; y < 2; ++y) c(a, b, x, y) = ((a ^ b) == (x & y)) ? 1.0 : 0.0;
    return c;
}

std::vector<Behavior> pr_boxes()
{
    std::vector<Behavior> out;
    for (int al = 0; al < 2; ++al)
        for (int be = 0; be < 2; ++be)
            for (int ga = 0; ga < 2; ++ga) {
                Behavior p;
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b)
                        for (int x = 0; x < 2; ++x)
                            for (int y = 0; y < 2; ++y)
                                p(a, b, x, y) = ((a ^ b) == ((x & y) ^ (al & x) ^ (be & y) ^ ga)) ? 0.5 : 0.0;
                out.push_back(p);
            }
    return out;
}

CcDecomposition cc_local_weight(const Behavior& b, const std::vector<Behavior>& nonlocal_points)
{
    for (const auto& q : nonlocal_points)
        if (!q.same_shape(b)) throw ShapeError("cc_local_weight: nonlocal point shape differs from the behavior");
    auto verts = deterministic_vertices(b.nA, b.nB, b.nX, b.nY);
    const int nv = static_cast<int>(verts.size());
    const int nn = static_cast<int>(nonlocal_points.size());
    const int ne = static_cast<int>(b.table.size());
    LpProblem lp(ne + 1, nv + nn);
    for (int i = 0; i < ne; ++i) {
        for (int v = 0; v < nv; ++v) lp.at(i, v) = verts[v].table[i];
        for (int k = 0; k < nn; ++k) lp.at(i, nv + k) = nonlocal_points[k].table[i];
        lp.b[i] = b.table[i];
    }
    for (int k = 0; k < nv + nn; ++k) lp.at(ne, k) = 1.0;
    lp.b[ne] = 1.0;
    for (int v = 0; v < nv; ++v) lp.c[v] = 1.0;

    CcDecomposition out;
    LpSolution s = lp_solve(lp);
    out.status = s.status;
    if (s.status != LpStatus::optimal) return out;
    out.q_local.assign(s.x.begin(), s.x.begin() + nv);
    out.q_nonlocal.assign(s.x.begin() + nv, s.x.end());
    out.q_L = std::min(1.0, s.objective);
    for (int i = 0; i < ne; ++i) {
        double r = -b.table[i];
        for (int v = 0; v < nv; ++v) r += s.x[v] * verts[v].table[i];
        for (int k = 0; k < nn; ++k) r += s.x[nv + k] * nonlocal_points[k].table[i];
        out.reconstruction_error = std::max(out.reconstruction_error, std::fabs(r));
    }
    return out;
}

double cc_conditional_mutual_info(double q_L, const Behavior& local_part, const Behavior& nonlocal_part, int x, int y)
{
    if (!(q_L >= 0.0 && q_L <= 1.0)) throw DomainError("cc_conditional_mutual_info: q_L outside [0,1]");
    if (!local_part.same_shape(nonlocal_part)) throw ShapeError("cc_conditional_mutual_info: shape mismatch");
    if (x < 0 || x >= local_part.nX || y < 0 || y >= local_part.nY) throw DomainError("cc_conditional_mutual_info: setting out of range");
    const int nA = local_part.nA, nB = local_part.nB;
    // Eve's label: index a*nB+b for local rounds, nA*nB for '?'.
    const int nE = nA * nB + 1;
    std::vector<double> pabe(static_cast<std::size_t>(nA * nB * nE), 0.0);
    auto P = [&](int a, int b, int e) -> double& { return pabe[static_cast<std::size_t>((a * nB + b) * nE + e)]; };
    for (int a = 0; a < nA; ++a)
        for (int b = 0; b < nB; ++b) {
            P(a, b, a * nB + b) += q_L * local_part(a, b, x, y);
            P(a, b, nE - 1) += (1.0 - q_L) * nonlocal_part(a, b, x, y);
        }
    auto H = [](const std::map<std::vector<int>, double>& d) {
        double s = 0.0;
        for (const auto& [k, v] : d)
            if (v > 0.0) s -= v * std::log2(v);
        return s;
    };
    std::map<std::vector<int>, double> ae, be, abe, e;
    for (int a = 0; a < nA; ++a)
        for (int b = 0; b < nB; ++b)
            for (int k = 0; k < nE; ++k) {
                double v = P(a, b, k);
                ae[{a, k}] += v;
                be[{b, k}] += v;
                abe[{a, b, k}] += v;
                e[{k}] += v;
            }
    return std::max(0.0, H(ae) + H(be) - H(abe) - H(e));
}

double cc_intrinsic_upper(double q_L, const Behavior& local_part, const Behavior& nonlocal_part,
                          const std::vector<double>& p_xy)
{
    if (p_xy.size() != static_cast<std::size_t>(local_part.nX * local_part.nY)) throw ShapeError("cc_intrinsic_upper: p_xy size");
    double s = 0.0;
    for (int x = 0; x < local_part.nX; ++x)
        for (int y = 0; y < local_part.nY; ++y)
            s += p_xy[static_cast<std::size_t>(x * local_part.nY + y)] * cc_conditional_mutual_info(q_L, local_part, nonlocal_part, x, y);
    return s;
}

}  // namespace diqkd
