#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"

#include "diqkd/behavior.hpp"
#include "diqkd/polytope.hpp"

using namespace diqkd;

namespace {

// Optimum of max c.x, Ax=b, x>=0 by enumerating every basis.
double lp_oracle(const LpProblem& p, bool& feasible)
{
    const int m = p.rows, n = p.cols;
    Eigen::MatrixXd A(m, n);
    for (int r = 0; r < m; ++r)
        for (int k = 0; k < n; ++k) A(r, k) = p.at(r, k);
    Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(p.b.data(), m);
    double best = -INFINITY;
    std::vector<int> idx(m);
    std::function<void(int, int)> rec = [&](int start, int depth) {
        if (depth == m) {
            Eigen::MatrixXd B(m, m);
            for (int j = 0; j < m; ++j) B.col(j) = A.col(idx[j]);
            Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
            if (lu.rank() < m) return;
            Eigen::VectorXd xb = lu.solve(b);
            if (xb.minCoeff() < -1e-10) return;
            double obj = 0;
            for (int j = 0; j < m; ++j) obj += p.c[idx[j]] * xb[j];
            best = std::max(best, obj);
            return;
        }
        for (int k = start; k < n; ++k) {
            idx[depth] = k;
            rec(k + 1, depth + 1);
        }
    };
    rec(0, 0);
    feasible = std::isfinite(best);
    return best;
}

double entropy(const std::vector<double>& p)
{
    double s = 0;
    for (double v : p)
        if (v > 0) s -= v * std::log2(v);
    return s;
}

}  // namespace

TEST_CASE("lp basics")
{
    LpProblem p(1, 2);  // max x, x + s = 1
    p.at(0, 0) = 1;
    p.at(0, 1) = 1;
    p.b[0] = 1;
    p.c = {1, 0};
    auto s = lp_solve(p);
    CHECK(s.status == LpStatus::optimal);
    CHECK(s.objective == doctest::Approx(1.0));

    LpProblem inf(1, 1);  // x = -1
    inf.at(0, 0) = 1;
    inf.b[0] = -1;
    CHECK(lp_solve(inf).status == LpStatus::infeasible);

    LpProblem unb(1, 2);  // x - y = 0, max x
    unb.at(0, 0) = 1;
    unb.at(0, 1) = -1;
    unb.c = {1, 0};
    CHECK(lp_solve(unb).status == LpStatus::unbounded);

    // redundant and degenerate rows
    LpProblem d(3, 3);
    for (int k = 0; k < 3; ++k) {
        d.at(0, k) = 1;
        d.at(1, k) = 1;
        d.at(2, k) = 2;
    }
    d.b = {1, 1, 2};
    d.c = {0.0, 1.0, 0.5};
    for (auto rule : {PivotRule::bland, PivotRule::dantzig}) {
        auto r = lp_solve(d, rule);
        CHECK(r.status == LpStatus::optimal);
        CHECK(r.objective == doctest::Approx(1.0));
    }
}

TEST_CASE("random LPs against basis enumeration")
{
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> U(-1, 1), P(0, 1);
    for (int rep = 0; rep < 30; ++rep) {
        const int m = 4, n = 20;
        LpProblem p(m, n);
        std::vector<double> x0(n);
        for (double& v : x0) v = P(rng);
        for (int k = 0; k < n; ++k) p.at(0, k) = 1;
        for (int r = 1; r < m; ++r)
            for (int k = 0; k < n; ++k) p.at(r, k) = U(rng);
        double s = 0;
        for (double v : x0) s += v;
        for (double& v : x0) v /= s;
        for (int r = 0; r < m; ++r) {
            p.b[r] = 0;
            for (int k = 0; k < n; ++k) p.b[r] += p.at(r, k) * x0[k];
        }
        for (double& c : p.c) c = U(rng);
        bool feas;
        double want = lp_oracle(p, feas);
        REQUIRE(feas);
        for (auto rule : {PivotRule::bland, PivotRule::dantzig}) {
            auto got = lp_solve(p, rule);
            REQUIRE(got.status == LpStatus::optimal);
            CHECK(got.objective == doctest::Approx(want).epsilon(1e-8));
            for (int r = 0; r < m; ++r) {
                double lhs = 0;
                for (int k = 0; k < n; ++k) lhs += p.at(r, k) * got.x[k];
                CHECK(lhs == doctest::Approx(p.b[r]).epsilon(1e-9));
            }
            for (double v : got.x) CHECK(v >= -1e-9);
        }
    }
}

TEST_CASE("local bound")
{
    CHECK(local_bound(chsh_coefficients()) == doctest::Approx(2.0));
    CHECK(local_bound(chsh_up_coefficients()) == doctest::Approx(3.0));
    Behavior ones;
    for (double& v : ones.table) v = 1;
    CHECK(local_bound(ones) == doctest::Approx(4.0));
    double best = -10;
    for (const auto& v : deterministic_vertices()) best = std::max(best, chsh_value(v).beta);
    CHECK(local_bound(chsh_coefficients()) == doctest::Approx(best));
}

TEST_CASE("membership")
{
    CHECK(is_local(isotropic_behavior(0.5)).local);
    CHECK_FALSE(is_local(isotropic_behavior(0.6)).local);
    for (const auto& v : deterministic_vertices()) {
        auto r = is_local(v);
        CHECK(r.local);
        double mx = *std::max_element(r.weights.begin(), r.weights.end());
        CHECK(mx == doctest::Approx(1.0));
    }
    // pivot rules agree on random mixtures
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(0, 1);
    auto verts = deterministic_vertices();
    auto prs = pr_boxes();
    for (int i = 0; i < 200; ++i) {
        Behavior b;
        double lam = U(rng);
        std::vector<double> w(16);
        double s = 0;
        for (double& v : w) s += (v = -std::log(U(rng)));
        for (int k = 0; k < 16; ++k)
            for (int e = 0; e < 16; ++e) b.table[e] += lam * w[k] / s * verts[k].table[e];
        const auto& pr = prs[i % 8];
        for (int e = 0; e < 16; ++e) b.table[e] += (1 - lam) * pr.table[e];
        CHECK(is_local(b, 1e-9, PivotRule::bland).local == is_local(b, 1e-9, PivotRule::dantzig).local);
    }
}

TEST_CASE("convex-combination decomposition")
{
    std::vector<Behavior> pr{pr_box()};
    for (int k = 0; k <= 20; ++k) {
        double v = k / 20.0;
        auto d = cc_local_weight(isotropic_behavior(v), pr);
        REQUIRE(d.status == LpStatus::optimal);
        CHECK(d.q_L == doctest::Approx(std::min(1.0, 2 * (1 - v))).epsilon(1e-8));
        double tot = 0;
        for (double q : d.q_local) tot += q;
        for (double q : d.q_nonlocal) tot += q;
        CHECK(tot == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(d.reconstruction_error <= 1e-9);
    }
    CHECK(cc_local_weight(pr_box(), pr).q_L == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(cc_local_weight(isotropic_behavior(0.3), pr).q_L == doctest::Approx(1.0));

    // not in the hull of vertices and the supplied point
    Behavior sig;
    sig(0, 0, 0, 0) = 1;
    sig(1, 0, 0, 1) = 1;
    sig(0, 0, 1, 0) = 1;
    sig(0, 0, 1, 1) = 1;
    CHECK(cc_local_weight(sig, pr).status == LpStatus::infeasible);
    CHECK_THROWS_AS(cc_local_weight(pr_box(), {Behavior(2, 2, 3, 2)}), ShapeError);

    // q_L = 1 exactly on local mixtures
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> U(0, 1);
    auto verts = deterministic_vertices();
    auto prs = pr_boxes();
    for (int i = 0; i < 200; ++i) {
        Behavior b;
        std::vector<double> w(16);
        double s = 0;
        for (double& v : w) s += (v = -std::log(U(rng)));
        for (int k = 0; k < 16; ++k)
            for (int e = 0; e < 16; ++e) b.table[e] += w[k] / s * verts[k].table[e];
        auto d = cc_local_weight(b, prs);
        CHECK(d.q_L == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(is_local(b).local);
    }
}

TEST_CASE("conditional mutual information")
{
    auto oracle = [](double qL, const Behavior& L, const Behavior& NL, int x, int y) {
        // sum_e p(e) I(A:B|E=e); e is (a,b) on the local branch and '?' otherwise
        // a fully labelled branch carries no information
        (void)L;
        double I = 0;
        double pq = 1 - qL;
        if (pq > 0) {
            std::vector<double> pa(2, 0), pb(2, 0), pab;
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) {
                    pab.push_back(NL(a, b, x, y));
                    pa[a] += NL(a, b, x, y);
                    pb[b] += NL(a, b, x, y);
                }
            I += pq * (entropy(pa) + entropy(pb) - entropy(pab));
        }
        return I;
    };
    auto pr = pr_box();
    auto iso = isotropic_behavior(0.0);
    CHECK(cc_conditional_mutual_info(1.0, iso, pr, 0, 0) == doctest::Approx(0.0));
    CHECK(cc_conditional_mutual_info(0.0, iso, pr, 1, 1) == doctest::Approx(1.0));
    CHECK(cc_conditional_mutual_info(0.5, iso, pr, 0, 0) == doctest::Approx(0.5));
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> U(0, 1);
    for (int i = 0; i < 50; ++i) {
        double q = U(rng), v = U(rng);
        auto NL = isotropic_behavior(v);
        auto L = eve_vertex(1 + i % 4, i % 2);
        CHECK(cc_conditional_mutual_info(q, L, NL, i % 2, (i / 2) % 2) ==
              doctest::Approx(oracle(q, L, NL, i % 2, (i / 2) % 2)).epsilon(1e-12));
    }
    CHECK(cc_intrinsic_upper(0.5, iso, pr, {0.25, 0.25, 0.25, 0.25}) == doctest::Approx(0.5));
}
