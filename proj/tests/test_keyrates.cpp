#include <cmath>
#include <numbers>

#include "doctest.h"

#include "diqkd/keyrates.hpp"

using namespace diqkd;
using std::numbers::pi;
using std::numbers::sqrt2;

namespace {

double h(double p) { return p <= 0 || p >= 1 ? 0.0 : -p * std::log2(p) - (1 - p) * std::log2(1 - p); }

// Dense scan, good to ~1e-6 in the argument.
template <class F>
double grid_max(F f, double lo, double hi, int n = 200001)
{
    double best = -1e300;
    for (int i = 0; i < n; ++i) best = std::max(best, f(lo + (hi - lo) * i / (n - 1)));
    return best;
}

template <class F>
double scan_root(F f, double lo, double hi)
{
    for (int i = 0; i < 100; ++i) {
        double m = 0.5 * (lo + hi);
        (f(lo) * f(m) <= 0 ? hi : lo) = m;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("entropies")
{
    CHECK(binary_entropy(0.11) == doctest::Approx(0.499916).epsilon(1e-6));
    CHECK(binary_entropy(0.5) == 1.0);
    CHECK(binary_entropy(0) == 0.0);
    CHECK_THROWS_AS(binary_entropy(1.1), DomainError);
    CHECK(holevo_chsh(2.4264).v == doctest::Approx(0.62597).epsilon(1e-5));
    CHECK(holevo_chsh(2 * sqrt2).v == doctest::Approx(0.0));
    CHECK(holevo_chsh(1.5).v == 1.0);
    CHECK(holevo_chsh(1.5).status == Status::clipped);
    CHECK_THROWS_AS(holevo_chsh(2.9), DomainError);
    for (double S = 2.05; S < 2.8; S += 0.05) {
        double d = (holevo_chsh(S + 1e-6).v - holevo_chsh(S - 1e-6).v) / 2e-6;
        CHECK(holevo_chsh_slope(S) == doctest::Approx(d).epsilon(1e-5));
    }
}

TEST_CASE("chi0 is concave and decreasing")
{
    const int N = 1000;
    const double lo = 2.0, hi = 2 * sqrt2;
    std::vector<double> v(N);
    for (int i = 0; i < N; ++i) v[i] = holevo_chsh(lo + (hi - lo) * i / (N - 1)).v;
    for (int i = 1; i < N; ++i) CHECK(v[i] <= v[i - 1] + 1e-15);
    int bad = 0;
    for (int i = 1; i + 1 < N; ++i)
        if (v[i + 1] - 2 * v[i] + v[i - 1] > 1e-12) ++bad;
    CHECK(bad == 0);
}

TEST_CASE("DW rate and critical points")
{
    CHECK(dw_rate_chsh(2 * sqrt2 * 0.9, 0.05).v == doctest::Approx(1 - h(0.05) - h(0.5 + std::sqrt(8 * 0.81 - 4) / 4)));
    CHECK(dw_rate_chsh(2 * sqrt2 * 0.9, 0.05).v == doctest::Approx(0.22495).epsilon(1e-5));
    CHECK(dw_generic(0.399, 0.342) == doctest::Approx(0.057));
    auto Q = critical_qber_dw();
    double want = scan_root([](double q) { return 1 - h(q) - h(0.5 + std::sqrt(8 * (1 - 2 * q) * (1 - 2 * q) - 4) / 4); }, 0.01, 0.2);
    CHECK(Q.x == doctest::Approx(want).epsilon(1e-9));
    CHECK(std::fabs(Q.x - 0.071) <= 0.002);
    auto E = critical_eta_dw();
    CHECK(std::fabs(E.x - 0.924) <= 0.003);
    double S = 2 * sqrt2 * E.x * E.x + 2 * (1 - E.x) * (1 - E.x);
    CHECK(1 - h(E.x * (1 - E.x)) - h(0.5 + std::sqrt(S * S - 4) / 4) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("noisy preprocessing")
{
    for (double S : {2.3, 2.5, 2.7, 2.8}) {
        for (double Q : {0.0, 0.03, 0.08}) {
            auto opt = dw_noisy_optimize(S, Q);
            CHECK(opt.r >= dw_rate_chsh(S, Q).v - 1e-12);
            CHECK(dw_rate_noisy_preproc(S, Q, 0.5).v <= 1e-12);
            double brute = grid_max([&](double q) { return dw_rate_noisy_preproc(S, Q, q).v; }, 0, 0.5, 20001);
            CHECK(opt.r >= brute - 1e-9);
        }
    }
    CHECK(dw_rate_noisy_preproc(2.6, 0.04, 0.0).v == doctest::Approx(dw_rate_chsh(2.6, 0.04).v));
    // margin sign matches the rate just below q = 1/2
    for (double S : {2.2, 2.5, 2.8})
        for (double Q : {0.0, 0.05, 0.1, 0.15}) {
            double r = dw_rate_noisy_preproc(S, Q, 0.5 - 1e-3).v;
            double m = noisy_preproc_margin(S, Q);
            if (std::fabs(m) > 1e-3) CHECK((r > 0) == (m > 0));
        }
}

TEST_CASE("chained M")
{
    for (int i = 0; i <= 100; ++i) {
        double p = i / 100.0;
        // the earlier CHSH protocol's one-way bound
        double chsh = sqrt2 * p - 1 - h((1 + p) / 2);
        CHECK(std::fabs(chain_m_rate(p, 2) - chsh) <= 1e-12);
        CHECK(std::fabs(chain_m_rate(p, 2) - chain06_bounds(p).r_lower) <= 1e-12);
    }
    CHECK(std::fabs(chain_m_rate(1, 50) - (1 - pi * pi / 400)) <= 0.01 * (1 - pi * pi / 400));
    double best = 1;
    int arg = 0;
    for (int M = 2; M <= 5; ++M) {
        double r = chain_m_root(M).x;
        if (r < best) best = r, arg = M;
    }
    CHECK(arg == 3);
    CHECK_THROWS_AS(chain_m_rate(0.9, 1), DomainError);
}

TEST_CASE("no-signalling adversary")
{
    auto t0 = ns_threshold_no_preproc();
    CHECK(std::fabs(t0.x - 0.318) <= 0.005);
    CHECK(ns_chsh_rate_pnl(t0.x, 0) == doctest::Approx(0).epsilon(1e-9));
    auto t1 = ns_threshold_optimal();
    CHECK(t1.x == doctest::Approx(std::sqrt(5.0) - 2).epsilon(1e-9));
    CHECK(std::fabs(t1.x - 0.236) <= 0.010);
    // numerical optimum over q agrees on both sides
    CHECK(ns_optimize(t1.x + 0.01).r > 0);
    CHECK(ns_optimize(t1.x - 0.01).r <= 1e-9);
    CHECK(ns_pnl_from_D(0.5 - 1 / (2 * sqrt2)) == doctest::Approx(0).epsilon(1e-12));
}

TEST_CASE("two-way and upper bounds")
{
    CHECK(ck_rate_special(0.5) == doctest::Approx(0.3444).epsilon(1e-4));
    CHECK(intrinsic_info_conjecture(0.6) == doctest::Approx(0.17528).epsilon(1e-5));
    auto ad = ad_error_recursion(0.1, 5);
    CHECK(ad.e_tilde == doctest::Approx(1e-5 / (std::pow(0.9, 5) + 1e-5)).epsilon(1e-12));
    CHECK(ad.e_tilde == doctest::Approx(1.694e-5).epsilon(1e-3));
    CHECK(ad_error_recursion(0.1, 5, 0.2).secrecy);
    CHECK_FALSE(ad_error_recursion(0.1, 5, 0.1).secrecy);
    CHECK(ad_error_recursion(0.3, 100000).e_tilde >= 0);

    CHECK(std::fabs(chain06_bounds(1).r_lower - (sqrt2 - 1)) <= 1e-9);
    CHECK(std::fabs(chain06_lower_root().x - 0.9038) <= 0.002);
    CHECK(std::fabs(chain06_upper_root().x - 0.8284) <= 0.001);
    CHECK(chain06_upper_root().x == doctest::Approx(2 / (1 + sqrt2)).epsilon(1e-9));

    CHECK(chsh_l_rate(2 * sqrt2, 0, 1).v == doctest::Approx(1.0));
    CHECK(chsh_l_rate(2, 0, 1).v <= 0);
}

TEST_CASE("collision-attack bounds")
{
    double el = cc_eta_loc();
    CHECK(std::fabs(cc_upper_bounds(el).q_L.v - 1) <= 1e-6);
    CHECK(cc_upper_bounds(0.7).q_L.status == Status::clipped);
    CHECK(std::fabs(cc_one_way_root().x - 0.8918) <= 0.002);
    CHECK(std::fabs(cc_two_way_root().x - 0.8536) <= 0.002);
    CHECK(cc_two_way_root().x == doctest::Approx((2 + sqrt2) / 4).epsilon(1e-9));
    for (double e = 0.9; e < 1; e += 0.01) CHECK(cc_upper_bounds(e).r2.v >= 0);
}

TEST_CASE("semi-device-independent")
{
    auto s = sdi_rate(sdi_optimal_PB());
    CHECK(s.threshold == (5 + std::sqrt(3.0)) / 8);
    CHECK(std::fabs(s.threshold - 0.84150) <= 1e-5);
    CHECK(sdi_optimal_PB() == (2 * sqrt2 + 4) / 8);
    CHECK(std::fabs(s.r - 0.057) <= 0.003);
    CHECK(sdi_rate(s.threshold).r == doctest::Approx(0).epsilon(1e-12));
    CHECK(sdi_lossy_thresholds(0.8).general == doctest::Approx(0.7778).epsilon(1e-4));
    CHECK(sdi_lossy_thresholds(1).general == doctest::Approx(0.75));
    CHECK(sdi_lossy_thresholds(1).minimal == doctest::Approx(0.75));

    CHECK(one_sided_rate(1, 0, 0, 1).v == 1.0);
    CHECK(std::fabs(one_sided_critical().x - 0.659) <= 0.002);
}

TEST_CASE("multipartite and Holz")
{
    CHECK(mabk_entropy(2 * sqrt2).v == doctest::Approx(0).epsilon(1e-12));
    CHECK(mabk_entropy(2.5).status == Status::clipped);
    CHECK(mabk_entropy(4).v == doctest::Approx(1));
    CHECK(mabk_entropy(3).v == doctest::Approx(0.09215).epsilon(1e-5));
    CHECK(holz_entropy(2).v == doctest::Approx(1));
    CHECK(holz_entropy(1.5).status == Status::clipped);
    CHECK_THROWS_AS(holz_entropy(2.2), DomainError);
}

TEST_CASE("Masini bounds")
{
    for (double x = 0; x <= 1; x += 0.1) {
        CHECK(masini_bounds(MasiniKind::bb84, {x}) == doctest::Approx(1 - h(0.5 + x / 2)));
        CHECK(masini_bounds(MasiniKind::noisy, {x, 0.0}) == doctest::Approx(1 - h(0.5 + x / 2)));
        MasiniParams mp{x, 0.2, 0.0};
        CHECK(masini_bounds(MasiniKind::noisy_biased, mp) == doctest::Approx(masini_bounds(MasiniKind::noisy, mp)));
        MasiniParams two{x, 0.2, 0, 1.0, 0.3};
        CHECK(masini_bounds(MasiniKind::two_basis, two) == doctest::Approx(masini_bounds(MasiniKind::noisy, {x, 0.2})));
    }
    // composition: 1 - phi(sqrt(S^2/4 - 1)) reproduces 1 - chi0(S)
    for (int i = 0; i <= 1000; ++i) {
        double S = 2 + (2 * sqrt2 - 2) * i / 1000.0;
        double x = masini_correlation(MasiniCorr::chsh, S).v;
        CHECK(std::fabs(masini_bounds(MasiniKind::bb84, {std::min(x, 1.0)}) - (1 - holevo_chsh(S).v)) <= 1e-12);
    }
    for (double a : {1.0, 1.5, 3.0}) {
        double S = 2 * std::sqrt(1 + a * a);
        CHECK(masini_correlation(MasiniCorr::asym_chsh, S, a).v == doctest::Approx(1));
    }
    CHECK(masini_correlation(MasiniCorr::asym_chsh, 2 * sqrt2, 1).v ==
          doctest::Approx(masini_correlation(MasiniCorr::chsh, 2 * sqrt2).v));
    double g = 2.2 * 2.2 / 4 - 1, in = 1 - std::sqrt(0.75 * g) / 0.5;
    CHECK(masini_correlation(MasiniCorr::asym_chsh, 2.2, 0.5).v == doctest::Approx(std::sqrt(1 - in * in)));
}

TEST_CASE("entropy accumulation")
{
    EatParams p;
    CHECK(eat_bound(p) <= 0);
    auto d = default_chsh_eat(1e15);
    double per = eat_bound(d) / d.n;
    CHECK(per <= d.t);
    CHECK(d.t - per <= 1e-4);
    // nu from its definition
    double nu = 2 * (std::log2(5.0) + std::ceil(d.grad_inf)) * std::sqrt(1 - 2 * std::log2(1e-10));
    CHECK(eat_nu(d) == doctest::Approx(nu));
    auto tr = chsh_tangent_tradeoff(2.7);
    for (double S = 2.05; S < 2.82; S += 0.05) CHECK(tr.at(S) <= 1 - holevo_chsh(S).v + 1e-12);
    CHECK(aep_bound(100, 0.5, 1) == doctest::Approx(40));

    auto v = vv_noise_tolerance();
    CHECK(std::fabs(v.x - 0.016) <= 0.003);
    CHECK(vv_rate_opt(0.005).r > 0);
    CHECK(vv_rate_opt(0.005, 1e8).r < vv_rate_opt(0.005).r);
}

TEST_CASE("generalised EAT")
{
    GeatParams g;
    g.n = 1e8;
    g.t = 0.5;
    double prev = 1e300;
    for (double var : {0.0, 1.0, 4.0, 16.0}) {
        g.varF = var;
        double b = geat_bound(g);
        CHECK(b < prev);
        CHECK(b / g.n <= g.t);
        prev = b;
    }
    g.varF = 1;
    double b1 = geat_bound(g);
    double tail = -std::log2(1e-20 / 2) / (g.alpha - 1);
    g.n *= 2;
    CHECK(std::isfinite(b1));
    CHECK(geat_bound(g) >= 2 * b1 + tail - 1e-6 * std::fabs(b1));
    double best;
    auto opt = geat_best_alpha(g, &best);
    CHECK(opt.alpha > 1);
    CHECK(opt.alpha < 1.5);
    CHECK(best >= geat_bound(g) - 1e-9);
    g.alpha = 2;
    CHECK_THROWS_AS(geat_bound(g), DomainError);
}
