#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"

#include "diqkd/loopholes.hpp"
#include "diqkd/polytope.hpp"

using namespace diqkd;
using std::numbers::pi;
using std::numbers::sqrt2;

namespace {

Behavior random_quantum(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> U(0, 2 * pi), P(0, 1);
    std::vector<Measurement> A{Measurement(U(rng)), Measurement(U(rng))};
    std::vector<Measurement> B{Measurement(U(rng)), Measurement(U(rng))};
    auto s = P(rng) < 0.5 ? werner_state(P(rng)) : tilted_state(U(rng));
    return born_behavior(s, A, B);
}

DetectionModel random_model(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> P(0, 1);
    DetectionModel d;
    d.etaA = P(rng);
    d.etaB = P(rng);
    d.qA.resize(4);
    d.qB.resize(4);
    for (int x = 0; x < 2; ++x) {
        double u = P(rng), v = P(rng);
        d.qA[0 * 2 + x] = u;
        d.qA[1 * 2 + x] = 1 - u;
        d.qB[0 * 2 + x] = v;
        d.qB[1 * 2 + x] = 1 - v;
    }
    return d;
}

// Entry-wise map with marginals taken at the same (x,y).
double phat_oracle(const Behavior& p, const DetectionModel& d, int a, int b, int x, int y)
{
    double pa = p(a, 0, x, y) + p(a, 1, x, y), pb = p(0, b, x, y) + p(1, b, x, y);
    double qa = d.qA[a * 2 + x], qb = d.qB[b * 2 + y];
    return d.etaA * d.etaB * p(a, b, x, y) + d.etaA * (1 - d.etaB) * pa * qb + (1 - d.etaA) * d.etaB * qa * pb +
           (1 - d.etaA) * (1 - d.etaB) * qa * qb;
}

}  // namespace

TEST_CASE("detection map")
{
    std::mt19937_64 rng(3);
    auto p = random_quantum(rng);
    auto same = apply_detection(p, DetectionModel::delta(1, 1));
    for (std::size_t k = 0; k < 16; ++k) CHECK(same.table[k] == doctest::Approx(p.table[k]).epsilon(1e-15));

    auto d = random_model(rng);
    d.etaA = d.etaB = 0;
    auto off = apply_detection(p, d);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int x = 0; x < 2; ++x)
                for (int y = 0; y < 2; ++y) CHECK(off(a, b, x, y) == doctest::Approx(d.qA[a * 2 + x] * d.qB[b * 2 + y]));

    auto w = born_behavior(werner_state(1.0), chsh_alice_angles(), chsh_bob_angles());
    double S = chsh_value(apply_detection(w, DetectionModel::delta(0.85, 0.85))).beta;
    CHECK(S == doctest::Approx(2.08854).epsilon(5e-5));

    for (int i = 0; i < 1000; ++i) {
        auto q = random_quantum(rng);
        auto m = random_model(rng);
        auto out = apply_detection(q, m);
        CHECK(out.normalization_error() <= 1e-12);
        CHECK(no_signaling_check(out) <= 1e-12);
        if (i < 100)
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    for (int x = 0; x < 2; ++x)
                        for (int y = 0; y < 2; ++y)
                            CHECK(out(a, b, x, y) == doctest::Approx(phat_oracle(q, m, a, b, x, y)).epsilon(1e-14));
    }
}

TEST_CASE("detection map is affine")
{
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> P(0, 1);
    for (int i = 0; i < 200; ++i) {
        auto p1 = random_quantum(rng), p2 = random_quantum(rng);
        auto d = random_model(rng);
        double lam = P(rng);
        Behavior mix;
        for (std::size_t k = 0; k < 16; ++k) mix.table[k] = lam * p1.table[k] + (1 - lam) * p2.table[k];
        auto lhs = apply_detection(mix, d);
        auto r1 = apply_detection(p1, d), r2 = apply_detection(p2, d);
        for (std::size_t k = 0; k < 16; ++k) CHECK(lhs.table[k] == doctest::Approx(lam * r1.table[k] + (1 - lam) * r2.table[k]).epsilon(1e-12));
    }
}

TEST_CASE("effective chsh")
{
    double eta = 0.924;
    CHECK(effective_chsh(2 * sqrt2, eta, eta, 0, 0) == doctest::Approx(2.4264).epsilon(1e-4));
    CHECK(effective_chsh(2.5, 1, 1, 0.3, -0.2) == doctest::Approx(2.5));
    CHECK_THROWS_AS(effective_chsh(2.5, 0.9, 0.9, 1.5, 0), DomainError);
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> P(0, 1);
    for (int i = 0; i < 100; ++i) {
        auto p = random_quantum(rng);
        double ea = P(rng), eb = P(rng);
        double mA0 = 0, mB0 = 0;
        for (int o = 0; o < 2; ++o) {
            mA0 += (o ? -1 : 1) * (p(o, 0, 0, 0) + p(o, 1, 0, 0));
            mB0 += (o ? -1 : 1) * (p(0, o, 0, 0) + p(1, o, 0, 0));
        }
        double want = chsh_value(apply_detection(p, DetectionModel::delta(ea, eb))).beta;
        CHECK(effective_chsh(chsh_value(p).beta, ea, eb, mA0, mB0) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("critical detection efficiency")
{
    auto r = cde_symmetric_maxent();
    CHECK(r.x == doctest::Approx(2 * (sqrt2 - 1)).epsilon(1e-9));
    CHECK(r.x == doctest::Approx(2 / (1 + sqrt2)).epsilon(1e-9));
    CHECK(std::fabs(2 * sqrt2 * r.x * r.x + 2 * (1 - r.x) * (1 - r.x) - 2) <= 1e-9);
}

TEST_CASE("eberhard points")
{
    auto pts = eberhard_scan({std::numbers::pi / 4, 0.2}, 2000);
    REQUIRE(pts.size() == 2);
    CHECK(pts[0].theta > pts[1].theta);
    CHECK(pts[0].eta_star == doctest::Approx(0.8284).epsilon(0.003));
    CHECK(pts[1].eta_star < 0.75);
    // just above eta*, the optimised behavior is outside the local polytope
    for (const auto& p : pts) {
        CHECK(p.q_L < 1 - 1e-6);
        CHECK(p.angles.size() == 4);
    }
    CHECK(eberhard_monotone(pts));
    CHECK_THROWS_AS(eberhard_scan({1.0}, 100), DomainError);
}

TEST_CASE("routed bounds")
{
    CHECK(routed_s1_bound(2 * sqrt2) == doctest::Approx(0.0));
    CHECK(routed_s1_bound(2.0) == doctest::Approx(2.0));
    CHECK(routed_s1_bound(2.5) == doctest::Approx(1.3229).epsilon(1e-4));
    for (double s = 2.0; s <= 2 * sqrt2; s += 0.05) CHECK(routed_s1_bound(s) == doctest::Approx(monogamy_max(s)));

    RoutedParams p;
    p.etaA0 = 1;
    CHECK(routed_critical_eta(RoutedMode::asymmetric, p).v == 0.0);
    p.etaA0 = 0.9;
    CHECK(routed_critical_eta(RoutedMode::asymmetric, p).v == doctest::Approx(std::sqrt(1 - 0.81)));
    CHECK(routed_critical_eta(RoutedMode::asymmetric, p).v == doctest::Approx(0.43589).epsilon(1e-5));

    const double th = 2 / (1 + sqrt2);
    p.eta = th - 1e-7;
    CHECK(routed_critical_eta(RoutedMode::symmetric, p).status == Status::clipped);
    double prev = 1.0;
    for (double e : {th + 1e-7, 0.85, 0.9, 0.95, 1.0}) {
        p.eta = e;
        auto v = routed_critical_eta(RoutedMode::symmetric, p);
        CHECK(v.status == Status::ok);
        CHECK(v.v < prev);
        // S1 at the returned efficiency meets the tradeoff
        double S0 = 2 * sqrt2 * e * e + 2 * (1 - e) * (1 - e);
        double S1 = 2 * sqrt2 * v.v * e + 2 * (1 - v.v) * (1 - e);
        if (v.v > 0) CHECK(S1 == doctest::Approx(std::sqrt(8 - S0 * S0)).epsilon(1e-9));
        prev = v.v;
    }
}

TEST_CASE("short-range quantum bounds")
{
    CHECK(srq_j1_bound(2 * sqrt2) == doctest::Approx(sqrt2));
    CHECK(srq_j1_bound(2.0) == doctest::Approx(2.0));
    CHECK(srq_j1_bound(2.6) == doctest::Approx((2.6 + std::sqrt(8 - 6.76)) / 2));
    CHECK_THROWS_AS(srq_j1_bound(3.0), DomainError);

    CHECK(srq_universal_eta(1, 2, 2).v == doctest::Approx(0.5));
    CHECK(srq_universal_eta(0.8, 2, 2).v == doctest::Approx(0.8 / (0.8 * 3 - 1)));
    CHECK(srq_universal_eta(0.8, 2, 2).v == doctest::Approx(0.5714).epsilon(1e-4));
    // never below 1/mA1; equality only at etaB = 1
    for (int m : {2, 5, 20, 100})
        for (int mb : {2, 3, 7}) {
            CHECK(srq_universal_eta(1, m, mb).v == doctest::Approx(1.0 / m));
            auto v = srq_universal_eta(0.97, m, mb);
            if (v.status == Status::ok) CHECK(v.v > 1.0 / m);
        }
    CHECK(srq_universal_eta(0.2, 2, 2).status == Status::clipped);

    CHECK(sekatski_c_bound(1, 2 * sqrt2) == doctest::Approx(2 / pi));
    CHECK(sekatski_c_bound(1, 1.5) == doctest::Approx(2 / pi * sqrt2));
    CHECK(sekatski_c_bound(1, 1.5) == doctest::Approx(0.9003).epsilon(1e-4));
    for (double T : {0.01, 0.1, 0.5}) CHECK(T > sekatski_c_bound(T, 2 * sqrt2));
}
