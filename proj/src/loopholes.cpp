#include "diqkd/loopholes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "diqkd/numeric.hpp"
#include "diqkd/polytope.hpp"

namespace diqkd {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

void check_unit(double v, const char* what)
{
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError(std::string(what) + " outside [0,1]");
}

}  // namespace

DetectionModel DetectionModel::delta(double etaA, double etaB, int outcome, int nX, int nY)
{
    DetectionModel d;
    d.etaA = etaA;
    d.etaB = etaB;
    d.qA.assign(static_cast<std::size_t>(2 * nX), 0.0);
    d.qB.assign(static_cast<std::size_t>(2 * nY), 0.0);
    for (int x = 0; x < nX; ++x) d.qA[static_cast<std::size_t>(outcome * nX + x)] = 1.0;
    for (int y = 0; y < nY; ++y) d.qB[static_cast<std::size_t>(outcome * nY + y)] = 1.0;
    return d;
}

void DetectionModel::validate(int nA, int nB, int nX, int nY) const
{
    check_unit(etaA, "etaA");
    check_unit(etaB, "etaB");
    if (qA.size() != static_cast<std::size_t>(nA * nX) || qB.size() != static_cast<std::size_t>(nB * nY))
        throw ShapeError("detection model: assignment table shape does not match the behavior");
    for (int x = 0; x < nX; ++x) {
        double s = 0.0;
        for (int a = 0; a < nA; ++a) {
            double v = qA[static_cast<std::size_t>(a * nX + x)];
            if (v < -1e-12) throw DomainError("detection model: negative assignment probability");
            s += v;
        }
        if (std::fabs(s - 1.0) > 1e-12) throw DomainError("detection model: qA column does not sum to 1");
    }
    for (int y = 0; y < nY; ++y) {
        double s = 0.0;
        for (int b = 0; b < nB; ++b) {
            double v = qB[static_cast<std::size_t>(b * nY + y)];
            if (v < -1e-12) throw DomainError("detection model: negative assignment probability");
            s += v;
        }
        if (std::fabs(s - 1.0) > 1e-12) throw DomainError("detection model: qB column does not sum to 1");
    }
}

Behavior apply_detection(const Behavior& p, const DetectionModel& d)
{
    d.validate(p.nA, p.nB, p.nX, p.nY);
    const double eA = d.etaA, eB = d.etaB;
    Behavior out(p.nA, p.nB, p.nX, p.nY);
    for (int x = 0; x < p.nX; ++x)
        for (int y = 0; y < p.nY; ++y) {
            // Marginals taken at the same (x,y) keep the map affine for any input.
            std::vector<double> pa(p.nA, 0.0), pb(p.nB, 0.0);
            for (int a = 0; a < p.nA; ++a)
                for (int b = 0; b < p.nB; ++b) {
                    pa[a] += p(a, b, x, y);
                    pb[b] += p(a, b, x, y);
                }
            for (int a = 0; a < p.nA; ++a)
                for (int b = 0; b < p.nB; ++b) {
                    double qa = d.qA[static_cast<std::size_t>(a * p.nX + x)];
                    double qb = d.qB[static_cast<std::size_t>(b * p.nY + y)];
                    out(a, b, x, y) = eA * eB * p(a, b, x, y) + eA * (1 - eB) * pa[a] * qb +
                                      (1 - eA) * eB * qa * pb[b] + (1 - eA) * (1 - eB) * qa * qb;
                }
        }
    return out;
}

double effective_chsh(double S, double etaA, double etaB, double mA0, double mB0)
{
    check_unit(etaA, "etaA");
    check_unit(etaB, "etaB");
    if (std::fabs(mA0) > 1.0 || std::fabs(mB0) > 1.0) throw DomainError("effective_chsh: marginal mean outside [-1,1]");
    return etaA * etaB * S + 2 * etaA * (1 - etaB) * mA0 + 2 * (1 - etaA) * etaB * mB0 + 2 * (1 - etaA) * (1 - etaB);
}

Root cde_symmetric_maxent()
{
    return num::bisect([](double e) { return 2 * kSqrt2 * e * e + 2 * (1 - e) * (1 - e) - 2.0; }, 0.5, 1.0, 1e-12);
}

namespace {

double facet_violation(double theta, const std::vector<double>& ang, double eta)
{
    auto st = tilted_state(theta);
    Behavior b = born_behavior(st, {Measurement(ang[0]), Measurement(ang[1])}, {Measurement(ang[2]), Measurement(ang[3])});
    return chsh_max_facet(apply_detection(b, DetectionModel::delta(eta, eta)));
}

struct AngleOpt {
    std::vector<double> angles;
    double value;
    bool converged;
};

AngleOpt optimize_angles(double theta, double eta, const std::vector<std::vector<double>>& seeds, int budget)
{
    AngleOpt best{seeds.front(), -1.0, false};
    for (const auto& s : seeds) {
        auto r = num::nelder_mead([&](const std::vector<double>& a) { return -facet_violation(theta, a, eta); }, s, 0.3, budget, 1e-10);
        if (-r.fx > best.value) best = {r.x, -r.fx, r.converged};
    }
    return best;
}

EberhardPoint scan_one(double theta, int budget)
{
    const double pi = std::numbers::pi;
    std::vector<std::vector<double>> seeds = {{0.0, pi / 2, pi / 4, -pi / 4}};
    std::mt19937_64 rng(0x5eedULL + static_cast<unsigned long long>(theta * 1e6));
    std::uniform_real_distribution<double> U(-pi, pi);
    for (int k = 0; k < 7; ++k) seeds.push_back({U(rng), U(rng), U(rng), U(rng)});
    const auto prs = pr_boxes();

    auto nonlocal_at = [&](double eta, AngleOpt& opt) {
        opt = optimize_angles(theta, eta, seeds, budget);
        seeds[0] = opt.angles;  // warm start the next bisection step
        if (opt.value <= 2.0) return std::pair{false, 1.0};
        auto st = tilted_state(theta);
        const auto& a = opt.angles;
        Behavior b = born_behavior(st, {Measurement(a[0]), Measurement(a[1])}, {Measurement(a[2]), Measurement(a[3])});
        auto cc = cc_local_weight(apply_detection(b, DetectionModel::delta(eta, eta)), prs);
        double qL = cc.status == LpStatus::optimal ? cc.q_L : 1.0;
        return std::pair{qL < 1.0 - 1e-6, qL};
    };

    double lo = 0.5, hi = 1.0;
    AngleOpt opt{}, best_hi{};
    auto top = nonlocal_at(hi, best_hi);
    EberhardPoint pt{theta, 1.0, best_hi.angles, top.second, best_hi.converged && top.first};
    if (!top.first) return pt;
    while (hi - lo > 1e-4) {
        double mid = 0.5 * (lo + hi);
        auto r = nonlocal_at(mid, opt);
        if (r.first) {
            hi = mid;
            best_hi = opt;
            pt.q_L = r.second;
        } else {
            lo = mid;
        }
    }
    pt.eta_star = hi;
    pt.angles = best_hi.angles;
    pt.converged = best_hi.converged;
    return pt;
}

}  // namespace

std::vector<EberhardPoint> eberhard_scan(const std::vector<double>& theta_grid, int budget)
{
    for (double t : theta_grid)
        if (!(t > 0.0 && t <= std::numbers::pi / 4 + 1e-12)) throw DomainError("eberhard_scan: theta outside (0, pi/4]");
    if (budget < 10) throw DomainError("eberhard_scan: budget too small");
    std::vector<EberhardPoint> out(theta_grid.size());
    num::parallel_for(theta_grid.size(), [&](std::size_t i) { out[i] = scan_one(theta_grid[i], budget); });
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.theta > b.theta; });
    return out;
}

std::vector<double> eberhard_default_grid()
{
    return {std::numbers::pi / 4, 0.6, 0.5, 0.4, 0.3, 0.2, 0.15, 0.1, 0.05};
}

bool eberhard_monotone(const std::vector<EberhardPoint>& pts, double slack)
{
    // pts sorted by decreasing theta; eta* must not increase along the list.
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (pts[i].eta_star > pts[i - 1].eta_star + slack) return false;
    return true;
}

double routed_s1_bound(double S0)
{
    if (!(S0 >= 2.0 - 1e-12 && S0 <= 2 * kSqrt2 + 1e-12)) throw DomainError("routed_s1_bound: S0 outside [2, 2*sqrt2]");
    return std::sqrt(std::max(0.0, 8.0 - S0 * S0));
}

Value routed_critical_eta(RoutedMode mode, const RoutedParams& p)
{
    if (mode == RoutedMode::asymmetric) {
        check_unit(p.etaA0, "etaA0");
        return {std::sqrt(1.0 - p.etaA0 * p.etaA0), Status::ok, ""};
    }
    check_unit(p.eta, "eta");
    const double eta = p.eta;
    const double S0 = 2 * kSqrt2 * eta * eta + 2 * (1 - eta) * (1 - eta);
    if (S0 <= 2.0) return {1.0, Status::clipped, "no violation possible"};
    const double target = std::sqrt(std::max(0.0, 8.0 - S0 * S0));
    auto f = [&](double eA1) { return 2 * kSqrt2 * eA1 * eta + 2 * (1 - eA1) * (1 - eta) - target; };
    if (f(0.0) >= 0.0) return {0.0, Status::ok, ""};
    if (f(1.0) < 0.0) return {1.0, Status::clipped, "no violation possible"};
    return {num::bisect(f, 0.0, 1.0, 1e-12).x, Status::ok, ""};
}

double srq_j1_bound(double S0)
{
    if (!(S0 >= 2.0 - 1e-12 && S0 <= 2 * kSqrt2 + 1e-12)) throw DomainError("srq_j1_bound: S0 outside [2, 2*sqrt2]");
    return 0.5 * (S0 + std::sqrt(std::max(0.0, 8.0 - S0 * S0)));
}

Value srq_universal_eta(double etaB, int mA1, int mB)
{
    check_unit(etaB, "etaB");
    if (mA1 < 2 || mB < 2) throw DomainError("srq_universal_eta: setting counts must be >= 2");
    double den = etaB * (mA1 * mB - 1) - (mA1 - 1);
    if (den <= 0.0) return {0.0, Status::clipped, "bound vacuous"};
    return {etaB * (mB - 1) / den, Status::ok, ""};
}

double sekatski_c_bound(double T, double S0)
{
    check_unit(T, "T");
    if (!(S0 >= 0.0 && S0 <= 2 * kSqrt2 + 1e-12)) throw DomainError("sekatski_c_bound: S0 outside [0, 2*sqrt2]");
    double g = S0 > 2.0 ? (S0 + std::sqrt(std::max(0.0, 8.0 - S0 * S0))) / (2 * kSqrt2) : kSqrt2;
    return 2.0 / std::numbers::pi * std::sin(std::numbers::pi * T / 2.0) * g;
}

}  // namespace diqkd
