#include "diqkd/keyrates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "diqkd/numeric.hpp"

namespace diqkd {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kSmax = 2.0 * std::numbers::sqrt2;

void check_range(double v, double lo, double hi, const char* what)
{
    if (!(v >= lo && v <= hi))
        throw DomainError(std::string(what) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

double S_clamped(double S)
{
    if (!(S <= kSmax + 1e-9)) throw DomainError("CHSH value above 2*sqrt2");
    return std::min(S, kSmax);
}

}  // namespace

double binary_entropy(double q)
{
    check_range(q, 0.0, 1.0, "binary_entropy argument");
    if (q == 0.0 || q == 1.0) return 0.0;
    return -q * std::log2(q) - (1.0 - q) * std::log2(1.0 - q);
}

Value holevo_chsh(double S)
{
    S = S_clamped(S);
    if (S < 2.0) return {1.0, Status::clipped, "no CHSH violation"};
    return {binary_entropy(0.5 + std::sqrt(S * S - 4.0) / 4.0), Status::ok, ""};
}

double holevo_chsh_slope(double S)
{
    check_range(S, 2.0, kSmax, "holevo_chsh_slope S");
    if (S <= 2.0 || S >= kSmax) return -std::numeric_limits<double>::infinity();
    double u = std::sqrt(S * S - 4.0);
    double x = 0.5 + u / 4.0;
    // h'(x) dx/dS with dx/dS = S / (4u)
    return std::log2((1.0 - x) / x) * S / (4.0 * u);
}

Value dw_rate_chsh(double S, double Q)
{
    check_range(Q, 0.0, 1.0, "QBER");
    Value chi = holevo_chsh(S);
    return {1.0 - binary_entropy(Q) - chi.v, chi.status, chi.note};
}

double dw_generic(double I_AB, double I_AE) { return I_AB - I_AE; }

Value dw_rate_noisy_preproc(double S, double Q, double q)
{
    check_range(Q, 0.0, 1.0, "QBER");
    check_range(q, 0.0, 0.5, "preprocessing q");
    Value chi0 = holevo_chsh(S);
    double Sc = std::min(std::max(S, 2.0), kSmax);
    double root = std::sqrt(std::max(0.0, 1.0 - q * (1.0 - q) * (8.0 - Sc * Sc)));
    double chi = chi0.v - binary_entropy(std::min(1.0, (1.0 + root) / 2.0));
    if (chi0.status == Status::clipped) chi = 1.0;
    double Qq = (1.0 - q) * Q + q * (1.0 - Q);
    return {1.0 - binary_entropy(Qq) - chi, chi0.status, chi0.note};
}

QOpt dw_noisy_optimize(double S, double Q)
{
    auto m = num::maximize_1d([&](double q) { return dw_rate_noisy_preproc(S, Q, q).v; }, 0.0, 0.5, 1e-7);
    return {m.x, m.fx};
}

double noisy_preproc_margin(double S, double Q)
{
    // Second-order coefficient of the rate in u = 1/2 - q, up to the factor 2/ln 2.
    if (S <= 2.0) return -1.0;
    S = std::min(S, kSmax);
    double c = std::sqrt(S * S / 4.0 - 1.0);
    double ratio = c < 1e-6 ? 1.0 + c * c / 3.0 : std::atanh(std::min(c, 1.0 - 1e-16)) / c;
    return (1.0 - 2.0 * Q) * (1.0 - 2.0 * Q) - ratio * (8.0 - S * S) / 4.0;
}

double chsh_eta_S(double eta) { return 2 * kSqrt2 * eta * eta + 2 * (1 - eta) * (1 - eta); }
double chsh_eta_Q(double eta) { return eta * (1 - eta); }

Root critical_qber_dw()
{
    return num::bisect([](double Q) { return dw_rate_chsh(kSmax * (1 - 2 * Q), Q).v; }, 1e-6, 0.2, 1e-12);
}

Root critical_eta_dw()
{
    return num::bisect([](double e) { return dw_rate_chsh(chsh_eta_S(e), chsh_eta_Q(e)).v; }, 0.85, 1.0 - 1e-9, 1e-12);
}

double chain_m_rate(double p, int M)
{
    check_range(p, 0.0, 1.0, "visibility p");
    if (M < 2) throw DomainError("chain_m_rate: M >= 2");
    return 1.0 - binary_entropy((1.0 + p) / 2.0) - M * (1.0 - p * std::cos(std::numbers::pi / (2.0 * M)));
}

Root chain_m_root(int M)
{
    return num::bisect([M](double p) { return chain_m_rate(p, M); }, 0.5, 1.0, 1e-12);
}

double ns_pnl_from_D(double D) { return kSqrt2 * (1.0 - 2.0 * D) - 1.0; }

double ns_chsh_rate_pnl(double pNL, double q)
{
    check_range(pNL, 0.0, 1.0, "p_NL");
    check_range(q, 0.0, 0.5, "preprocessing q");
    double pL = 1.0 - pNL;
    double e = pL / 4.0;
    double ep = (1.0 - q) * e + q * (1.0 - e);
    return 1.0 - binary_entropy(ep) - pL / 2.0 * (1.0 - binary_entropy(q));
}

Value ns_chsh_rate(double D, double q)
{
    double pNL = ns_pnl_from_D(D);
    if (!(pNL >= -1e-12 && pNL <= 1.0 + 1e-12)) throw DomainError("ns_chsh_rate: D gives p_NL outside [0,1]");
    return {ns_chsh_rate_pnl(std::clamp(pNL, 0.0, 1.0), q), Status::ok, ""};
}

QOpt ns_optimize(double pNL)
{
    auto m = num::maximize_1d([&](double q) { return ns_chsh_rate_pnl(pNL, q); }, 0.0, 0.5, 1e-8);
    return {m.x, m.fx};
}

Root ns_threshold_no_preproc()
{
    return num::bisect([](double p) { return ns_chsh_rate_pnl(p, 0.0); }, 0.01, 1.0, 1e-12);
}

Root ns_threshold_optimal()
{
    // Near the threshold the optimal q tends to 1/2; the rate is positive there
    // iff its curvature in (1/2 - q) is, i.e. (1 - p_L/2)^2 > p_L/2.
    return num::bisect(
        [](double pNL) {
            double pL = 1.0 - pNL;
            return (1.0 - pL / 2.0) * (1.0 - pL / 2.0) - pL / 2.0;
        },
        0.0, 1.0, 1e-12);
}

double ck_rate_special(double p_L)
{
    check_range(p_L, 0.0, 1.0, "p_L");
    return 1.0 - binary_entropy(p_L / 2.0) / 2.0 - p_L / 2.0;
}

double intrinsic_info_conjecture(double p_L)
{
    check_range(p_L, 0.0, 1.0, "p_L");
    return (1.0 - p_L / 2.0) * (1.0 - binary_entropy(p_L / (4.0 - 2.0 * p_L)));
}

AdResult ad_error_recursion(double e, int N, double f)
{
    if (!(e > 0.0 && e < 0.5)) throw DomainError("ad_error_recursion: e outside (0, 1/2)");
    if (N < 1) throw DomainError("ad_error_recursion: N >= 1");
    // e^N / ((1-e)^N + e^N) written as 1 / (1 + ((1-e)/e)^N) to avoid underflow.
    double lr = N * std::log((1.0 - e) / e);
    double et = lr > 700.0 ? std::exp(-lr) : 1.0 / (1.0 + std::exp(lr));
    double ratio = e / (1.0 - e);
    return {et, ratio, f >= 0.0 && f > ratio};
}

Chain06 chain06_bounds(double p)
{
    check_range(p, 0.0, 1.0, "visibility p");
    return {kSqrt2 * p - 1.0 - binary_entropy((1.0 + p) / 2.0), (1.0 + kSqrt2) * p - 2.0};
}

Root chain06_lower_root()
{
    return num::bisect([](double p) { return chain06_bounds(p).r_lower; }, 0.75, 1.0, 1e-12);
}

Root chain06_upper_root()
{
    return num::bisect([](double p) { return chain06_bounds(p).i_upper; }, 0.0, 1.0, 1e-12);
}

double ns_uncertainty(double e)
{
    check_range(e, 0.0, 0.5, "e_AB");
    return 1.0 - 2.0 * e;
}

Value chsh_l_rate(double S, double Q, double eta)
{
    check_range(Q, 0.0, 0.5, "Q_tol");
    if (!(eta > 0.0 && eta <= 1.0)) throw DomainError("chsh_l_rate: eta_tol outside (0,1]");
    S = S_clamped(S);
    if (S < 0.0) throw DomainError("chsh_l_rate: negative S_tol");
    return {1.0 - std::log2(1.0 + S / (4.0 * eta) * std::sqrt(std::max(0.0, 8.0 - S * S))) - 2.0 * binary_entropy(Q), Status::ok, ""};
}

double cc_eta_loc() { return 2.0 * (kSqrt2 - 1.0); }

namespace {

double cc_two_way_arg(double eta) { return (1.0 - eta) / (1.0 - 2.0 * (1.0 + kSqrt2) * (1.0 - eta)); }

}  // namespace

CcUpper cc_upper_bounds(double eta)
{
    check_range(eta, 0.0, 1.0, "eta");
    CcUpper out;
    if (eta < cc_eta_loc() - 1e-12) {
        out.q_L = {1.0, Status::clipped, "behavior local, rate 0"};
        out.r1 = out.r2 = {0.0, Status::clipped, "behavior local, rate 0"};
        return out;
    }
    const double a = 3.0 + 2.0 * kSqrt2;
    out.q_L = {std::min(1.0, (1.0 - eta) * (1.0 + a * eta)), Status::ok, ""};
    out.r1 = {a * eta * eta - 2.0 * (1.0 + kSqrt2) * eta - eta / 2.0 * binary_entropy(eta) -
                  (1.0 - eta) * binary_entropy(eta / 2.0),
              Status::ok, ""};
    double arg = cc_two_way_arg(eta);
    if (!(arg >= 0.0 && arg <= 0.5)) {
        out.r2 = {0.0, Status::clipped, "two-way error above 1/2"};
    } else {
        out.r2 = {eta * (2.0 * (1.0 + kSqrt2) * eta - 2.0 * kSqrt2 - 1.0) * (1.0 - binary_entropy(arg)), Status::ok, ""};
    }
    return out;
}

Root cc_one_way_root()
{
    return num::bisect([](double e) { return cc_upper_bounds(e).r1.v; }, 0.85, 0.99, 1e-12);
}

Root cc_two_way_root()
{
    // The bound vanishes where its error argument reaches 1/2.
    Root r = num::bisect([](double e) { return 0.5 - cc_two_way_arg(e); }, cc_eta_loc() + 1e-9, 1.0, 1e-12);
    r.residual = cc_upper_bounds(r.x).r2.v;
    return r;
}

SdiRate sdi_rate(double P_B)
{
    check_range(P_B, 0.5, 1.0, "P_B");
    const double sum = (5.0 + std::sqrt(3.0)) / 4.0;
    double PE = std::clamp(sum - P_B, 0.5, 1.0);
    return {binary_entropy(PE) - binary_entropy(P_B), sum / 2.0, PE};
}

double sdi_optimal_PB() { return (2.0 * kSqrt2 + 4.0) / 8.0; }

SdiLossy sdi_lossy_thresholds(double eta)
{
    if (!(eta > 0.0 && eta <= 1.0)) throw DomainError("sdi_lossy_thresholds: eta outside (0,1]");
    double k = (1.0 - eta) / (1.0 + eta);
    double alpha = std::atan(k);
    return {0.5 * (1.0 + 1.0 / (1.0 + eta)), 0.25 * (2.0 + std::cos(alpha) + k * std::sin(alpha))};
}

Value one_sided_rate(double etaA, double Q1ps, double Q2, double q)
{
    check_range(etaA, 0.0, 1.0, "etaA");
    check_range(Q1ps, 0.0, 1.0, "Q1ps");
    check_range(Q2, 0.0, 1.0, "Q2");
    check_range(q, 0.0, 1.0, "q");
    return {etaA * (1.0 - binary_entropy(Q1ps)) - binary_entropy(Q2) - (1.0 - q), Status::ok, ""};
}

Root one_sided_critical()
{
    return num::bisect([](double e) { return one_sided_rate(e, 0.0, (1.0 - e) / 2.0, 1.0).v; }, 0.5, 1.0, 1e-12);
}

Value mabk_entropy(double m)
{
    if (!(m <= 4.0 + 1e-12)) throw DomainError("mabk_entropy: m above 4");
    if (m < kSmax) return {0.0, Status::clipped, "bound vacuous"};
    m = std::min(m, 4.0);
    return {1.0 - binary_entropy(0.5 + 0.5 * std::sqrt(std::max(0.0, m * m / 8.0 - 1.0))), Status::ok, ""};
}

Value holz_entropy(double betaH)
{
    if (betaH < std::sqrt(3.0)) return {0.0, Status::clipped, "bound vacuous"};
    double arg = (betaH + 1.0 + std::sqrt(betaH * betaH - 3.0)) / 4.0;
    if (arg > 1.0 + 1e-12) throw DomainError("holz_entropy: beta_H above 2");
    return {1.0 - binary_entropy(std::min(arg, 1.0)), Status::ok, ""};
}

double masini_phi(double x)
{
    check_range(x, -1.0 - 1e-12, 1.0 + 1e-12, "phi argument");
    return binary_entropy(std::clamp(0.5 + 0.5 * x, 0.0, 1.0));
}

namespace {

double masini_f(double q, double x)
{
    return 1.0 + masini_phi(std::sqrt((1 - 2 * q) * (1 - 2 * q) + 4 * q * (1 - q) * x * x)) - masini_phi(x);
}

}  // namespace

double masini_bounds(MasiniKind kind, const MasiniParams& mp)
{
    check_range(mp.x, 0.0, 1.0, "correlator x");
    check_range(mp.q, 0.0, 0.5, "q");
    switch (kind) {
    case MasiniKind::bb84: return 1.0 - masini_phi(mp.x);
    case MasiniKind::noisy: return masini_f(mp.q, mp.x);
    case MasiniKind::noisy_biased: {
        check_range(mp.z, 0.0, 1.0, "bias z");
        if (mp.z * mp.z + mp.x * mp.x > 1.0 + 1e-12) throw DomainError("noisy_biased: z^2 + x^2 > 1");
        const double q = mp.q, z = mp.z, x = mp.x;
        double Rp = std::sqrt((1 - 2 * q + z) * (1 - 2 * q + z) + 4 * q * (1 - q) * x * x);
        double Rm = std::sqrt((1 - 2 * q - z) * (1 - 2 * q - z) + 4 * q * (1 - q) * x * x);
        return 1.0 + masini_phi(std::min(1.0, 0.5 * (Rp + Rm))) - masini_phi(std::min(1.0, std::sqrt(z * z + x * x)));
    }
    case MasiniKind::two_basis:
        check_range(mp.p, 0.0, 1.0, "basis weight p");
        check_range(mp.x2, 0.0, 1.0, "correlator x2");
        return masini_f(mp.q, std::sqrt(mp.p * mp.x * mp.x + (1 - mp.p) * mp.x2 * mp.x2));
    }
    throw DomainError("masini_bounds: unknown kind");
}

Value masini_correlation(MasiniCorr kind, double S, double alpha)
{
    if (kind == MasiniCorr::chsh) {
        S = S_clamped(S);
        if (S < 2.0) return {0.0, Status::clipped, "no CHSH violation"};
        return {std::sqrt(S * S / 4.0 - 1.0), Status::ok, ""};
    }
    const double a = std::fabs(alpha);
    if (a == 0.0) throw DomainError("masini_correlation: alpha = 0");
    const double smax = 2.0 * std::sqrt(1.0 + alpha * alpha);
    if (!(S <= smax + 1e-9)) throw DomainError("masini_correlation: S_alpha above 2 sqrt(1 + alpha^2)");
    S = std::min(S, smax);
    if (a >= 1.0) {
        double v = S * S / 4.0 - alpha * alpha;
        if (v <= 0.0) return {0.0, Status::clipped, "bound vacuous"};
        return {std::sqrt(v), Status::ok, ""};
    }
    double g = S * S / 4.0 - 1.0;
    if (g <= 0.0) return {0.0, Status::clipped, "bound vacuous"};
    double inner = 1.0 - std::sqrt((1.0 - alpha * alpha) * g) / a;
    return {std::sqrt(std::max(0.0, 1.0 - inner * inner)), Status::ok, ""};
}

double eat_nu(const EatParams& p)
{
    if (!(p.eps > 0.0 && p.eps < 1.0)) throw DomainError("eat: eps outside (0,1)");
    if (!(p.p_event > 0.0 && p.p_event <= 1.0)) throw DomainError("eat: p_event outside (0,1]");
    if (p.dimO < 1) throw DomainError("eat: dimO >= 1");
    if (!(p.grad_inf >= 0.0)) throw DomainError("eat: grad_inf must be nonnegative");
    return 2.0 * (std::log2(1.0 + 2.0 * p.dimO) + std::ceil(p.grad_inf)) * std::sqrt(1.0 - 2.0 * std::log2(p.eps * p.p_event));
}

double eat_bound(const EatParams& p)
{
    if (!(p.n >= 1.0)) throw DomainError("eat: n >= 1");
    return p.n * p.t - eat_nu(p) * std::sqrt(p.n);
}

Tradeoff chsh_tangent_tradeoff(double S0)
{
    if (!(S0 > 2.0 && S0 < kSmax)) throw DomainError("tangent anchor must lie in (2, 2*sqrt2)");
    double slope = -holevo_chsh_slope(S0);
    // S = 8w - 4 in terms of the winning frequency w.
    return {S0, 1.0 - holevo_chsh(S0).v, slope, 8.0 * std::fabs(slope)};
}

EatParams default_chsh_eat(double n)
{
    Tradeoff tr = chsh_tangent_tradeoff();
    EatParams p;
    p.n = n;
    p.t = tr.F0;
    p.grad_inf = tr.grad_inf;
    p.dimO = 2;
    p.eps = 1e-10;
    p.p_event = 1.0;
    return p;
}

double aep_bound(double n, double H_single, double c_eps)
{
    if (!(n >= 1.0)) throw DomainError("aep: n >= 1");
    if (!(c_eps >= 0.0)) throw DomainError("aep: c_eps >= 0");
    return n * H_single - c_eps * std::sqrt(n);
}

double vv_bound(double Q, double n, double eps, double tau, double tau_prime)
{
    check_range(Q, 0.0, 0.5, "Q");
    check_range(tau, 0.0, 1.0 - 1e-15, "tau");
    check_range(tau_prime, 0.0, 1.0, "tau'");
    if (!(tau + tau_prime > 1.0 - 1e-15)) throw DomainError("vv: requires tau + tau' > 1");
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("vv: eps outside (0,1)");
    double main = -6.0 * (1.0 - tau_prime) * std::log2(11.0 / 12.0 + 3.0 / 8.0 * std::sqrt(Q / (1.0 - tau)));
    if (n <= 0.0) return main;
    if (Q == 0.0) return -std::numeric_limits<double>::infinity();
    return main - std::log2(1.0 / eps) / (2.0 * Q * Q * n);
}

VvOpt vv_rate_opt(double Q, double n, double eps)
{
    auto f = [&](double tau) { return vv_bound(Q, n, eps, tau, 1.0 - tau) - binary_entropy(Q); };
    auto m = num::maximize_1d(f, 0.0, 1.0 - 1e-12, 1e-10);
    return {m.x, m.fx};
}

Root vv_noise_tolerance(double n, double eps)
{
    return num::bisect([&](double Q) { return vv_rate_opt(Q, n, eps).r; }, 1e-5, 0.1, 1e-10);
}

double geat_bound(const GeatParams& p)
{
    if (!(p.alpha > 1.0 && p.alpha < 1.5)) throw DomainError("geat: alpha outside (1, 3/2)");
    if (!(p.n >= 1.0)) throw DomainError("geat: n >= 1");
    if (!(p.eps > 0.0 && p.eps < 1.0)) throw DomainError("geat: eps outside (0,1)");
    if (!(p.p_event > 0.0 && p.p_event <= 1.0)) throw DomainError("geat: p_event outside (0,1]");
    if (p.dA < 1) throw DomainError("geat: dA >= 1");
    if (!(p.varF >= 0.0)) throw DomainError("geat: varF >= 0");
    const double a = p.alpha;
    const double r = (a - 1.0) / (2.0 - a);
    const double logd = std::log2(static_cast<double>(p.dA));
    // 1 - sqrt(1 - eps^2) without cancellation
    const double g = -std::log2(p.eps * p.eps / (1.0 + std::sqrt(1.0 - p.eps * p.eps)));
    const double V = std::log2(2.0 * p.dA * p.dA + 1.0) + std::sqrt(2.0 + p.varF);
    const double beta = logd + p.maxF - p.minSigmaF;
    const double l3 = std::pow(std::log(std::pow(2.0, beta) + std::exp(2.0)), 3);
    const double K = std::pow(2.0 - a, 3) * l3 / (6.0 * std::pow(3.0 - 2.0 * a, 3) * std::log(2.0)) *
                     std::pow(2.0, r * (beta + logd));
    return p.n * (p.t - r * std::log(2.0) / 2.0 * V * V - r * r * K) - (g - a * std::log2(p.p_event)) / (a - 1.0);
}

GeatParams geat_best_alpha(GeatParams p, double* bound)
{
    double best = -std::numeric_limits<double>::infinity();
    GeatParams arg = p;
    for (int k = 1; k <= 50; ++k) {
        p.alpha = 1.0 + 0.5 * k / 51.0;
        double b = geat_bound(p);
        if (b > best) {
            best = b;
            arg = p;
        }
    }
    if (bound) *bound = best;
    return arg;
}

}  // namespace diqkd

namespace diqkd {

namespace {

// Tilted state cos t|00> + sin t|11>, measurements in the x-z plane, symmetric
// efficiency eta with no-click mapped to outcome 0.
struct TiltedLossy {
    double theta, eta;
    double EA(double a) const { return eta * std::cos(2 * theta) * std::cos(a) + (1 - eta); }
    double EAB(double a, double b) const
    {
        double c2 = std::cos(2 * theta), s2 = std::sin(2 * theta);
        double e = std::cos(a) * std::cos(b) + s2 * std::sin(a) * std::sin(b);
        return eta * eta * e + eta * (1 - eta) * c2 * (std::cos(a) + std::cos(b)) + (1 - eta) * (1 - eta);
    }
    double chsh(const double* z) const
    {
        return EAB(z[0], z[2]) + EAB(z[0], z[3]) + EAB(z[1], z[2]) - EAB(z[1], z[3]);
    }
    double qber(const double* z) const { return (1 - EAB(z[0], z[4])) / 2; }
};

constexpr double kMarginTol = 1e-9;

template <class Objective>
double best_over_starts(double eta, int starts, int budget, NoisyEtaResult* state, Objective obj)
{
    std::mt19937_64 rng(20240611);
    // theta is optimised as log(theta): near threshold the optimum sits at small theta.
    std::uniform_real_distribution<double> logth(std::log(1e-3), std::log(std::numbers::pi / 4));
    std::normal_distribution<double> jit(0.0, 0.3);
    const double pi = std::numbers::pi;
    auto f = [&](const std::vector<double>& z) {
        TiltedLossy m{std::exp(z[0]), eta};
        return -obj(m, z.data() + 1);
    };
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> arg;
    int evals = 0;
    std::vector<std::vector<double>> seeds;
    if (state && state->angles.size() == 5) {
        std::vector<double> w{std::log(state->theta)};
        w.insert(w.end(), state->angles.begin(), state->angles.end());
        seeds.push_back(w);
    }
    for (int s = 0; s < starts; ++s) {
        seeds.push_back({logth(rng), jit(rng), pi / 2 + jit(rng), pi / 4 + jit(rng), -pi / 4 + jit(rng), 0.0});
    }
    for (auto& x0 : seeds) {
        auto r = num::nelder_mead(f, x0, 0.1, budget, 1e-11);
        evals += r.iterations;
        if (-r.fx > best) {
            best = -r.fx;
            arg = r.x;
        }
    }
    if (state) {
        state->theta = std::exp(arg[0]);
        state->angles.assign(arg.begin() + 1, arg.end());
        state->evaluations += evals;
    }
    return best;
}

double margin_objective(const TiltedLossy& m, const double* z)
{
    double S = m.chsh(z);
    if (S <= 2.0) return S - 3.0;
    return noisy_preproc_margin(std::min(S, kSmax - 1e-12), m.qber(z));
}

}  // namespace

double noisy_best_rate(double eta, int starts, int budget, NoisyEtaResult* state)
{
    check_range(eta, 0.0, 1.0, "eta");
    NoisyEtaResult local;
    NoisyEtaResult* st = state ? state : &local;
    auto obj = [&](const TiltedLossy& m, const double* z) {
        double S = m.chsh(z);
        if (S <= 2.0) return S - 2.0;
        QOpt o = dw_noisy_optimize(std::min(S, kSmax), m.qber(z));
        return o.r;
    };
    double r = best_over_starts(eta, starts, budget, st, obj);
    TiltedLossy m{st->theta, eta};
    double S = m.chsh(st->angles.data());
    st->q = S > 2.0 ? dw_noisy_optimize(std::min(S, kSmax), m.qber(st->angles.data())).q : 0.5;
    return std::max(r, 0.0);
}

NoisyEtaResult critical_eta_noisy(int starts, int budget)
{
    // With q free the rate never drops below zero (q = 1/2 gives exactly 0), so the
    // threshold is where the curvature at q -> 1/2 first turns positive.
    NoisyEtaResult res{};
    auto positive = [&](double eta) {
        NoisyEtaResult st{};
        double g = best_over_starts(eta, starts, budget, &st, margin_objective);
        res.evaluations += st.evaluations;
        return g > kMarginTol;
    };
    double lo = 0.75, hi = 0.95;
    if (positive(lo) || !positive(hi)) throw NoRootError("critical_eta_noisy: bracket [0.75, 0.95] does not verify");
    while (hi - lo > 1e-5) {
        double mid = 0.5 * (lo + hi);
        (positive(mid) ? hi : lo) = mid;
    }
    NoisyEtaResult st{};
    best_over_starts(hi, starts, budget, &st, margin_objective);
    res.eta_star = hi;
    res.theta = st.theta;
    res.angles = st.angles;
    res.q = 0.5;
    return res;
}

}  // namespace diqkd
