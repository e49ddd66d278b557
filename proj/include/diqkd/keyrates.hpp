#pragma once

#include <string>
#include <vector>

#include "diqkd/common.hpp"

namespace diqkd {

double binary_entropy(double q);

// chi0(S) = h(1/2 + sqrt(S^2-4)/4); S < 2 is clipped to 1.
Value holevo_chsh(double S);
double holevo_chsh_slope(double S);  // d chi0 / dS on (2, 2*sqrt2)

Value dw_rate_chsh(double S, double Q);
double dw_generic(double I_AB, double I_AE);

// Bob flips each raw key bit with probability q before reconciliation.
Value dw_rate_noisy_preproc(double S, double Q, double q);
struct QOpt {
    double q, r;
};
QOpt dw_noisy_optimize(double S, double Q);
// Sign of the rate as q -> 1/2: positive iff arbitrarily strong preprocessing yields key.
double noisy_preproc_margin(double S, double Q);

// CHSH with symmetric detection efficiency: Q = eta(1-eta), S = 2 sqrt2 eta^2 + 2 (1-eta)^2.
double chsh_eta_S(double eta);
double chsh_eta_Q(double eta);
Root critical_qber_dw();
Root critical_eta_dw();

struct NoisyEtaResult {
    double eta_star;
    double theta;               // tilted-state angle at eta_star
    std::vector<double> angles;  // a0, a1, b0, b1, b_key
    double q;                    // preprocessing flip probability at eta_star (1/2 when the optimum sits at the limit)
    int evaluations;
};
// Critical efficiency with joint optimisation over the state, angles and q.
NoisyEtaResult critical_eta_noisy(int starts = 16, int budget = 20000);
// Best achievable rate (with q optimised) at efficiency eta; also fills the optimiser state.
double noisy_best_rate(double eta, int starts, int budget, NoisyEtaResult* state = nullptr);

double chain_m_rate(double p, int M);
Root chain_m_root(int M);

// One-way rate against a no-signalling adversary, parametrised by D.
double ns_pnl_from_D(double D);
double ns_chsh_rate_pnl(double pNL, double q);
Value ns_chsh_rate(double D, double q);
QOpt ns_optimize(double pNL);
Root ns_threshold_no_preproc();
Root ns_threshold_optimal();

double ck_rate_special(double p_L);
double intrinsic_info_conjecture(double p_L);

struct AdResult {
    double e_tilde;
    double ratio;  // e/(1-e): Eve's per-block factor must exceed this
    bool secrecy;  // f > ratio, only meaningful when f was supplied
};
AdResult ad_error_recursion(double e, int N, double f = -1.0);

struct Chain06 {
    double r_lower, i_upper;
};
Chain06 chain06_bounds(double p);
Root chain06_lower_root();
Root chain06_upper_root();

double ns_uncertainty(double e);

Value chsh_l_rate(double S, double Q, double eta);

struct CcUpper {
    Value q_L, r1, r2;
};
CcUpper cc_upper_bounds(double eta);
double cc_eta_loc();
Root cc_one_way_root();
Root cc_two_way_root();

struct SdiRate {
    double r, threshold, P_E;
};
SdiRate sdi_rate(double P_B);
double sdi_optimal_PB();
struct SdiLossy {
    double general, minimal;
};
SdiLossy sdi_lossy_thresholds(double eta);

Value one_sided_rate(double etaA, double Q1ps, double Q2, double q);
Root one_sided_critical();

Value mabk_entropy(double m);
Value holz_entropy(double betaH);

enum class MasiniKind { bb84, noisy, noisy_biased, two_basis };
struct MasiniParams {
    double x = 0.0;       // |<A1bar x B>|
    double q = 0.0;       // preprocessing flip probability
    double z = 0.0;       // |<A1>| for the biased bound
    double p = 0.5;       // basis weight for the two-basis bound
    double x2 = 0.0;      // |<A2bar x B'>| for the two-basis bound
};
double masini_phi(double x);
double masini_bounds(MasiniKind kind, const MasiniParams& mp);
enum class MasiniCorr { chsh, asym_chsh };
Value masini_correlation(MasiniCorr kind, double S, double alpha = 1.0);

struct EatParams {
    double n = 1.0;
    double t = 0.0;
    double grad_inf = 0.0;
    int dimO = 2;
    double eps = 1e-10;
    double p_event = 1.0;
};
double eat_nu(const EatParams& p);
double eat_bound(const EatParams& p);

// Tangent of F(S) = 1 - chi0(S) at S0, as a function of the CHSH winning frequency.
struct Tradeoff {
    double S0, F0, slope_S, grad_inf;
    double at(double S) const { return F0 + slope_S * (S - S0); }
};
Tradeoff chsh_tangent_tradeoff(double S0 = 2.7);
EatParams default_chsh_eat(double n);

double aep_bound(double n, double H_single, double c_eps);

double vv_bound(double Q, double n, double eps, double tau, double tau_prime);
struct VvOpt {
    double tau, r;
};
// Max over tau (tau' at its infimum 1 - tau) of vv_bound - h(Q); n <= 0 means n -> infinity.
VvOpt vv_rate_opt(double Q, double n = 0.0, double eps = 1e-10);
Root vv_noise_tolerance(double n = 0.0, double eps = 1e-10);

struct GeatParams {
    double n = 1.0, t = 0.0;
    double alpha = 1.1;
    double eps = 1e-10, p_event = 1.0;
    int dA = 2;
    double maxF = 1.0, minSigmaF = 0.0, varF = 0.0;
};
double geat_bound(const GeatParams& p);
// Best bound over a 50-point alpha grid in (1, 3/2).
GeatParams geat_best_alpha(GeatParams p, double* bound = nullptr);

}  // namespace diqkd
