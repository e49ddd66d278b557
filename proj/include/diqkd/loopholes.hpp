#pragma once

#include <vector>

#include "diqkd/behavior.hpp"
#include "diqkd/qcore.hpp"

namespace diqkd {

// No-click events are binned with probabilities qA(a|x), qB(b|y).
struct DetectionModel {
    double etaA = 1.0, etaB = 1.0;
    std::vector<double> qA;  // (a, x) row-major, nA x nX
    std::vector<double> qB;  // (b, y) row-major, nB x nY

    // Both parties output `outcome` on a no-click.
    static DetectionModel delta(double etaA, double etaB, int outcome = 0, int nX = 2, int nY = 2);
    void validate(int nA, int nB, int nX, int nY) const;
};

Behavior apply_detection(const Behavior& b, const DetectionModel& d);
double effective_chsh(double S, double etaA, double etaB, double mA0, double mB0);

Root cde_symmetric_maxent();

struct EberhardPoint {
    double theta;
    double eta_star;
    std::vector<double> angles;  // a0, a1, b0, b1 at eta_star
    double q_L;                  // LP local weight just above eta_star
    bool converged;
};
std::vector<EberhardPoint> eberhard_scan(const std::vector<double>& theta_grid, int angle_optimizer_budget = 2000);
std::vector<double> eberhard_default_grid();
// True when the grid result is non-increasing as theta decreases.
bool eberhard_monotone(const std::vector<EberhardPoint>& pts, double slack = 2e-3);

double routed_s1_bound(double S0);

enum class RoutedMode { asymmetric, symmetric };
struct RoutedParams {
    double S0 = 0.0, S1 = 0.0;
    double etaA0 = 1.0, etaA1 = 1.0, etaB = 1.0;
    int mA1 = 2, mB = 2;
    double T = 1.0;
    double theta = 0.0;
    double eta = 1.0;  // common efficiency in the symmetric mode
};
// Symmetric mode returns status clipped ("no violation possible") below 2/(1+sqrt2).
Value routed_critical_eta(RoutedMode mode, const RoutedParams& p);
double srq_j1_bound(double S0);
Value srq_universal_eta(double etaB, int mA1, int mB);
double sekatski_c_bound(double T, double S0);

}  // namespace diqkd
