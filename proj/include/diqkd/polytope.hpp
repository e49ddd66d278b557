#pragma once

#include <vector>

#include "diqkd/behavior.hpp"

namespace diqkd {

// maximise c.x  s.t.  A x = b, x >= 0.  A is row-major, rows x cols.
struct LpProblem {
    int rows = 0, cols = 0;
    std::vector<double> A;
    std::vector<double> b;
    std::vector<double> c;

    double& at(int r, int k) { return A[static_cast<std::size_t>(r * cols + k)]; }
    double at(int r, int k) const { return A[static_cast<std::size_t>(r * cols + k)]; }
    LpProblem(int m, int n) : rows(m), cols(n), A(static_cast<std::size_t>(m * n), 0.0), b(m, 0.0), c(n, 0.0) {}
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpSolution {
    LpStatus status = LpStatus::infeasible;
    double objective = 0.0;
    std::vector<double> x;
    int pivots = 0;
};

enum class PivotRule { bland, dantzig };

LpSolution lp_solve(const LpProblem& p, PivotRule rule = PivotRule::bland);

struct LocalityResult {
    bool local;
    double distance;               // min L1 distance to the polytope's affine reconstruction
    std::vector<double> weights;  // over deterministic_vertices(), valid when local
};
LocalityResult is_local(const Behavior& b, double tol = 1e-9, PivotRule rule = PivotRule::bland);

// Max of sum coeffs[i]*p_i over the deterministic vertices; coeffs laid out like Behavior::table.
double local_bound(const Behavior& coeffs);
Behavior chsh_coefficients();
Behavior chsh_up_coefficients();

struct CcDecomposition {
    LpStatus status = LpStatus::infeasible;
    double q_L = 0.0;
    std::vector<double> q_local;     // over deterministic_vertices()
    std::vector<double> q_nonlocal;  // over the supplied points
    double reconstruction_error = 0.0;
};
CcDecomposition cc_local_weight(const Behavior& b, const std::vector<Behavior>& nonlocal_points);
// The 8 PR boxes obtained by relabelling inputs and outputs.
std::vector<Behavior> pr_boxes();

// I(A:B|E) at fixed (x,y) for the attack distribution where the local part is
// fully labelled and the nonlocal part carries the label '?'.
double cc_conditional_mutual_info(double q_L, const Behavior& local_part, const Behavior& nonlocal_part, int x, int y);
// Sum_xy p_xy I_xy, p_xy indexed x*nY + y.
double cc_intrinsic_upper(double q_L, const Behavior& local_part, const Behavior& nonlocal_part,
                          const std::vector<double>& p_xy);

}  // namespace diqkd
