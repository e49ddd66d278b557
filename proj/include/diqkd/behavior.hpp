#pragma once

#include <array>
#include <string>
#include <vector>

#include "diqkd/common.hpp"

namespace diqkd {

// Conditional distribution p(ab|xy), stored densely in (a,b,x,y) row-major order.
struct Behavior {
    int nA = 2, nB = 2, nX = 2, nY = 2;
    std::vector<double> table;

    Behavior() : table(16, 0.0) {}
    Behavior(int na, int nb, int nx, int ny)
        : nA(na), nB(nb), nX(nx), nY(ny), table(static_cast<std::size_t>(na * nb * nx * ny), 0.0) {}

    std::size_t index(int a, int b, int x, int y) const
    {
        return static_cast<std::size_t>(((a * nB + b) * nX + x) * nY + y);
    }
    double& operator()(int a, int b, int x, int y) { return table[index(a, b, x, y)]; }
    double operator()(int a, int b, int x, int y) const { return table[index(a, b, x, y)]; }

    bool is_2222() const { return nA == 2 && nB == 2 && nX == 2 && nY == 2; }
    bool same_shape(const Behavior& o) const
    {
        return nA == o.nA && nB == o.nB && nX == o.nX && nY == o.nY;
    }
    // Largest deviation from column normalisation / positivity.
    double normalization_error() const;
    void validate(double tol = 1e-12) const;

    std::string to_json() const;
    static Behavior from_json(const std::string& text);
};

// Prepare-and-measure statistics p(b|prep,y).
struct PMBehavior {
    int nPrep = 0, nY = 0, nB = 2;
    std::vector<double> table;  // (b, prep, y) row-major

    PMBehavior(int nprep, int ny, int nb = 2)
        : nPrep(nprep), nY(ny), nB(nb), table(static_cast<std::size_t>(nprep * ny * nb), 0.0) {}
    double& operator()(int b, int prep, int y) { return table[static_cast<std::size_t>((b * nPrep + prep) * nY + y)]; }
    double operator()(int b, int prep, int y) const { return table[static_cast<std::size_t>((b * nPrep + prep) * nY + y)]; }
    // Correlator with outcome 0 -> +1.
    double correlator(int prep, int y) const { return (*this)(0, prep, y) - (*this)(1, prep, y); }
};

// Eve's mixture of the 8 CHSH-saturating strategies l_j^r and the PR box.
struct EveWeights {
    std::array<std::array<double, 2>, 4> p{};  // p[j-1][r]
    double pNL = 0.0;

    double local_total() const;
    void validate(double tol = 1e-12) const;
    static EveWeights isotropic(double pNL);
};

struct Chsh {
    double beta;     // sum_xy [p(a+b=xy) - p(a+b!=xy)]
    double beta_up;  // sum_xy p(a+b=xy), equals 2 + beta/2
};

Behavior pr_box();
Behavior isotropic_behavior(double v);
Behavior uniform_behavior(int nA = 2, int nB = 2, int nX = 2, int nY = 2);
// Deterministic box a = a_of_x[x], b = b_of_y[y].
Behavior deterministic_behavior(const std::vector<int>& a_of_x, const std::vector<int>& b_of_y, int nA = 2,
                                int nB = 2);
// All deterministic vertices; for the (2,2,2,2) case these are the 16 vertices ordered by (a0,a1,b0,b1).
std::vector<Behavior> deterministic_vertices(int nA = 2, int nB = 2, int nX = 2, int nY = 2);
// The strategy l_j^r (j in 1..4, r in 0..1).
Behavior eve_vertex(int j, int r);

Chsh chsh_value(const Behavior& b);
// Largest |CHSH| over the 8 relabelled CHSH facets.
double chsh_max_facet(const Behavior& b);
double no_signaling_check(const Behavior& b);
double chained_value(const Behavior& b, int M);
double monogamy_max(double beta_ab);

Behavior eve_strategy_behavior(const EveWeights& w);

// Tables after pseudosifting. table[x][a][b] is Alice/Bob's distribution for
// setting x; eve[x][a][b][k] splits it by Eve's knowledge, k = 0 for (?,?),
// 1 for (a,?), 2 for (a,b).
struct PseudosiftResult {
    std::array<std::array<std::array<double, 2>, 2>, 2> table{};
    std::array<std::array<std::array<std::array<double, 3>, 2>, 2>, 2> eve{};
    std::array<double, 2> h_b_given_e{};  // H(B|E, X=x) with E the strategy label
};
PseudosiftResult pseudosift(const EveWeights& w, double xi0);

double witness_I3(const PMBehavior& pm);
double witness_S_pm(const PMBehavior& pm);
// Pure qubit preparations and measurements in the x-z plane (Bloch angles).
PMBehavior pm_from_bloch(const std::vector<double>& prep_angles, const std::vector<double>& meas_angles);

}  // namespace diqkd
