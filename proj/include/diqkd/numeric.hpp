#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "diqkd/common.hpp"

namespace diqkd::num {

// Bisection on a bracket whose endpoints have opposite signs.
// Throws NoRootError when the bracket does not verify.
Root bisect(const std::function<double(double)>& f, double lo, double hi, double xtol = 1e-10);

struct Max1 {
    double x, fx;
};
// Maximise a unimodal function on [lo, hi]; endpoints are allowed optima.
Max1 maximize_1d(const std::function<double(double)>& f, double lo, double hi, double xtol = 1e-6);

struct NmResult {
    std::vector<double> x;
    double fx;
    bool converged;
    int iterations;
};
// Nelder-Mead minimisation with an evaluation budget.
NmResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                     std::vector<double> x0, double step, int budget, double size_tol = 1e-9);

// Worker count: hardware concurrency capped by DIQKD_THREADS when set.
unsigned worker_count();

// Run body(i) for i in [0, n) over worker_count() threads.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace diqkd::num
