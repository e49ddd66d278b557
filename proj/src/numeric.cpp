#include "diqkd/numeric.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

namespace diqkd::num {

Root bisect(const std::function<double(double)>& f, double lo, double hi, double xtol)
{
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return {lo, 0.0, lo, lo};
    if (fhi == 0.0) return {hi, 0.0, hi, hi};
    if (!(flo * fhi < 0.0))
        throw NoRootError("no sign change on [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    auto stop = [xtol](double a, double b) { return std::fabs(b - a) <= xtol; };
    std::uintmax_t iters = 400;
    auto br = boost::math::tools::bisect(f, lo, hi, stop, iters);
    double x = 0.5 * (br.first + br.second);
    return {x, f(x), lo, hi};
}

Max1 maximize_1d(const std::function<double(double)>& f, double lo, double hi, double xtol)
{
    // Brent's golden-section/parabolic search; bits chosen from the tolerance.
    int bits = std::clamp(static_cast<int>(-std::log2(xtol)) + 2, 8, 50);
    std::uintmax_t iters = 500;
    auto r = boost::math::tools::brent_find_minima([&](double x) { return -f(x); }, lo, hi, bits, iters);
    Max1 best{r.first, -r.second};
    // Brent never samples the endpoints exactly.
    for (double e : {lo, hi}) {
        double v = f(e);
        if (v > best.fx) best = {e, v};
    }
    return best;
}

namespace {

struct NmCtx {
    const std::function<double(const std::vector<double>&)>* f;
    std::vector<double> buf;
};

double nm_trampoline(const gsl_vector* v, void* p)
{
    auto* ctx = static_cast<NmCtx*>(p);
    for (std::size_t i = 0; i < v->size; ++i) ctx->buf[i] = gsl_vector_get(v, i);
    double y = (*ctx->f)(ctx->buf);
    return std::isfinite(y) ? y : 1e300;
}

}  // namespace

NmResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                     std::vector<double> x0, double step, int budget, double size_tol)
{
    gsl_set_error_handler_off();
    const std::size_t n = x0.size();
    NmCtx ctx{&f, std::vector<double>(n)};
    gsl_multimin_function fn{&nm_trampoline, n, &ctx};
    gsl_vector* x = gsl_vector_alloc(n);
    gsl_vector* ss = gsl_vector_alloc(n);
    for (std::size_t i = 0; i < n; ++i) gsl_vector_set(x, i, x0[i]);
    gsl_vector_set_all(ss, step);
    gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
    gsl_multimin_fminimizer_set(s, &fn, x, ss);

    int it = 0, st = GSL_CONTINUE;
    while (st == GSL_CONTINUE && it < budget) {
        ++it;
        if (gsl_multimin_fminimizer_iterate(s)) break;
        st = gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), size_tol);
    }
    NmResult out{std::vector<double>(n), s->fval, st == GSL_SUCCESS, it};
    for (std::size_t i = 0; i < n; ++i) out.x[i] = gsl_vector_get(s->x, i);
    gsl_multimin_fminimizer_free(s);
    gsl_vector_free(ss);
    gsl_vector_free(x);
    return out;
}

unsigned worker_count()
{
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("DIQKD_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1) hw = std::min<unsigned>(hw, static_cast<unsigned>(v));
    }
    return hw;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body)
{
    unsigned w = std::min<std::size_t>(worker_count(), n);
    if (w <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < w; ++t)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next++) < n;) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lk(mu);
                    if (!err) err = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace diqkd::num
