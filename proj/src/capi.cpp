#include "diqkd/diqkd.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <numbers>
#include <string>

#include "json.hpp"

#include "diqkd/behavior.hpp"
#include "diqkd/keyrates.hpp"
#include "diqkd/loopholes.hpp"
#include "diqkd/polytope.hpp"
#include "diqkd/sim.hpp"

struct diqkd_behavior {
    diqkd::Behavior b;
};

struct diqkd_sim {
    diqkd::SimResult r;
};

namespace {

using json = nlohmann::ordered_json;
using namespace diqkd;

thread_local std::string g_last_error;

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

char* dup_string(const std::string& s)
{
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (p) std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

template <class F>
int guarded(F&& f)
{
    g_last_error.clear();
    try {
        return f();
    } catch (const UsageError& e) {
        g_last_error = e.what();
        return DIQKD_E_USAGE;
    } catch (const DomainError& e) {
        g_last_error = e.what();
        return DIQKD_E_DOMAIN;
    } catch (const ParseError& e) {
        g_last_error = e.what();
        return DIQKD_E_PARSE;
    } catch (const ShapeError& e) {
        g_last_error = e.what();
        return DIQKD_E_SHAPE;
    } catch (const NoRootError& e) {
        g_last_error = e.what();
        return DIQKD_E_NOROOT;
    } catch (const nlohmann::json::exception& e) {
        g_last_error = e.what();
        return DIQKD_E_PARSE;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return DIQKD_E_INTERNAL;
    } catch (...) {
        g_last_error = "unknown failure";
        return DIQKD_E_INTERNAL;
    }
}

void need(const void* p, const char* what)
{
    if (!p) throw UsageError(std::string("null argument: ") + what);
}

double num(const json& j, const char* key)
{
    auto it = j.find(key);
    if (it == j.end()) throw UsageError(std::string("missing parameter '") + key + "'");
    if (!it->is_number()) throw UsageError(std::string("parameter '") + key + "' must be a number");
    return it->get<double>();
}

double num_or(const json& j, const char* key, double dflt) { return j.contains(key) ? num(j, key) : dflt; }
bool has(const json& j, const char* key) { return j.contains(key); }

int as_int(const json& j, const char* key, int dflt)
{
    double v = num_or(j, key, dflt);
    if (v != std::floor(v) || std::fabs(v) > 1e9) throw UsageError(std::string("parameter '") + key + "' must be an integer");
    return static_cast<int>(v);
}

json root_json(const Root& r)
{
    return {{"root", r.x}, {"residual", r.residual}, {"bracket", {r.lo, r.hi}}};
}

struct Out {
    json results = json::object();
    bool clipped = false;
    void put(const char* k, const Value& v)
    {
        results[k] = v.v;
        if (v.status == Status::clipped) {
            clipped = true;
            results[std::string(k) + "_note"] = v.note;
        }
    }
};

// S and Q for the CHSH-based protocols: explicit, from Q on the Werner line (also when S is absent), or from a symmetric efficiency.
void chsh_inputs(const json& p, double& S, double& Q)
{
    if (has(p, "eta")) {
        double eta = num(p, "eta");
        if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("eta outside [0,1]");
        S = chsh_eta_S(eta);
        Q = chsh_eta_Q(eta);
        return;
    }
    Q = num(p, "Q");
    // without an explicit S the Werner line is the only consistent choice
    if (p.value("S_from_Q", false) || !has(p, "S"))
        S = 2.0 * std::numbers::sqrt2 * (1.0 - 2.0 * Q);
    else
        S = num(p, "S");
}

Out keyrate(const json& p)
{
    const std::string proto = p.value("protocol", "");
    Out o;
    auto& r = o.results;
    if (proto == "dw") {
        double S, Q;
        chsh_inputs(p, S, Q);
        r["S"] = S;
        r["Q"] = Q;
        o.put("chi", holevo_chsh(S));
        o.put("r", dw_rate_chsh(S, Q));
    } else if (proto == "noisy") {
        double S, Q;
        chsh_inputs(p, S, Q);
        r["S"] = S;
        r["Q"] = Q;
        if (has(p, "q")) {
            r["q"] = num(p, "q");
            o.put("r", dw_rate_noisy_preproc(S, Q, num(p, "q")));
        } else {
            QOpt q = dw_noisy_optimize(S, Q);
            r["q"] = q.q;
            r["r"] = q.r;
        }
        r["margin"] = noisy_preproc_margin(S, Q);
    } else if (proto == "chain-m") {
        r["r"] = chain_m_rate(num(p, "p"), as_int(p, "M", 2));
    } else if (proto == "ns") {
        double pNL = has(p, "D") ? ns_pnl_from_D(num(p, "D")) : num(p, "pNL");
        if (!(pNL >= -1e-12 && pNL <= 1.0 + 1e-12)) throw DomainError("p_NL outside [0,1]");
        pNL = std::clamp(pNL, 0.0, 1.0);
        r["pNL"] = pNL;
        if (has(p, "q")) {
            r["q"] = num(p, "q");
            r["r"] = ns_chsh_rate_pnl(pNL, num(p, "q"));
        } else {
            QOpt q = ns_optimize(pNL);
            r["q"] = q.q;
            r["r"] = q.r;
        }
    } else if (proto == "chain06") {
        Chain06 c = chain06_bounds(num(p, "p"));
        r["r_lower"] = c.r_lower;
        r["i_upper"] = c.i_upper;
    } else if (proto == "sdi") {
        double PB = num_or(p, "PB", sdi_optimal_PB());
        SdiRate s = sdi_rate(PB);
        r["PB"] = PB;
        r["r"] = s.r;
        r["P_E"] = s.P_E;
        r["threshold"] = s.threshold;
        if (has(p, "eta")) {
            SdiLossy l = sdi_lossy_thresholds(num(p, "eta"));
            r["lossy_general"] = l.general;
            r["lossy_minimal"] = l.minimal;
        }
    } else if (proto == "1sdi") {
        double etaA = num(p, "etaA");
        o.put("r", one_sided_rate(etaA, num_or(p, "Q1ps", 0.0), num_or(p, "Q2", (1.0 - etaA) / 2.0), num_or(p, "q", 1.0)));
    } else if (proto == "cc-upper") {
        CcUpper c = cc_upper_bounds(num(p, "eta"));
        o.put("q_L", c.q_L);
        o.put("r1", c.r1);
        o.put("r2", c.r2);
    } else if (proto == "chsh-l") {
        o.put("r", chsh_l_rate(num(p, "S"), num(p, "Q"), num(p, "eta")));
    } else if (proto == "mabk") {
        o.put("H", mabk_entropy(num(p, "m")));
    } else if (proto == "holz") {
        o.put("H", holz_entropy(num(p, "beta")));
    } else if (proto == "eat") {
        EatParams e;
        e.n = num(p, "n");
        if (has(p, "t")) {
            e.t = num(p, "t");
            e.grad_inf = num(p, "grad_inf");
        } else {
            Tradeoff tr = chsh_tangent_tradeoff(num_or(p, "S0", 2.7));
            e.t = tr.at(num_or(p, "S", tr.S0));
            e.grad_inf = tr.grad_inf;
        }
        e.dimO = as_int(p, "dimO", 2);
        e.eps = num_or(p, "eps", 1e-10);
        e.p_event = num_or(p, "p_event", 1.0);
        r["t"] = e.t;
        r["grad_inf"] = e.grad_inf;
        r["nu"] = eat_nu(e);
        r["bound"] = eat_bound(e);
        r["per_round"] = eat_bound(e) / e.n;
    } else if (proto == "geat") {
        GeatParams g;
        g.n = num(p, "n");
        g.t = num(p, "t");
        g.eps = num_or(p, "eps", 1e-10);
        g.p_event = num_or(p, "p_event", 1.0);
        g.dA = as_int(p, "dA", 2);
        g.maxF = num_or(p, "maxF", 1.0);
        g.minSigmaF = num_or(p, "minSigmaF", 0.0);
        g.varF = num_or(p, "varF", 0.0);
        double b;
        if (has(p, "alpha")) {
            g.alpha = num(p, "alpha");
            b = geat_bound(g);
        } else {
            g = geat_best_alpha(g, &b);
        }
        r["alpha"] = g.alpha;
        r["bound"] = b;
        r["per_round"] = b / g.n;
    } else if (proto == "vv") {
        double Q = num(p, "Q"), n = num_or(p, "n", 0.0), eps = num_or(p, "eps", 1e-10);
        if (has(p, "tau")) {
            double tau = num(p, "tau");
            double tp = num_or(p, "tau_prime", 1.0 - tau);
            r["tau"] = tau;
            r["bound"] = vv_bound(Q, n, eps, tau, tp);
            r["r"] = vv_bound(Q, n, eps, tau, tp) - binary_entropy(Q);
        } else {
            VvOpt v = vv_rate_opt(Q, n, eps);
            r["tau"] = v.tau;
            r["r"] = v.r;
        }
    } else {
        throw UsageError("unknown protocol '" + proto + "'");
    }
    return o;
}

Out critical(const json& p)
{
    const std::string t = p.value("target", "");
    Out o;
    auto& r = o.results;
    if (t == "qber-dw") {
        r = root_json(critical_qber_dw());
    } else if (t == "eta-dw") {
        r = root_json(critical_eta_dw());
    } else if (t == "eta-noisy") {
        NoisyEtaResult n = critical_eta_noisy(as_int(p, "starts", 16), as_int(p, "budget", 20000));
        r["root"] = n.eta_star;
        r["theta"] = n.theta;
        r["angles"] = n.angles;
        r["q"] = n.q;
        r["evaluations"] = n.evaluations;
    } else if (t == "eta-cc1") {
        r = root_json(cc_one_way_root());
    } else if (t == "eta-cc2") {
        r = root_json(cc_two_way_root());
    } else if (t == "eta-1sdi") {
        r = root_json(one_sided_critical());
    } else if (t == "cde-maxent") {
        r = root_json(cde_symmetric_maxent());
    } else if (t == "eberhard") {
        std::vector<double> grid = p.contains("grid") ? p["grid"].get<std::vector<double>>() : eberhard_default_grid();
        auto pts = eberhard_scan(grid, as_int(p, "budget", 2000));
        json arr = json::array();
        double best = 1.0;
        for (const auto& e : pts) {
            arr.push_back({{"theta", e.theta}, {"eta_star", e.eta_star}, {"angles", e.angles}, {"q_L", e.q_L},
                           {"converged", e.converged}});
            best = std::min(best, e.eta_star);
        }
        r["points"] = arr;
        r["root"] = best;
        r["monotone"] = eberhard_monotone(pts);
    } else {
        throw UsageError("unknown target '" + t + "'");
    }
    return o;
}

SimConfig sim_config(const json& p)
{
    SimConfig c;
    if (has(p, "theta")) {
        c.kind = SourceKind::tilted;
        c.theta = num(p, "theta");
    } else {
        c.p = num_or(p, "p", 1.0);
    }
    double eta = num_or(p, "eta", 1.0);
    c.etaA = num_or(p, "etaA", eta);
    c.etaB = num_or(p, "etaB", eta);
    c.n = num_or(p, "n", 1e6);
    c.gamma = num_or(p, "gamma", 0.1);
    c.eps_sec = num_or(p, "eps_sec", c.eps_sec);
    c.eps_cor = num_or(p, "eps_cor", c.eps_cor);
    c.delta = num_or(p, "delta", c.delta);
    c.S_abort = num_or(p, "S_abort", c.S_abort);
    c.S_anchor = num_or(p, "S_anchor", c.S_anchor);
    c.f_ec = num_or(p, "f_ec", c.f_ec);
    if (p.contains("alice")) {
        auto v = p["alice"].get<std::vector<double>>();
        if (v.size() != 2) throw UsageError("alice: expected 2 angles");
        std::copy(v.begin(), v.end(), c.alice.begin());
    }
    if (p.contains("bob")) {
        auto v = p["bob"].get<std::vector<double>>();
        if (v.size() != 3) throw UsageError("bob: expected 3 angles (two test settings, then the key setting)");
        std::copy(v.begin(), v.end(), c.bob.begin());
    }
    c.no_click_outcome = static_cast<int>(num_or(p, "no_click_outcome", 0));
    if (p.contains("source")) c.source = Behavior::from_json(p["source"].dump());
    if (p.contains("seed")) {
        const auto& s = p["seed"];
        if (s.is_number_unsigned())
            c.seed = s.get<std::uint64_t>();
        else if (s.is_number_integer() && s.get<std::int64_t>() >= 0)
            c.seed = static_cast<std::uint64_t>(s.get<std::int64_t>());
        else
            throw UsageError("seed must be a nonnegative integer");
    }
    return c;
}

int sim_code(const SimResult& r) { return r.abort ? DIQKD_ABORT : DIQKD_OK; }

json parse_object(const char* text)
{
    json j = text && *text ? json::parse(text) : json::object();
    if (!j.is_object()) throw UsageError("parameters must be a JSON object");
    return j;
}

}  // namespace

extern "C" {

const char* diqkd_version(void) { return "1.0.0"; }
const char* diqkd_last_error(void) { return g_last_error.c_str(); }
void diqkd_string_free(char* s) { std::free(s); }

int diqkd_behavior_from_json(const char* text, diqkd_behavior** out)
{
    return guarded([&] {
        need(text, "text");
        need(out, "out");
        *out = new diqkd_behavior{Behavior::from_json(text)};
        return DIQKD_OK;
    });
}

int diqkd_behavior_new(int nA, int nB, int nX, int nY, const double* table, diqkd_behavior** out)
{
    return guarded([&] {
        need(table, "table");
        need(out, "out");
        if (nA < 1 || nB < 1 || nX < 1 || nY < 1) throw ShapeError("dimensions must be positive");
        Behavior b(nA, nB, nX, nY);
        std::copy(table, table + b.table.size(), b.table.begin());
        b.validate(1e-9);
        *out = new diqkd_behavior{std::move(b)};
        return DIQKD_OK;
    });
}

int diqkd_behavior_isotropic(double v, diqkd_behavior** out)
{
    return guarded([&] {
        need(out, "out");
        *out = new diqkd_behavior{isotropic_behavior(v)};
        return DIQKD_OK;
    });
}

int diqkd_behavior_pr(diqkd_behavior** out)
{
    return guarded([&] {
        need(out, "out");
        *out = new diqkd_behavior{pr_box()};
        return DIQKD_OK;
    });
}

int diqkd_behavior_to_json(const diqkd_behavior* b, char** out)
{
    return guarded([&] {
        need(b, "behavior");
        need(out, "out");
        *out = dup_string(b->b.to_json());
        return DIQKD_OK;
    });
}

int diqkd_behavior_dims(const diqkd_behavior* b, int* nA, int* nB, int* nX, int* nY)
{
    return guarded([&] {
        need(b, "behavior");
        if (nA) *nA = b->b.nA;
        if (nB) *nB = b->b.nB;
        if (nX) *nX = b->b.nX;
        if (nY) *nY = b->b.nY;
        return DIQKD_OK;
    });
}

int diqkd_behavior_get(const diqkd_behavior* b, int a, int bb, int x, int y, double* out)
{
    return guarded([&] {
        need(b, "behavior");
        need(out, "out");
        const Behavior& B = b->b;
        if (a < 0 || a >= B.nA || bb < 0 || bb >= B.nB || x < 0 || x >= B.nX || y < 0 || y >= B.nY)
            throw ShapeError("index out of range");
        *out = B(a, bb, x, y);
        return DIQKD_OK;
    });
}

void diqkd_behavior_free(diqkd_behavior* b) { delete b; }

int diqkd_chsh(const diqkd_behavior* b, double* beta, double* beta_up)
{
    return guarded([&] {
        need(b, "behavior");
        Chsh c = chsh_value(b->b);
        if (beta) *beta = c.beta;
        if (beta_up) *beta_up = c.beta_up;
        return DIQKD_OK;
    });
}

int diqkd_is_local(const diqkd_behavior* b, int* local, double* distance)
{
    return guarded([&] {
        need(b, "behavior");
        LocalityResult r = is_local(b->b);
        if (local) *local = r.local ? 1 : 0;
        if (distance) *distance = r.distance;
        return DIQKD_OK;
    });
}

int diqkd_cc_local_weight(const diqkd_behavior* b, const diqkd_behavior* const* nonlocal, size_t n, char** out_json)
{
    return guarded([&] {
        need(b, "behavior");
        need(out_json, "out");
        std::vector<Behavior> pts;
        if (n == 0) {
            pts = pr_boxes();
        } else {
            need(nonlocal, "nonlocal");
            for (size_t i = 0; i < n; ++i) {
                need(nonlocal[i], "nonlocal point");
                pts.push_back(nonlocal[i]->b);
            }
        }
        CcDecomposition d = cc_local_weight(b->b, pts);
        json r;
        r["q_L"] = d.q_L;
        r["q_local"] = d.q_local;
        r["q_nonlocal"] = d.q_nonlocal;
        r["reconstruction_error"] = d.reconstruction_error;
        r["lp_status"] = d.status == LpStatus::optimal ? "optimal" : d.status == LpStatus::infeasible ? "infeasible" : "failed";
        *out_json = dup_string(r.dump());
        if (d.status == LpStatus::infeasible)
            throw DomainError("behavior is not a mixture of local vertices and the given nonlocal points");
        if (d.status != LpStatus::optimal) throw std::runtime_error("local-weight LP did not reach an optimum");
        return DIQKD_OK;
    });
}

int diqkd_binary_entropy(double q, double* out)
{
    return guarded([&] {
        need(out, "out");
        *out = binary_entropy(q);
        return DIQKD_OK;
    });
}

int diqkd_dw_rate_chsh(double S, double Q, double* out)
{
    return guarded([&] {
        need(out, "out");
        Value v = dw_rate_chsh(S, Q);
        *out = v.v;
        return v.status == Status::ok ? DIQKD_OK : DIQKD_CLIPPED;
    });
}

int diqkd_sim_run(const char* config_json, diqkd_sim** out)
{
    return guarded([&] {
        need(out, "out");
        *out = new diqkd_sim{run_protocol(sim_config(parse_object(config_json)))};
        return sim_code((*out)->r);
    });
}

int diqkd_sim_run_traced(const char* config_json, const char* trace_path, diqkd_sim** out)
{
    return guarded([&] {
        need(out, "out");
        need(trace_path, "trace_path");
        SimConfig c = sim_config(parse_object(config_json));
        c.validate();
        std::ofstream f(trace_path);
        if (!f) throw UsageError(std::string("cannot open trace file ") + trace_path);
        SimResult r = run_protocol_traced(c, f);
        f.close();
        if (!f) throw std::runtime_error(std::string("failed writing trace file ") + trace_path);
        *out = new diqkd_sim{r};
        return sim_code(r);
    });
}

int diqkd_sim_to_json(const diqkd_sim* s, char** out)
{
    return guarded([&] {
        need(s, "sim");
        need(out, "out");
        *out = dup_string(s->r.to_json());
        return DIQKD_OK;
    });
}

int diqkd_sim_summary(const diqkd_sim* s, double* S_est, double* Q_est, double* key_length, int* abort)
{
    return guarded([&] {
        need(s, "sim");
        if (S_est) *S_est = s->r.S_est;
        if (Q_est) *Q_est = s->r.Q_est;
        if (key_length) *key_length = s->r.key_length;
        if (abort) *abort = s->r.abort ? 1 : 0;
        return DIQKD_OK;
    });
}

void diqkd_sim_free(diqkd_sim* s) { delete s; }

int diqkd_eval(const char* op, const char* params_json, char** out_json)
{
    return guarded([&] {
        need(op, "op");
        need(out_json, "out");
        *out_json = nullptr;
        json p = parse_object(params_json);
        std::string name = op;
        json env;
        int code = DIQKD_OK;
        if (name == "keyrate" || name == "critical") {
            Out o = name == "keyrate" ? keyrate(p) : critical(p);
            code = o.clipped ? DIQKD_CLIPPED : DIQKD_OK;
            env["status"] = o.clipped ? "domain-clipped" : "ok";
            env["results"] = o.results;
        } else if (name == "simulate") {
            SimConfig c = sim_config(p);
            SimResult r;
            if (p.contains("trace_path")) {
                c.validate();
                std::string path = p["trace_path"].get<std::string>();
                std::ofstream f(path);
                if (!f) throw UsageError("cannot open trace file " + path);
                r = run_protocol_traced(c, f);
                f.close();
                if (!f) throw std::runtime_error("failed writing trace file " + path);
            } else {
                r = run_protocol(c);
            }
            code = sim_code(r);
            env["status"] = r.abort ? "abort" : "ok";
            env["results"] = json::parse(r.to_json());
        } else {
            throw UsageError("unknown operation '" + name + "'");
        }
        *out_json = dup_string(env.dump());
        return code;
    });
}

}  // extern "C"
