#include "diqkd/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

#include "diqkd/keyrates.hpp"
#include "diqkd/numeric.hpp"
#include "diqkd/qcore.hpp"

namespace diqkd {

namespace {

std::uint64_t splitmix64(std::uint64_t& s)
{
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Per-round stream keyed by (seed, round index).
struct RoundRng {
    std::uint64_t s;
    RoundRng(std::uint64_t seed, std::uint64_t i)
    {
        std::uint64_t k = seed;
        s = splitmix64(k) ^ (i * 0xd1342543de82ef95ULL);
        splitmix64(s);
    }
    double uniform() { return static_cast<double>(splitmix64(s) >> 11) * 0x1.0p-53; }
};

struct Sampler {
    // cumulative p(ab|xy) before detection, indexed [x][y][ab]
    std::array<std::array<std::array<double, 4>, 3>, 2> cum{};
    int key_y = 2;
    double gamma, etaA, etaB;
    int nc;
    std::uint64_t seed;

    Round draw(std::uint64_t i) const
    {
        RoundRng g(seed, i);
        Round r{};
        r.i = i;
        r.test = g.uniform() < gamma;
        double ux = g.uniform(), uy = g.uniform();
        if (r.test) {
            r.x = ux < 0.5 ? 0 : 1;
            r.y = uy < 0.5 ? 0 : 1;
        } else {
            r.x = 0;
            r.y = key_y;
        }
        double u = g.uniform();
        const auto& c = cum[r.x][r.y];
        int ab = 3;
        for (int k = 0; k < 3; ++k)
            if (u < c[k]) {
                ab = k;
                break;
            }
        r.a = ab >> 1;
        r.b = ab & 1;
        r.clickA = g.uniform() < etaA;
        r.clickB = g.uniform() < etaB;
        if (!r.clickA) r.a = nc;
        if (!r.clickB) r.b = nc;
        return r;
    }
};

Sampler make_sampler(const SimConfig& cfg)
{
    Behavior src = sim_source_behavior(cfg);
    Sampler s;
    s.key_y = src.nY == 3 ? 2 : 0;
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < src.nY; ++y) {
            double acc = 0.0;
            for (int ab = 0; ab < 4; ++ab) {
                acc += src(ab >> 1, ab & 1, x, y);
                s.cum[x][y][ab] = acc;
            }
        }
    s.gamma = cfg.gamma;
    s.etaA = cfg.etaA;
    s.etaB = cfg.etaB;
    s.nc = cfg.no_click_outcome;
    s.seed = cfg.seed;
    return s;
}

void tally(SimCounts& c, const Round& r) { ++c.at(r.a, r.b, r.x, r.y, r.test ? 1 : 0); }

double hoeffding_corr(std::uint64_t n, double delta)
{
    // correlator in [-1, 1]
    if (n == 0) return std::numeric_limits<double>::infinity();
    return std::sqrt(2.0 * std::log(2.0 / delta) / static_cast<double>(n));
}

SimResult finish(const SimConfig& cfg, const SimCounts& c, int key_y)
{
    SimResult r;
    r.counts = c;
    r.n = c.total();
    r.delta = cfg.delta;
    r.seed = cfg.seed;
    double S = 0.0, hw = 0.0;
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) {
            std::uint64_t nxy = c.cell(x, y, 1);
            r.n_test += nxy;
            double E = 0.0;
            if (nxy > 0) {
                double same = static_cast<double>(c.at(0, 0, x, y, 1) + c.at(1, 1, x, y, 1));
                E = (2.0 * same - static_cast<double>(nxy)) / static_cast<double>(nxy);
            }
            S += (x == 1 && y == 1) ? -E : E;
            hw += hoeffding_corr(nxy, cfg.delta / 4.0);
        }
    r.S_est = S;
    r.S_halfwidth = hw;
    r.n_key = c.cell(0, key_y, 0);
    if (r.n_key > 0) {
        r.Q_est = static_cast<double>(c.at(0, 1, 0, key_y, 0) + c.at(1, 0, 0, key_y, 0)) / static_cast<double>(r.n_key);
        r.Q_halfwidth = std::sqrt(std::log(2.0 / cfg.delta) / (2.0 * static_cast<double>(r.n_key)));
    } else {
        r.Q_halfwidth = std::numeric_limits<double>::infinity();
    }

    double Sc = std::min(r.S_est, 2.0 * std::sqrt(2.0));
    r.rate_asymptotic = std::max(0.0, dw_rate_chsh(Sc, r.Q_est).v);

    if (r.n_test == 0 || r.n_key == 0) {
        r.abort = true;
        r.abort_reason = "empty test or key set";
    } else if (r.S_est <= cfg.S_abort) {
        r.abort = true;
        r.abort_reason = "no Bell violation";
    }
    if (r.abort) return r;

    // Entropy per key round from the tangent tradeoff at the lower end of the
    // S interval, minus the EAT second-order term.
    Tradeoff tr = chsh_tangent_tradeoff(cfg.S_anchor);
    EatParams ep;
    ep.n = static_cast<double>(r.n_key);
    ep.t = tr.at(std::min(r.S_est - r.S_halfwidth, 2.0 * std::sqrt(2.0)));
    ep.grad_inf = tr.grad_inf;
    ep.dimO = 2;
    ep.eps = cfg.eps_sec;
    r.per_round_entropy = eat_bound(ep) / ep.n;
    double Qhi = std::min(0.5, r.Q_est + r.Q_halfwidth);
    double eps_terms = 2.0 * std::log2(1.0 / cfg.eps_sec) + std::log2(2.0 / cfg.eps_cor);
    double len = ep.n * (r.per_round_entropy - cfg.f_ec * binary_entropy(Qhi)) - eps_terms;
    r.key_length = std::max(0.0, std::floor(len));
    return r;
}

}  // namespace

void SimConfig::validate() const
{
    if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("gamma must lie in (0,1)");
    if (!(n >= 1.0) || n > 9.0e15 || n != std::floor(n)) throw DomainError("n must be a positive integer");
    if (!(etaA >= 0.0 && etaA <= 1.0 && etaB >= 0.0 && etaB <= 1.0)) throw DomainError("efficiency outside [0,1]");
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("Werner p outside [0,1]");
    if (!(eps_sec > 0.0 && eps_sec < 1.0 && eps_cor > 0.0 && eps_cor < 1.0)) throw DomainError("eps outside (0,1)");
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta outside (0,1)");
    if (no_click_outcome != 0 && no_click_outcome != 1) throw DomainError("no-click outcome must be 0 or 1");
    if (source) {
        if (source->nA != 2 || source->nB != 2 || source->nX != 2 || (source->nY != 2 && source->nY != 3))
            throw ShapeError("sim source must have nA = nB = nX = 2 and nY in {2,3}");
        source->validate(1e-9);
    }
}

std::uint64_t SimCounts::total() const
{
    std::uint64_t s = 0;
    for (auto v : c) s += v;
    return s;
}

std::uint64_t SimCounts::cell(int x, int y, int t) const
{
    std::uint64_t s = 0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) s += at(a, b, x, y, t);
    return s;
}

Behavior sim_source_behavior(const SimConfig& cfg)
{
    if (cfg.source) return *cfg.source;
    QubitPairState st = cfg.kind == SourceKind::werner ? werner_state(cfg.p) : tilted_state(cfg.theta);
    std::vector<Measurement> A{Measurement(cfg.alice[0]), Measurement(cfg.alice[1])};
    std::vector<Measurement> B{Measurement(cfg.bob[0]), Measurement(cfg.bob[1]), Measurement(cfg.bob[2])};
    return born_behavior(st, A, B);
}

SimResult run_protocol(const SimConfig& cfg)
{
    cfg.validate();
    const Sampler s = make_sampler(cfg);
    const auto n = static_cast<std::uint64_t>(cfg.n);
    const std::uint64_t shard = 1 << 16;
    const std::uint64_t nshards = (n + shard - 1) / shard;
    std::vector<SimCounts> parts(nshards);
    num::parallel_for(nshards, [&](std::size_t k) {
        std::uint64_t lo = k * shard, hi = std::min(n, lo + shard);
        for (std::uint64_t i = lo; i < hi; ++i) tally(parts[k], s.draw(i));
    });
    SimCounts total;
    for (const auto& p : parts)
        for (std::size_t j = 0; j < total.c.size(); ++j) total.c[j] += p.c[j];
    return finish(cfg, total, s.key_y);
}

SimResult run_protocol_traced(const SimConfig& cfg, std::ostream& csv)
{
    cfg.validate();
    const Sampler s = make_sampler(cfg);
    const auto n = static_cast<std::uint64_t>(cfg.n);
    SimCounts total;
    csv << "i,x,y,a,b,test_flag,click_A,click_B\n";
    for (std::uint64_t i = 0; i < n; ++i) {
        Round r = s.draw(i);
        tally(total, r);
        csv << r.i << ',' << r.x << ',' << r.y << ',' << r.a << ',' << r.b << ',' << int(r.test) << ','
            << int(r.clickA) << ',' << int(r.clickB) << '\n';
    }
    return finish(cfg, total, s.key_y);
}

EstimatedBehavior estimate_behavior(const SimResult& r, double delta)
{
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta outside (0,1)");
    EstimatedBehavior e;
    e.halfwidth.assign(16, 0.0);
    e.flagged.assign(16, false);
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) {
            std::uint64_t nxy = r.counts.cell(x, y, 1);
            double hw = nxy ? std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(nxy)))
                            : std::numeric_limits<double>::infinity();
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) {
                    std::size_t k = e.freq.index(a, b, x, y);
                    e.freq.table[k] = nxy ? static_cast<double>(r.counts.at(a, b, x, y, 1)) / static_cast<double>(nxy) : 0.0;
                    e.halfwidth[k] = hw;
                    e.flagged[k] = nxy == 0;
                }
        }
    return e;
}

std::string SimResult::to_json() const
{
    nlohmann::ordered_json j;
    j["n"] = n;
    j["n_test"] = n_test;
    j["n_key"] = n_key;
    j["seed"] = seed;
    j["S_est"] = S_est;
    j["S_halfwidth"] = S_halfwidth;
    j["Q_est"] = Q_est;
    j["Q_halfwidth"] = Q_halfwidth;
    j["concentration"] = "hoeffding";
    j["delta"] = delta;
    j["rate_asymptotic"] = rate_asymptotic;
    j["per_round_entropy"] = per_round_entropy;
    j["key_length"] = key_length;
    j["abort"] = abort;
    j["abort_reason"] = abort_reason;
    nlohmann::ordered_json cnt = nlohmann::ordered_json::array();
    for (int t = 0; t < 2; ++t)
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 3; ++y)
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b) {
                        std::uint64_t v = counts.at(a, b, x, y, t);
                        if (v) cnt.push_back({{"a", a}, {"b", b}, {"x", x}, {"y", y}, {"test", t}, {"count", v}});
                    }
    j["counts"] = cnt;
    return j.dump(2);
}

}  // namespace diqkd
