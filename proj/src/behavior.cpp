#include "diqkd/behavior.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "json.hpp"

namespace diqkd {

namespace {

double xlog2(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

void require_2222(const Behavior& b, const char* what)
{
    if (!b.is_2222()) throw ShapeError(std::string(what) + ": expected a (2,2,2,2) behavior");
}

}  // namespace

double Behavior::normalization_error() const
{
    double worst = 0.0;
    for (int x = 0; x < nX; ++x)
        for (int y = 0; y < nY; ++y) {
            double s = 0.0;
            for (int a = 0; a < nA; ++a)
                for (int b = 0; b < nB; ++b) {
                    double v = (*this)(a, b, x, y);
                    s += v;
                    worst = std::max(worst, -v);
                }
            worst = std::max(worst, std::fabs(s - 1.0));
        }
    return worst;
}

void Behavior::validate(double tol) const
{
    if (nA < 1 || nB < 1 || nX < 1 || nY < 1 || table.size() != static_cast<std::size_t>(nA * nB * nX * nY))
        throw ShapeError("behavior: inconsistent dimensions");
    for (double v : table)
        if (!std::isfinite(v)) throw DomainError("behavior: non-finite entry");
    if (normalization_error() > tol) throw DomainError("behavior: columns not normalised");
}

std::string Behavior::to_json() const
{
    nlohmann::json j;
    j["nA"] = nA;
    j["nB"] = nB;
    j["nX"] = nX;
    j["nY"] = nY;
    j["table"] = table;
    // nlohmann prints doubles with max_digits10 (17), so values round-trip.
    return j.dump();
}

Behavior Behavior::from_json(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("behavior json: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("behavior json: top level must be an object");
    auto dim = [&](const char* key) {
        if (!j.contains(key) || !j[key].is_number_integer()) throw ParseError(std::string("behavior json: field '") + key + "' missing or not an integer");
        int v = j[key].get<int>();
        if (v < 1 || v > 64) throw ParseError(std::string("behavior json: field '") + key + "' out of range");
        return v;
    };
    Behavior b(dim("nA"), dim("nB"), dim("nX"), dim("nY"));
    if (!j.contains("table") || !j["table"].is_array()) throw ParseError("behavior json: field 'table' missing or not an array");
    const auto& t = j["table"];
    if (t.size() != b.table.size())
        throw ParseError("behavior json: field 'table' has " + std::to_string(t.size()) + " entries, expected " +
                         std::to_string(b.table.size()));
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!t[i].is_number()) throw ParseError("behavior json: field 'table' entry " + std::to_string(i) + " is not a number");
        b.table[i] = t[i].get<double>();
    }
    b.validate(1e-9);
    return b;
}

double EveWeights::local_total() const
{
    double s = 0.0;
    for (const auto& row : p) s += row[0] + row[1];
    return s;
}

void EveWeights::validate(double tol) const
{
    for (const auto& row : p)
        for (double v : row)
            if (!(v >= -tol)) throw DomainError("eve weights: negative entry");
    if (!(pNL >= -tol)) throw DomainError("eve weights: negative p_NL");
    if (std::fabs(local_total() + pNL - 1.0) > tol) throw DomainError("eve weights: do not sum to 1");
}

EveWeights EveWeights::isotropic(double pNL)
{
    if (!(pNL >= 0.0 && pNL <= 1.0)) throw DomainError("eve weights: p_NL outside [0,1]");
    EveWeights w;
    for (auto& row : w.p) row = {(1.0 - pNL) / 8.0, (1.0 - pNL) / 8.0};
    w.pNL = pNL;
    return w;
}

Behavior pr_box()
{
    Behavior b;
    for (int a = 0; a < 2; ++a)
        for (int c = 0; c < 2; ++c)
            for (int x = 0; x < 2; ++x)
                for (int y = 0; y < 2; ++y) b(a, c, x, y) = ((a ^ c) == (x & y)) ? 0.5 : 0.0;
    return b;
}

Behavior uniform_behavior(int nA, int nB, int nX, int nY)
{
    Behavior b(nA, nB, nX, nY);
    std::fill(b.table.begin(), b.table.end(), 1.0 / (nA * nB));
    return b;
}

Behavior isotropic_behavior(double v)
{
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("isotropic_behavior: v outside [0,1]");
    Behavior b = pr_box();
    for (double& e : b.table) e = v * e + (1.0 - v) / 4.0;
    return b;
}

Behavior deterministic_behavior(const std::vector<int>& a_of_x, const std::vector<int>& b_of_y, int nA, int nB)
{
    Behavior b(nA, nB, static_cast<int>(a_of_x.size()), static_cast<int>(b_of_y.size()));
    for (int x = 0; x < b.nX; ++x)
        for (int y = 0; y < b.nY; ++y) {
            if (a_of_x[x] < 0 || a_of_x[x] >= nA || b_of_y[y] < 0 || b_of_y[y] >= nB)
                throw DomainError("deterministic_behavior: outcome out of range");
            b(a_of_x[x], b_of_y[y], x, y) = 1.0;
        }
    return b;
}

std::vector<Behavior> deterministic_vertices(int nA, int nB, int nX, int nY)
{
    // Enumerate outcome functions as mixed-radix counters, Alice's settings most significant.
    long total = 1;
    for (int i = 0; i < nX; ++i) total *= nA;
    for (int i = 0; i < nY; ++i) total *= nB;
    if (total > 1 << 20) throw DomainError("deterministic_vertices: too many vertices");
    std::vector<Behavior> out;
    out.reserve(static_cast<std::size_t>(total));
    for (long code = 0; code < total; ++code) {
        std::vector<int> ax(nX), by(nY);
        long c = code;
        for (int y = nY - 1; y >= 0; --y) {
            by[y] = static_cast<int>(c % nB);
            c /= nB;
        }
        for (int x = nX - 1; x >= 0; --x) {
            ax[x] = static_cast<int>(c % nA);
            c /= nA;
        }
        out.push_back(deterministic_behavior(ax, by, nA, nB));
    }
    return out;
}

Behavior eve_vertex(int j, int r)
{
    if (j < 1 || j > 4 || r < 0 || r > 1) throw DomainError("eve_vertex: j in 1..4, r in 0..1");
    std::vector<int> ax(2), by(2);
    for (int s = 0; s < 2; ++s) {
        switch (j) {
        case 1: ax[s] = r; by[s] = r; break;
        case 2: ax[s] = s ^ r; by[s] = r; break;
        case 3: ax[s] = r; by[s] = s ^ r; break;
        default: ax[s] = s ^ r; by[s] = s ^ 1 ^ r; break;
        }
    }
    return deterministic_behavior(ax, by);
}

Chsh chsh_value(const Behavior& b)
{
    require_2222(b, "chsh_value");
    double up = 0.0, beta = 0.0;
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            for (int a = 0; a < 2; ++a)
                for (int c = 0; c < 2; ++c) {
                    double v = b(a, c, x, y);
                    bool win = (a ^ c) == (x & y);
                    if (win) up += v;
                    beta += win ? v : -v;
                }
    return {beta, up};
}

double chsh_max_facet(const Behavior& b)
{
    require_2222(b, "chsh_max_facet");
    double E[2][2];
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) E[x][y] = b(0, 0, x, y) + b(1, 1, x, y) - b(0, 1, x, y) - b(1, 0, x, y);
    double best = 0.0;
    for (int k = 0; k < 4; ++k) {
        double s = 0.0;
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y) s += ((x == k / 2 && y == k % 2) ? -1.0 : 1.0) * E[x][y];
        best = std::max(best, std::fabs(s));
    }
    return best;
}

double no_signaling_check(const Behavior& b)
{
    double dev = 0.0;
    for (int x = 0; x < b.nX; ++x)
        for (int a = 0; a < b.nA; ++a) {
            double ref = 0.0;
            for (int c = 0; c < b.nB; ++c) ref += b(a, c, x, 0);
            for (int y = 1; y < b.nY; ++y) {
                double m = 0.0;
                for (int c = 0; c < b.nB; ++c) m += b(a, c, x, y);
                dev = std::max(dev, std::fabs(m - ref));
            }
        }
    for (int y = 0; y < b.nY; ++y)
        for (int c = 0; c < b.nB; ++c) {
            double ref = 0.0;
            for (int a = 0; a < b.nA; ++a) ref += b(a, c, 0, y);
            for (int x = 1; x < b.nX; ++x) {
                double m = 0.0;
                for (int a = 0; a < b.nA; ++a) m += b(a, c, x, y);
                dev = std::max(dev, std::fabs(m - ref));
            }
        }
    return dev;
}

double chained_value(const Behavior& b, int M)
{
    if (M < 2) throw DomainError("chained_value: M >= 2");
    if (b.nA != 2 || b.nB != 2 || b.nX != M || b.nY != M) throw ShapeError("chained_value: need M binary settings per side");
    // X_M is X_0 with its outcome flipped, and X_{-1} is X_{M-1} flipped.
    double t = 0.0;
    for (int c = -1; c <= 1; ++c)
        for (int i = 0; i < M; ++i) {
            int j = i + c;
            bool flip = j < 0 || j >= M;
            j = (j + M) % M;
            double anti = b(0, 1, i, j) + b(1, 0, i, j);
            t += flip ? 1.0 - anti : anti;
        }
    return t / (3.0 * M);
}

double monogamy_max(double beta_ab)
{
    if (!(beta_ab >= 0.0 && beta_ab <= 2.0 * std::numbers::sqrt2 + 1e-12)) throw DomainError("monogamy_max: beta outside [0, 2*sqrt2]");
    return std::sqrt(std::max(0.0, 8.0 - beta_ab * beta_ab));
}

Behavior eve_strategy_behavior(const EveWeights& w)
{
    w.validate();
    Behavior out = pr_box();
    for (double& e : out.table) e *= w.pNL;
    for (int j = 1; j <= 4; ++j)
        for (int r = 0; r < 2; ++r) {
            Behavior v = eve_vertex(j, r);
            for (std::size_t i = 0; i < out.table.size(); ++i) out.table[i] += w.p[j - 1][r] * v.table[i];
        }
    return out;
}

PseudosiftResult pseudosift(const EveWeights& w, double xi0)
{
    w.validate();
    if (!(xi0 >= 0.0 && xi0 <= 1.0)) throw DomainError("pseudosift: xi0 outside [0,1]");
    const double xi[2] = {xi0, 1.0 - xi0};
    PseudosiftResult r;
    for (int x = 0; x < 2; ++x) {
        // The PR box becomes perfectly correlated after Bob's flip on (1,1).
        for (int a = 0; a < 2; ++a) {
            r.table[x][a][a] += w.pNL / 2.0;
            r.eve[x][a][a][0] += w.pNL / 2.0;
        }
        double hbe = w.pNL;
        for (int j = 1; j <= 4; ++j)
            for (int s = 0; s < 2; ++s) {
                double wt = w.p[j - 1][s];
                Behavior v = eve_vertex(j, s);
                int a = v(1, 0, x, 0) + v(1, 1, x, 0) > 0.5 ? 1 : 0;
                int sifted[2];
                for (int y = 0; y < 2; ++y) {
                    int b = v(a, 1, x, y) > 0.5 ? 1 : 0;
                    sifted[y] = b ^ (x & y);
                }
                bool known = sifted[0] == sifted[1];
                for (int y = 0; y < 2; ++y) {
                    r.table[x][a][sifted[y]] += wt * xi[y];
                    r.eve[x][a][sifted[y]][known ? 2 : 1] += wt * xi[y];
                }
                if (!known) hbe += wt * -(xlog2(xi[0]) + xlog2(xi[1]));
            }
        r.h_b_given_e[x] = hbe;
    }
    return r;
}

double witness_I3(const PMBehavior& pm)
{
    if (pm.nPrep != 3 || pm.nY != 2 || pm.nB != 2) throw ShapeError("witness_I3: need 3 preparations and 2 binary measurements");
    auto E = [&](int i, int j) { return pm.correlator(i - 1, j - 1); };
    return std::fabs(E(1, 1) + E(1, 2) + E(2, 1) - E(2, 2) - E(3, 1));
}

double witness_S_pm(const PMBehavior& pm)
{
    if (pm.nPrep != 4 || pm.nY != 2 || pm.nB != 2) throw ShapeError("witness_S_pm: need 4 preparations (a0,a1) and 2 binary measurements");
    // Preparation index 2*a0 + a1; measurement y is rewarded for guessing a_y.
    // Normalised by 1/2 so that bits give 2, qubits 2*sqrt2 and P_B = (S+4)/8.
    double s = 0.0;
    for (int a0 = 0; a0 < 2; ++a0)
        for (int a1 = 0; a1 < 2; ++a1) {
            int prep = 2 * a0 + a1;
            s += (a0 ? -1.0 : 1.0) * pm.correlator(prep, 0);
            s += (a1 ? -1.0 : 1.0) * pm.correlator(prep, 1);
        }
    return 0.5 * s;
}

PMBehavior pm_from_bloch(const std::vector<double>& prep_angles, const std::vector<double>& meas_angles)
{
    if (prep_angles.empty() || meas_angles.empty()) throw DomainError("pm_from_bloch: empty angle list");
    PMBehavior pm(static_cast<int>(prep_angles.size()), static_cast<int>(meas_angles.size()));
    for (int i = 0; i < pm.nPrep; ++i)
        for (int y = 0; y < pm.nY; ++y) {
            double p0 = 0.5 * (1.0 + std::cos(prep_angles[i] - meas_angles[y]));
            pm(0, i, y) = p0;
            pm(1, i, y) = 1.0 - p0;
        }
    return pm;
}

}  // namespace diqkd
