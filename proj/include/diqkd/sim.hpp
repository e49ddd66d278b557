#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "diqkd/behavior.hpp"
#include "diqkd/loopholes.hpp"

namespace diqkd {

enum class SourceKind { werner, tilted };

struct SimConfig {
    SourceKind kind = SourceKind::werner;
    double p = 1.0;      // Werner visibility
    double theta = 0.0;  // tilted-state angle
    std::array<double, 2> alice{0.0, 1.5707963267948966};
    // Bob's two test settings followed by his key setting.
    std::array<double, 3> bob{0.7853981633974483, -0.7853981633974483, 0.0};
    double etaA = 1.0, etaB = 1.0;
    int no_click_outcome = 0;
    // Overrides the quantum source when set: nX = 2 and nY = 2 or 3 (key rounds use y = 2 when present, else y = 0).
    std::optional<Behavior> source;
    double n = 1e6;
    double gamma = 0.1;
    double eps_sec = 1e-10, eps_cor = 1e-12;
    double delta = 0.01;      // confidence failure probability for the Hoeffding intervals
    double S_abort = 2.0;
    double S_anchor = 2.7;    // tangent point of the EAT tradeoff
    double f_ec = 1.1;
    std::uint64_t seed = 0;

    void validate() const;
};

// Counts indexed by (a, b, x, y, test_flag) with y in 0..2.
struct SimCounts {
    std::array<std::uint64_t, 2 * 2 * 2 * 3 * 2> c{};
    static std::size_t index(int a, int b, int x, int y, int t) { return (((a * 2 + b) * 2 + x) * 3 + y) * 2 + t; }
    std::uint64_t& at(int a, int b, int x, int y, int t) { return c[index(a, b, x, y, t)]; }
    std::uint64_t at(int a, int b, int x, int y, int t) const { return c[index(a, b, x, y, t)]; }
    std::uint64_t total() const;
    std::uint64_t cell(int x, int y, int t) const;
};

struct SimResult {
    SimCounts counts;
    std::uint64_t n = 0, n_test = 0, n_key = 0;
    double S_est = 0.0, S_halfwidth = 0.0;
    double Q_est = 0.0, Q_halfwidth = 0.0;
    double rate_asymptotic = 0.0;
    double per_round_entropy = 0.0;  // EAT bound per key round before leakage
    double key_length = 0.0;         // floor(...), stored as double for n up to 2^53
    bool abort = false;
    std::string abort_reason;
    double delta = 0.01;
    std::uint64_t seed = 0;

    std::string to_json() const;
};

struct Round {
    std::uint64_t i;
    int x, y, a, b;
    bool test, clickA, clickB;
};

// Deterministic in cfg (including seed), independent of the worker count.
SimResult run_protocol(const SimConfig& cfg);
// Same, writing one CSV line per round (header first). Runs single-threaded.
SimResult run_protocol_traced(const SimConfig& cfg, std::ostream& csv);

struct EstimatedBehavior {
    Behavior freq;                 // test rounds only, (2,2,2,2)
    std::vector<double> halfwidth;  // per entry, same layout
    std::vector<bool> flagged;      // entry's setting cell is empty
};
EstimatedBehavior estimate_behavior(const SimResult& r, double delta);

// The exact per-round distribution p(ab|xy) with y in 0..2 used by the sampler.
Behavior sim_source_behavior(const SimConfig& cfg);

}  // namespace diqkd
