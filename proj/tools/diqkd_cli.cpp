#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "diqkd/diqkd.h"

using json = nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kUsage = 2, kDomain = 3, kInternal = 4 };

struct CString {
    char* p = nullptr;
    ~CString() { diqkd_string_free(p); }
};

int exit_for(int code, bool domain_is_usage = false)
{
    switch (code) {
    case DIQKD_OK:
    case DIQKD_CLIPPED:
    case DIQKD_ABORT: return kOk;
    case DIQKD_E_DOMAIN: return domain_is_usage ? kUsage : kDomain;
    case DIQKD_E_NOROOT: return kDomain;
    case DIQKD_E_SHAPE:
    case DIQKD_E_PARSE:
    case DIQKD_E_USAGE: return kUsage;
    default: return kInternal;
    }
}

json envelope(const std::string& sub, const json& inputs)
{
    json e;
    e["schema"] = 1;
    e["tool"] = "diqkd";
    e["version"] = diqkd_version();
    e["subcommand"] = sub;
    e["inputs"] = inputs;
    return e;
}

int fail(json env, int code, const std::string& msg, bool domain_is_usage = false)
{
    env["status"] = "error";
    env["error"] = msg;
    std::cout << env.dump(2) << "\n";
    std::cerr << "error: " << msg << "\n";
    return exit_for(code, domain_is_usage);
}

std::string fmt(double v)
{
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

std::string norm_key(std::string k)
{
    while (!k.empty() && k.front() == '-') k.erase(k.begin());
    for (auto& c : k)
        if (c == '-') c = '_';
    return k;
}

// Numeric flags shared by the keyrate protocols, keyed by the JSON parameter name.
const std::vector<std::pair<std::string, std::string>> kKeyrateFlags = {
    {"--S", "CHSH value"}, {"--Q", "QBER"}, {"--eta", "detection efficiency"}, {"--q", "preprocessing flip probability"},
    {"--p", "visibility"}, {"--M", "chained settings"}, {"--D", "CHSH-derived error D"}, {"--pNL", "nonlocal weight"},
    {"--PB", "Bob's guessing probability"}, {"--etaA", "Alice's efficiency"}, {"--Q1ps", "post-selected QBER"},
    {"--Q2", "QBER of the second test"}, {"--m", "MABK value"}, {"--beta", "Holz value"}, {"--n", "rounds"},
    {"--t", "tradeoff value"}, {"--grad-inf", "tradeoff gradient bound"}, {"--S0", "tangent anchor"},
    {"--dimO", "output dimension"}, {"--eps", "smoothing parameter"}, {"--p-event", "event probability"},
    {"--alpha", "Renyi order"}, {"--dA", "register dimension"}, {"--maxF", "max f"}, {"--minSigmaF", "min over Sigma of f"},
    {"--varF", "variance of f"}, {"--tau", "tau"}, {"--tau-prime", "tau'"}};

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Device-independent QKD calculator"};
    app.require_subcommand(1);

    auto* kr = app.add_subcommand("keyrate", "key-rate formulas");
    std::string protocol;
    kr->add_option("--protocol", protocol, "protocol")
        ->required()
        ->check(CLI::IsMember({"dw", "noisy", "chain-m", "ns", "chain06", "sdi", "1sdi", "cc-upper", "chsh-l", "mabk",
                               "holz", "eat", "geat", "vv"}));
    std::map<std::string, std::optional<double>> kvals;
    for (const auto& [flag, desc] : kKeyrateFlags) kr->add_option(flag, kvals[norm_key(flag)], desc);
    bool s_from_q = false;
    kr->add_flag("--S-from-Q", s_from_q, "S = 2 sqrt2 (1 - 2Q)");
    std::string sweep;
    kr->add_option("--sweep", sweep, "param=a:b:steps, emits CSV");

    auto* cr = app.add_subcommand("critical", "threshold solvers");
    std::string target;
    cr->add_option("--target", target, "target")
        ->required()
        ->check(CLI::IsMember({"qber-dw", "eta-dw", "eta-noisy", "eta-cc1", "eta-cc2", "eta-1sdi", "cde-maxent", "eberhard"}));
    std::optional<int> starts, budget;
    std::vector<double> grid;
    cr->add_option("--starts", starts, "optimizer starts");
    cr->add_option("--budget", budget, "optimizer budget");
    cr->add_option("--grid", grid, "theta grid for eberhard")->delimiter(',');

    auto* cc = app.add_subcommand("ccattack", "local weight of a behavior");
    std::string bfile;
    std::vector<std::string> nlfiles;
    cc->add_option("behavior", bfile, "behavior JSON file")->required();
    cc->add_option("--nonlocal", nlfiles, "nonlocal point JSON files (default: the 8 PR boxes)");

    auto* sm = app.add_subcommand("simulate", "Monte Carlo protocol run");
    std::optional<double> sp, stheta, seta, setaA, setaB, sdelta, sabort;
    double sn = 1e6, sgamma = 0.1;
    std::uint64_t seed = 0;
    std::string trace;
    sm->add_option("--p", sp, "Werner visibility");
    sm->add_option("--theta", stheta, "tilted-state angle (instead of --p)");
    sm->add_option("--eta", seta, "detection efficiency");
    sm->add_option("--etaA", setaA, "Alice's efficiency");
    sm->add_option("--etaB", setaB, "Bob's efficiency");
    sm->add_option("--n", sn, "rounds");
    sm->add_option("--gamma", sgamma, "test probability");
    sm->add_option("--seed", seed, "RNG seed (default 0)");
    sm->add_option("--delta", sdelta, "confidence failure probability");
    sm->add_option("--S-abort", sabort, "abort threshold on S_est");
    sm->add_option("--trace", trace, "per-round CSV trace");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*kr) {
            json in;
            in["protocol"] = protocol;
            for (const auto& [k, v] : kvals)
                if (v) in[k] = *v;
            if (s_from_q) in["S_from_Q"] = true;
            if (sweep.empty()) {
                json env = envelope("keyrate", in);
                CString out;
                int code = diqkd_eval("keyrate", in.dump().c_str(), &out.p);
                if (code < 0) return fail(env, code, diqkd_last_error());
                json r = json::parse(out.p);
                env["status"] = r["status"];
                env["results"] = r["results"];
                std::cout << env.dump(2) << "\n";
                return kOk;
            }
            auto eq = sweep.find('=');
            std::vector<std::string> parts;
            if (eq != std::string::npos) {
                std::stringstream ss(sweep.substr(eq + 1));
                for (std::string t; std::getline(ss, t, ':');) parts.push_back(t);
            }
            double a, b;
            long steps;
            try {
                if (parts.size() != 3) throw std::invalid_argument("sweep");
                a = std::stod(parts[0]);
                b = std::stod(parts[1]);
                steps = std::stol(parts[2]);
                if (steps < 1) throw std::invalid_argument("sweep");
            } catch (const std::exception&) {
                std::cerr << "error: --sweep expects param=a:b:steps\n";
                return kUsage;
            }
            std::string key = norm_key(sweep.substr(0, eq));
            std::vector<std::string> cols;
            std::ostringstream csv;
            for (long i = 0; i < steps; ++i) {
                double v = steps == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(steps - 1);
                in[key] = v;
                CString out;
                int code = diqkd_eval("keyrate", in.dump().c_str(), &out.p);
                if (code < 0) {
                    std::cerr << "error at " << key << "=" << fmt(v) << ": " << diqkd_last_error() << "\n";
                    return exit_for(code);
                }
                json r = json::parse(out.p);
                if (cols.empty()) {
                    for (const auto& [k, val] : r["results"].items())
                        if (val.is_number() && k != key) cols.push_back(k);
                    csv << key;
                    for (const auto& c : cols) csv << ',' << c;
                    csv << ",status\n";
                }
                csv << fmt(v);
                for (const auto& c : cols) csv << ',' << (r["results"].contains(c) ? fmt(r["results"][c].get<double>()) : "");
                csv << ',' << r["status"].get<std::string>() << '\n';
            }
            std::cout << csv.str();
            return kOk;
        }

        if (*cr) {
            json in;
            in["target"] = target;
            if (starts) in["starts"] = *starts;
            if (budget) in["budget"] = *budget;
            if (!grid.empty()) in["grid"] = grid;
            json env = envelope("critical", in);
            CString out;
            int code = diqkd_eval("critical", in.dump().c_str(), &out.p);
            if (code < 0) return fail(env, code, diqkd_last_error());
            json r = json::parse(out.p);
            env["status"] = r["status"];
            env["results"] = r["results"];
            std::cout << env.dump(2) << "\n";
            return kOk;
        }

        if (*cc) {
            json in;
            in["behavior"] = bfile;
            in["nonlocal"] = nlfiles;
            json env = envelope("ccattack", in);
            auto load = [&](const std::string& path, diqkd_behavior** h) -> int {
                std::ifstream f(path);
                if (!f) {
                    std::cerr << "error: cannot read " << path << "\n";
                    return DIQKD_E_USAGE;
                }
                std::stringstream ss;
                ss << f.rdbuf();
                return diqkd_behavior_from_json(ss.str().c_str(), h);
            };
            diqkd_behavior* b = nullptr;
            int code = load(bfile, &b);
            if (code < 0) return fail(env, code, bfile + ": " + diqkd_last_error());
            std::vector<diqkd_behavior*> nl;
            auto release = [&] {
                diqkd_behavior_free(b);
                for (auto* p : nl) diqkd_behavior_free(p);
            };
            for (const auto& f : nlfiles) {
                diqkd_behavior* h = nullptr;
                code = load(f, &h);
                if (code < 0) {
                    release();
                    return fail(env, code, f + ": " + diqkd_last_error());
                }
                nl.push_back(h);
            }
            CString out;
            code = diqkd_cc_local_weight(b, nl.data(), nl.size(), &out.p);
            release();
            if (code == DIQKD_E_DOMAIN && out.p) {
                env["status"] = "infeasible";
                env["results"] = json::parse(out.p);
                env["error"] = diqkd_last_error();
                std::cout << env.dump(2) << "\n";
                std::cerr << "error: " << diqkd_last_error() << "\n";
                return kDomain;
            }
            if (code < 0) return fail(env, code, diqkd_last_error());
            env["status"] = "ok";
            env["results"] = json::parse(out.p);
            std::cout << env.dump(2) << "\n";
            return kOk;
        }

        if (*sm) {
            json in;
            if (sp) in["p"] = *sp;
            if (stheta) in["theta"] = *stheta;
            if (seta) in["eta"] = *seta;
            if (setaA) in["etaA"] = *setaA;
            if (setaB) in["etaB"] = *setaB;
            in["n"] = sn;
            in["gamma"] = sgamma;
            in["seed"] = seed;
            if (sdelta) in["delta"] = *sdelta;
            if (sabort) in["S_abort"] = *sabort;
            if (!trace.empty()) in["trace_path"] = trace;
            json env = envelope("simulate", in);
            CString out;
            int code = diqkd_eval("simulate", in.dump().c_str(), &out.p);
            if (code < 0) return fail(env, code, diqkd_last_error(), true);
            json r = json::parse(out.p);
            env["status"] = r["status"];
            env["results"] = r["results"];
            std::cout << env.dump(2) << "\n";
            return kOk;
        }
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternal;
    }
    return kUsage;
}
