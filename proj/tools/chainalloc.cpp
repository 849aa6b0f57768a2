// chainalloc command-line front end.
//
// Exit codes: 0 success, 1 usage or runtime error, 2 infeasible instance or
// enumeration cap exceeded.

#include <CLI11.hpp>

#include <chainalloc/chainalloc.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace chainalloc;

namespace {

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
    const char* env = std::getenv("CHAINALLOC_LOG");
    if (!env) return LogLevel::Error;
    const std::string v = env;
    if (v == "debug") return LogLevel::Debug;
    if (v == "info") return LogLevel::Info;
    return LogLevel::Error;
}

void log(LogLevel level, const std::string& msg) {
    static const LogLevel active = log_level();
    if (level > active) return;
    static const char* names[] = {"error", "info", "debug"};
    std::cerr << "[" << names[static_cast<int>(level)] << "] " << msg << "\n";
}

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kInfeasible = 2;

/// Thrown for bad flag combinations detected after parsing.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

bool is_infeasible(const std::exception& e) {
    return dynamic_cast<const Infeasible*>(&e) || dynamic_cast<const TooLarge*>(&e) ||
           dynamic_cast<const LPInfeasible*>(&e) || dynamic_cast<const RoundingInfeasible*>(&e) ||
           dynamic_cast<const MinLifetimeViolated*>(&e);
}

/// Writes to `path` through a sibling temp file so a failed run never
/// leaves a truncated output behind. Empty path means stdout.
void emit(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    const std::filesystem::path target(path);
    std::filesystem::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << text;
        if (!out.flush()) throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, target);
    log(LogLevel::Info, "wrote " + path);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, sep)) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

struct Options {
    std::string scenario;
    std::string solvers = "faa";
    std::string policies;
    std::uint64_t seed = 1;
    std::uint64_t cap = 100'000'000;
    std::int64_t realloc = 30;
    std::int64_t horizon = 10'000'000;
    std::string out;
    std::string sweep;
    std::string device = "phone";
    std::string windowed;
    int instances = 5;
    int functions = 1;
    std::string kind = "ensemble";
    int reps = 10;
    int max_functions = 10;
    bool timing = false;
    std::uint64_t brute_cap = 1'000'000;
};

Policy parse_policy(const std::string& name, const Options& o, std::uint64_t manual_seed) {
    if (name == "faa") return Policy::faa();
    if (name == "optimal") return Policy::optimal(o.cap);
    if (name == "manual") return Policy::manual(manual_seed);
    if (name == "each") return Policy::each();
    throw UsageError("unknown policy '" + name + "' (expected faa, optimal, manual or each)");
}

std::vector<std::string> policy_names(const Options& o, const std::string& fallback) {
    auto names = split(o.policies.empty() ? fallback : o.policies, ',');
    if (names.empty()) throw UsageError("no policy given");
    for (const auto& n : names) parse_policy(n, o, 0);
    return names;
}

EpisodeConfig episode_config(const Options& o) {
    if (o.realloc < 1) throw UsageError("--realloc must be at least 1");
    EpisodeConfig cfg;
    cfg.realloc_every = o.realloc;
    cfg.max_intervals = o.horizon;
    return cfg;
}

Scenario require_scenario(const Options& o) {
    if (o.scenario.empty()) throw UsageError("--scenario is required");
    log(LogLevel::Info, "loading " + o.scenario);
    return load_scenario(o.scenario);
}

std::string describe_assignment(const Problem& p, const Assignment& a) {
    std::string s;
    for (RequestIndex r = 0; r < p.num_requests(); ++r) {
        const auto id = p.request_id(r);
        if (!s.empty()) s += ";";
        s += id.device + "/" + id.app + "/" + std::to_string(id.seq) + "=" + p.type_name(p.request(r).type) + "@" +
             p.device(a.host[r]).id;
    }
    return s;
}

// ---- solve -----------------------------------------------------------------

int cmd_solve(const Options& o) {
    const Problem p(require_scenario(o));
    const auto solvers = split(o.solvers, ',');
    if (solvers.empty()) throw UsageError("no solver given");
    for (const auto& s : solvers) {
        if (s != "brute" && s != "bb" && s != "lp" && s != "faa") {
            throw UsageError("unknown solver '" + s + "' (expected brute, bb, lp or faa)");
        }
    }

    std::ostringstream csv;
    csv << "solver,status,system_lifetime_intervals,system_cost,bottleneck,nodes,evaluated,assignment,"
        << RelaxReport{}.csv_header() << (o.timing ? ",wall_ms" : "") << "\n";
    int code = kOk;
    ExactOptions eo;
    eo.cap = o.cap;
    for (const auto& solver : solvers) {
        const auto t0 = std::chrono::steady_clock::now();
        csv << solver << ",";
        try {
            Assignment a;
            SearchStats stats;
            std::string relax = ",,,,";
            if (solver == "brute" || solver == "bb") {
                const auto r = solver == "brute" ? brute_force_solve(p, eo) : branch_and_bound_solve(p, eo);
                a = r.assignment;
                stats = r.stats;
            } else if (solver == "faa") {
                a = faa_allocate(p).assignment;
            } else {
                const auto r = relax_solve(p);
                a = r.integral;
                relax = r.csv_row();
                std::cerr << "relax: opt_lp=" << r.opt_lp << " int_worst=" << r.int_worst << " int_best=" << r.int_best
                          << " af=" << r.af << (r.loose ? " (loose)" : "") << "\n";
            }
            const auto rep = system_lifetime(p, a);
            std::ostringstream row;
            row << std::setprecision(10) << "ok," << rep.system_lifetime << "," << rep.system_cost.value() << ","
                << rep.bottleneck_id() << "," << stats.nodes_expanded << "," << stats.assignments_evaluated << ","
                << describe_assignment(p, a) << "," << relax;
            csv << row.str();
            log(LogLevel::Info, solver + ": lifetime " + std::to_string(rep.system_lifetime) + " intervals");
        } catch (const Error& e) {
            if (!is_infeasible(e)) throw;
            const bool too_large = dynamic_cast<const TooLarge*>(&e) != nullptr;
            csv << (too_large ? "too_large" : "infeasible") << ",,,,,,,,,,";
            std::cerr << solver << ": " << e.what() << "\n";
            code = kInfeasible;
        }
        if (o.timing) {
            csv << "," << std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        }
        csv << "\n";
    }
    emit(o.out, csv.str());
    return code;
}

// ---- simulate / compare ----------------------------------------------------

int cmd_simulate(const Options& o) {
    const Scenario s = require_scenario(o);
    const auto names = policy_names(o, "faa");
    if (names.size() != 1) throw UsageError("simulate takes exactly one --policy");
    const auto trace = run_episode(s, parse_policy(names.front(), o, o.seed), episode_config(o));
    std::cerr << names.front() << ": system lifetime " << trace.system_lifetime << " intervals"
              << (trace.censored ? " (censored at horizon)" : "") << "\n";
    emit(o.out, trace.to_csv());
    return kOk;
}

int cmd_compare(const Options& o) {
    const Scenario s = require_scenario(o);
    const auto names = policy_names(o, "faa,optimal,manual,each");
    EpisodeConfig cfg = episode_config(o);
    cfg.record_steps = false;
    const std::int64_t each = run_episode(s, Policy::each(), cfg).system_lifetime;
    std::ostringstream csv;
    csv << "policy,system_lifetime_intervals,censored,increment_pct_vs_each\n" << std::fixed << std::setprecision(4);
    for (const auto& n : names) {
        const auto tr = run_episode(s, parse_policy(n, o, o.seed), cfg);
        csv << parse_policy(n, o, o.seed).name() << "," << tr.system_lifetime << "," << (tr.censored ? 1 : 0) << ","
            << increment_pct(tr.system_lifetime, each) << "\n";
    }
    emit(o.out, csv.str());
    return kOk;
}

// ---- sweep -----------------------------------------------------------------

struct Range {
    std::string key;
    std::vector<double> values;
};

Range parse_range(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw UsageError("--sweep expects KEY=START:STOP:STEP");
    Range r{text.substr(0, eq), {}};
    const auto parts = split(text.substr(eq + 1), ':');
    if (parts.size() != 3) throw UsageError("--sweep expects KEY=START:STOP:STEP");
    double start = 0, stop = 0, step = 0;
    try {
        start = std::stod(parts[0]);
        stop = std::stod(parts[1]);
        step = std::stod(parts[2]);
    } catch (const std::exception&) {
        throw UsageError("--sweep bounds must be numbers");
    }
    if (!(step > 0)) throw UsageError("--sweep step must be positive");
    for (int k = 0;; ++k) {
        const double v = start + k * step;
        if (v > stop + 1e-9 * std::max(1.0, std::abs(stop))) break;
        r.values.push_back(v);
    }
    if (r.values.empty()) throw UsageError("empty sweep range");
    return r;
}

/// Functions-per-device sweep on the random ensemble; lifetimes and
/// increments are means over --instances ensemble draws.
std::vector<SweepRow> length_sweep(const Options& o, const Range& range, const std::vector<std::string>& names) {
    const EpisodeConfig cfg = [&] {
        auto c = episode_config(o);
        c.record_steps = false;
        return c;
    }();
    std::vector<SweepRow> rows;
    for (double v : range.values) {
        const int k = static_cast<int>(std::llround(v));
        if (k < 1) throw UsageError("functions per device must be at least 1");
        std::vector<double> life(names.size(), 0.0), inc(names.size(), 0.0);
        for (int j = 0; j < o.instances; ++j) {
            EnsembleConfig ec;
            ec.functions_per_device = k;
            const Scenario s = generate_ensemble(ec, o.seed + static_cast<std::uint64_t>(j))[0];
            const std::int64_t each = run_episode(s, Policy::each(), cfg).system_lifetime;
            for (std::size_t n = 0; n < names.size(); ++n) {
                const Policy pol = parse_policy(names[n], o, o.seed + static_cast<std::uint64_t>(j));
                const std::int64_t l = pol.kind == Policy::Kind::Each ? each : run_episode(s, pol, cfg).system_lifetime;
                life[n] += static_cast<double>(l);
                inc[n] += increment_pct(l, each);
            }
            log(LogLevel::Debug, "length " + std::to_string(k) + " instance " + std::to_string(j) + " done");
        }
        for (std::size_t n = 0; n < names.size(); ++n) {
            rows.push_back({parse_policy(names[n], o, 0).name(), v, std::llround(life[n] / o.instances),
                            inc[n] / o.instances});
        }
    }
    return rows;
}

int cmd_sweep(const Options& o) {
    if (o.sweep.empty()) throw UsageError("--sweep KEY=START:STOP:STEP is required");
    const Range range = parse_range(o.sweep);
    const auto names = policy_names(o, "faa,manual,each");
    if (o.instances < 1) throw UsageError("--instances must be at least 1");

    std::vector<SweepRow> rows;
    if (range.key == "length") {
        rows = length_sweep(o, range, names);
    } else if (range.key == "charge" || range.key == "availability") {
        const Scenario base = require_scenario(o);
        SweepSpec spec;
        spec.values = range.values;
        if (range.key == "charge") {
            spec.key = SweepSpec::Key::Charge;
            spec.device = o.device;
        } else {
            spec.key = SweepSpec::Key::Availability;
            spec.windowed = split(o.windowed, ',');
            if (spec.windowed.empty()) {
                for (const auto& d : base.devices) {
                    if (d.tier != Tier::Tier1) spec.windowed.push_back(d.id);
                }
            }
        }
        std::vector<Policy> pols;
        for (const auto& n : names) pols.push_back(parse_policy(n, o, o.seed));
        auto cfg = episode_config(o);
        rows = run_usecase_sweep(base, spec, pols, cfg);
    } else {
        throw UsageError("unknown sweep key '" + range.key + "' (expected length, charge or availability)");
    }
    emit(o.out, sweep_csv(rows, range.key));
    return kOk;
}

// ---- gen -------------------------------------------------------------------

int cmd_gen(const Options& o) {
    Scenario s;
    if (o.kind == "ensemble") {
        EnsembleConfig ec;
        ec.functions_per_device = o.functions;
        s = generate_ensemble(ec, o.seed)[0];
    } else if (o.kind == "random") {
        auto rng = rng_stream(o.seed, "cli-random");
        s = random_instance(rng);
    } else {
        throw UsageError("unknown --kind '" + o.kind + "' (expected ensemble or random)");
    }
    emit(o.out, serialize(s));
    return kOk;
}

// ---- bench -----------------------------------------------------------------

int cmd_bench(const Options& o) {
    if (o.reps < 1 || o.max_functions < 1) throw UsageError("--reps and --max-functions must be positive");
    auto solvers = split(o.solvers, ',');
    std::ostringstream csv;
    csv << "functions_per_device,solver,reps,median_ms,min_ms,status\n" << std::fixed << std::setprecision(4);
    ExactOptions eo, brute;
    eo.cap = o.cap;
    brute.cap = o.brute_cap;
    for (int k = 1; k <= o.max_functions; ++k) {
        EnsembleConfig ec;
        ec.functions_per_device = k;
        const Problem p(generate_ensemble(ec, o.seed)[0]);
        for (const auto& solver : solvers) {
            std::vector<double> ms;
            std::string status = "ok";
            for (int rep = 0; rep < o.reps && status == "ok"; ++rep) {
                const auto t0 = std::chrono::steady_clock::now();
                try {
                    if (solver == "faa") faa_allocate(p);
                    else if (solver == "bb") branch_and_bound_solve(p, eo);
                    else if (solver == "brute") brute_force_solve(p, brute);
                    else if (solver == "lp") relax_solve(p);
                    else throw UsageError("unknown solver '" + solver + "'");
                } catch (const TooLarge&) {
                    status = "too_large";
                    break;
                } catch (const Error& e) {
                    if (!is_infeasible(e)) throw;
                    status = "infeasible";
                    break;
                }
                ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
            }
            csv << k << "," << solver << "," << ms.size() << ",";
            if (ms.empty()) {
                csv << ",," << status << "\n";
                continue;
            }
            std::sort(ms.begin(), ms.end());
            csv << ms[ms.size() / 2] << "," << ms.front() << "," << status << "\n";
            log(LogLevel::Info, solver + " k=" + std::to_string(k) + " median " + std::to_string(ms[ms.size() / 2]) + " ms");
        }
    }
    emit(o.out, csv.str());
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Energy-aware allocation of function chains across wearable devices"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--out", o.out, "Output file (default: stdout)");
        sub->add_option("--seed", o.seed, "Master seed for all random streams");
    };
    auto episodes = [&](CLI::App* sub) {
        sub->add_option("--realloc", o.realloc, "Reallocation cadence in intervals");
        sub->add_option("--horizon", o.horizon, "Episode horizon in intervals");
        sub->add_option("--cap", o.cap, "Combination cap for the OPTIMAL policy");
    };

    auto* solve = app.add_subcommand("solve", "Run solvers on a static scenario");
    solve->add_option("--scenario", o.scenario, "Scenario JSON")->required();
    solve->add_option("--solver", o.solvers, "Comma list of brute, bb, lp, faa");
    solve->add_option("--cap", o.cap, "Combination cap for exact solvers");
    solve->add_flag("--timing", o.timing, "Append wall time per solver");
    common(solve);

    auto* simulate = app.add_subcommand("simulate", "Simulate one policy until the first Tier-1 device dies");
    simulate->add_option("--scenario", o.scenario, "Scenario JSON")->required();
    simulate->add_option("--policy", o.policies, "faa, optimal, manual or each");
    common(simulate);
    episodes(simulate);

    auto* compare = app.add_subcommand("compare", "Simulate several policies on one scenario");
    compare->add_option("--scenario", o.scenario, "Scenario JSON")->required();
    compare->add_option("--policy", o.policies, "Comma list of policies");
    common(compare);
    episodes(compare);

    auto* sweep = app.add_subcommand("sweep", "Lifetime increment over EACH across a parameter range");
    sweep->add_option("--sweep", o.sweep, "length|charge|availability=START:STOP:STEP")->required();
    sweep->add_option("--scenario", o.scenario, "Scenario JSON (charge and availability sweeps)");
    sweep->add_option("--policy", o.policies, "Comma list of policies");
    sweep->add_option("--device", o.device, "Device whose charge moves (charge sweep)");
    sweep->add_option("--windowed", o.windowed, "Comma list of devices whose window moves (availability sweep)");
    sweep->add_option("--instances", o.instances, "Ensemble draws per point (length sweep)");
    common(sweep);
    episodes(sweep);

    auto* gen = app.add_subcommand("gen", "Write a generated scenario");
    gen->add_option("--kind", o.kind, "ensemble or random");
    gen->add_option("--functions", o.functions, "Functions per device (ensemble)");
    common(gen);

    auto* bench = app.add_subcommand("bench", "Time solvers on 3-device ensembles");
    bench->callback([&] {
        if (bench->count("--solver") == 0) o.solvers = "faa,bb,brute";
        if (bench->count("--cap") == 0) o.cap = 2'000'000'000;
    });
    bench->add_option("--solver", o.solvers, "Comma list of faa, bb, brute, lp");
    bench->add_option("--reps", o.reps, "Repetitions per point");
    bench->add_option("--max-functions", o.max_functions, "Largest functions-per-device");
    bench->add_option("--cap", o.cap, "Combination cap for branch and bound");
    bench->add_option("--brute-cap", o.brute_cap, "Combination cap for brute force");
    common(bench);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kError;
    }

    try {
        if (*solve) return cmd_solve(o);
        if (*simulate) return cmd_simulate(o);
        if (*compare) return cmd_compare(o);
        if (*sweep) return cmd_sweep(o);
        if (*gen) return cmd_gen(o);
        if (*bench) return cmd_bench(o);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return is_infeasible(e) ? kInfeasible : kError;
    }
    return kError;
}
