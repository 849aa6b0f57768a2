#pragma once

// Randomized property checks shared by the unit tests and the acceptance
// report. Each check runs `cases` independent instances drawn from named
// sub-streams of one seed and counts the instances that break the property.

#include <chainalloc/exact.hpp>
#include <chainalloc/faa.hpp>
#include <chainalloc/random.hpp>
#include <chainalloc/relax.hpp>
#include <chainalloc/scenario_io.hpp>
#include <chainalloc/sim.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace chainalloc::props {

struct Outcome {
    std::string name;
    int cases = 0;
    int failures = 0;
    std::string first_failure;

    bool ok() const { return failures == 0 && cases > 0; }
};

namespace detail {

inline Outcome run(const std::string& name, int cases, const std::function<std::string(int)>& one) {
    Outcome out{name, 0, 0, {}};
    for (int k = 0; k < cases; ++k) {
        std::string why;
        try {
            why = one(k);
        } catch (const std::exception& e) {
            why = std::string("unexpected exception: ") + e.what();
        }
        ++out.cases;
        if (!why.empty()) {
            if (out.failures++ == 0) out.first_failure = "case " + std::to_string(k) + ": " + why;
        }
    }
    return out;
}

struct Solved {
    std::string solver;
    Assignment assignment;
};

/// Every solver's answer on `p`; solvers that legitimately refuse (an
/// infeasible budget) are skipped.
inline std::vector<Solved> solve_all(const Problem& p) {
    std::vector<Solved> out;
    auto attempt = [&](const std::string& name, auto&& fn) {
        try {
            out.push_back({name, fn()});
        } catch (const Infeasible&) {
        } catch (const MinLifetimeViolated&) {
        } catch (const LPInfeasible&) {
        } catch (const RoundingInfeasible&) {
        }
    };
    attempt("brute", [&] { return brute_force_solve(p).assignment; });
    attempt("bb", [&] { return branch_and_bound_solve(p).assignment; });
    attempt("faa", [&] { return faa_allocate(p).assignment; });
    attempt("lp", [&] { return relax_solve(p).integral; });
    attempt("each", [&] { return make_assignment(p, each_hosts(p)); });
    return out;
}

inline Problem random_problem(std::uint64_t seed, const char* stream, int k, double min_life = 0.2) {
    auto rng = rng_stream(seed, stream, static_cast<std::uint64_t>(k));
    RandomInstanceSpec spec;
    spec.pin_probability = 0.2;
    spec.min_lifetime_probability = min_life;
    return Problem(random_instance(rng, spec));
}

/// Small scenario for simulation: low charge keeps episodes short, and
/// non-Tier-1 devices get random availability windows.
inline Scenario random_episode_scenario(std::uint64_t seed, int k) {
    auto rng = rng_stream(seed, "prop-episode", static_cast<std::uint64_t>(k));
    Scenario s = random_instance(rng);
    std::uniform_int_distribution<int> charge(1, 4), start(0, 40), len(1, 200);
    for (auto& d : s.devices) {
        d.initial_charge = charge(rng) / 100.0;
        if (d.tier != Tier::Tier1) {
            const int a = start(rng);
            d.availability = Availability{a, a + len(rng)};
        }
    }
    return s;
}

inline Policy random_policy(std::uint64_t seed, int k) {
    switch (k % 4) {
        case 0: return Policy::faa();
        case 1: return Policy::each();
        case 2: return Policy::manual(seed + static_cast<std::uint64_t>(k));
        default: return Policy::optimal();
    }
}

}  // namespace detail

/// Every solver output satisfies constraints 1-7; exact solvers also 8.
inline Outcome constraint_satisfaction(int cases, std::uint64_t seed) {
    return detail::run("constraint-satisfaction", cases, [&](int k) -> std::string {
        const Problem p = detail::random_problem(seed, "prop-constraints", k);
        for (const auto& s : detail::solve_all(p)) {
            const auto rep = check_constraints(p, s.assignment);
            if (!rep.satisfies_through(7)) return s.solver + ": " + rep.violations.front().detail;
            if ((s.solver == "brute" || s.solver == "bb") && !rep.feasible()) return s.solver + " violates 8";
        }
        return {};
    });
}

/// In every orchestration log the first step is requested by the chain
/// origin and step s+1 by the performer of step s.
inline Outcome chain_consistency(int cases, std::uint64_t seed) {
    return detail::run("chain-consistency", cases, [&](int k) -> std::string {
        const Problem p = detail::random_problem(seed, "prop-chains", k, 0.0);
        for (const auto& s : detail::solve_all(p)) {
            const auto log = orchestrate_log(p, s.assignment);
            if (log.size() != p.num_requests()) return s.solver + ": log size";
            for (std::size_t e = 0; e < log.size(); ++e) {
                const bool first = e == 0 || log[e].chain_device != log[e - 1].chain_device ||
                                   log[e].app != log[e - 1].app;
                if (first) {
                    if (log[e].seq != 1 || log[e].requester != log[e].chain_device) return s.solver + ": chain head";
                } else if (log[e].seq != log[e - 1].seq + 1 || log[e].requester != log[e - 1].performer) {
                    return s.solver + ": requester(s+1) != performer(s) in " + log[e].chain_device + "/" + log[e].app;
                }
            }
        }
        return {};
    });
}

/// Per device, summed decrements plus remaining energy equal the initial
/// energy exactly, and energy never rises between steps.
inline Outcome energy_conservation(int cases, std::uint64_t seed) {
    return detail::run("energy-conservation", cases, [&](int k) -> std::string {
        const Scenario s = detail::random_episode_scenario(seed, k);
        EpisodeConfig cfg;
        cfg.max_intervals = 20'000;
        const auto tr = run_episode(s, detail::random_policy(seed, k), cfg);
        for (std::size_t i = 0; i < tr.devices.size(); ++i) {
            if (tr.drained[i] + tr.final[i] != tr.initial[i]) return "device " + tr.devices[i] + " leaks energy";
            std::int64_t prev = tr.initial[i];
            for (const auto& st : tr.steps) {
                if (st.energy[i] > prev || st.energy[i] < 0) return "device " + tr.devices[i] + " energy rises";
                prev = st.energy[i];
            }
        }
        return {};
    });
}

/// H_i enters a device's cost exactly once when it communicates and never
/// otherwise, both in the evaluated assignment and in the FAA bookkeeping.
inline Outcome idle_latch(int cases, std::uint64_t seed) {
    return detail::run("idle-latch", cases, [&](int k) -> std::string {
        auto rng = rng_stream(seed, "prop-idle", static_cast<std::uint64_t>(k));
        RandomInstanceSpec spec;
        spec.pin_probability = 0.2;
        Scenario sc = random_instance(rng, spec);
        for (auto& d : sc.devices) d.idle_mj = std::uniform_int_distribution<int>(1, 300)(rng);
        const Problem p(sc);
        for (const auto& s : detail::solve_all(p)) {
            const auto added = added_costs_unchecked(p, s.assignment);
            std::vector<Energy> without_idle(p.num_devices());
            std::vector<int> links(p.num_devices(), 0);
            std::vector<char> on(p.num_instances(), 0);
            for (RequestIndex r = 0; r < p.num_requests(); ++r) {
                const DeviceIndex h = s.assignment.host[r];
                const InstanceIndex v = p.instance_at(p.request(r).type, h);
                if (!on[v]) {
                    on[v] = 1;
                    without_idle[h] += p.instance(v).cost;
                }
                const DeviceIndex q = requester_of(p, s.assignment.host, r);
                if (q != h) {
                    without_idle[q] += p.comm(p.request(r).type, q, h).request_side;
                    without_idle[h] += p.comm(p.request(r).type, q, h).serve_side;
                    ++links[q];
                    ++links[h];
                }
            }
            for (DeviceIndex i = 0; i < p.num_devices(); ++i) {
                const Energy idle = added[i] - without_idle[i];
                const Energy expect = links[i] > 0 ? p.device(i).idle : Energy();
                if (idle != expect) return s.solver + ": idle charged " + std::to_string(idle.uj()) + " uJ on " + p.device(i).id;
                if ((links[i] > 0) != (s.assignment.comm[i] != 0)) return s.solver + ": z flag mismatch";
            }
        }
        const auto faa = faa_allocate(p);
        if (!faa.steps.empty()) {
            const auto added = added_costs_unchecked(p, faa.assignment);
            for (DeviceIndex i = 0; i < p.num_devices(); ++i) {
                if (faa.steps.back().loads_after[i] != p.device(i).baseline + added[i]) return "faa bookkeeping drifts";
            }
        }
        return {};
    });
}

/// Identical inputs give byte-identical CSV: traces, sweeps, scenario text.
inline Outcome determinism(int cases, std::uint64_t seed) {
    return detail::run("determinism", cases, [&](int k) -> std::string {
        const Scenario s = detail::random_episode_scenario(seed, k);
        EpisodeConfig cfg;
        cfg.max_intervals = 20'000;
        const Policy pol = detail::random_policy(seed, k);
        if (run_episode(s, pol, cfg).to_csv() != run_episode(s, pol, cfg).to_csv()) return "trace differs";
        if (serialize(s) != serialize(parse_scenario(serialize(s)))) return "scenario text differs";
        SweepSpec spec;
        spec.device = s.devices.front().id;
        spec.values = {1, 3};
        const std::vector<Policy> pols{Policy::faa(), Policy::manual(static_cast<std::uint64_t>(k))};
        if (sweep_csv(run_usecase_sweep(s, spec, pols, cfg), "charge") !=
            sweep_csv(run_usecase_sweep(s, spec, pols, cfg), "charge"))
            return "sweep differs";
        return {};
    });
}

}  // namespace chainalloc::props
