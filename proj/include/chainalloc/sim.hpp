#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "exact.hpp"
#include "faa.hpp"
#include "model.hpp"
#include "objective.hpp"
#include "random.hpp"

namespace chainalloc {

struct Policy {
    enum class Kind { Faa, Optimal, Manual, Each, FaaAfv };
    Kind kind = Kind::Faa;
    std::uint64_t seed = 0;              // Manual only
    std::uint64_t cap = 2'000'000'000;   // Optimal only

    static Policy faa() { return {Kind::Faa}; }
    static Policy optimal(std::uint64_t cap = 2'000'000'000) { return {Kind::Optimal, 0, cap}; }
    static Policy manual(std::uint64_t seed) { return {Kind::Manual, seed}; }
    static Policy each() { return {Kind::Each}; }

    std::string name() const {
        switch (kind) {
            case Kind::Faa: return "FAA";
            case Kind::Optimal: return "OPTIMAL";
            case Kind::Manual: return "MANUAL";
            case Kind::Each: return "EACH";
            case Kind::FaaAfv: return "FAA_AFV";
        }
        return "?";
    }
};

/// Every request runs on its own origin device (or its pinned host); a
/// step the origin cannot perform goes to the first device owning it.
inline std::vector<DeviceIndex> each_hosts(const Problem& p) {
    std::vector<DeviceIndex> host(p.num_requests(), npos);
    for (RequestIndex r = 0; r < p.num_requests(); ++r) {
        const auto& req = p.request(r);
        if (req.pinned != npos) {
            host[r] = req.pinned;
        } else if (p.instance_at(req.type, req.origin) != npos) {
            host[r] = req.origin;
        } else {
            host[r] = p.hosts_of(req.type).front();
        }
    }
    return host;
}

/// Uniformly random owner per request; pinned steps stay put.
inline std::vector<DeviceIndex> manual_hosts(const Problem& p, std::mt19937_64& rng) {
    std::vector<DeviceIndex> host(p.num_requests(), npos);
    for (RequestIndex r = 0; r < p.num_requests(); ++r) {
        const auto& req = p.request(r);
        if (req.pinned != npos) {
            host[r] = req.pinned;
            continue;
        }
        const auto& hosts = p.hosts_of(req.type);
        host[r] = hosts[std::uniform_int_distribution<std::size_t>(0, hosts.size() - 1)(rng)];
    }
    return host;
}

/// Allocation chosen by `policy` for a static problem. `epoch` selects the
/// random sub-stream of MANUAL.
inline Assignment plan(const Problem& p, const Policy& policy, std::uint64_t epoch = 0) {
    switch (policy.kind) {
        case Policy::Kind::Faa:
            try {
                return faa_allocate(p).assignment;
            } catch (const MinLifetimeViolated& e) {
                throw PolicyFailure(std::string("FAA: ") + e.what());
            }
        case Policy::Kind::Optimal: {
            ExactOptions opt;
            opt.cap = policy.cap;
            try {
                return branch_and_bound_solve(p, opt).assignment;
            } catch (const Infeasible& e) {
                throw PolicyFailure(std::string("OPTIMAL: ") + e.what());
            }
        }
        case Policy::Kind::Manual: {
            auto rng = rng_stream(policy.seed, "manual", epoch);
            return make_assignment(p, manual_hosts(p, rng));
        }
        case Policy::Kind::Each:
            return make_assignment(p, each_hosts(p));
        case Policy::Kind::FaaAfv:
            throw PolicyFailure("FAA_AFV is not implemented");
    }
    throw PolicyFailure("unknown policy");
}

struct EpisodeConfig {
    std::int64_t realloc_every = 30;
    std::int64_t max_intervals = 10'000'000;
    bool record_steps = true;
};

struct EpisodeTrace {
    struct Step {
        std::int64_t t = 0;                 // intervals elapsed at the end of the step
        std::vector<std::int64_t> energy;   // remaining per device, µJ
        int assignment = -1;
    };
    struct Event {
        std::int64_t t = 0;
        std::string device;  // empty for system-wide events
        std::string kind;    // realloc, attach, detach, death, policy_failure, horizon
        std::string detail;
    };
    /// Hosts chosen at one reallocation, by request identity.
    struct Allocation {
        std::int64_t t = 0;
        std::vector<std::pair<RequestId, std::string>> hosts;
    };

    std::vector<std::string> devices;
    std::vector<std::int64_t> initial;  // µJ
    std::vector<std::int64_t> final;    // µJ
    std::vector<std::int64_t> drained;  // µJ, summed decrements
    std::vector<Step> steps;
    std::vector<Event> events;
    std::vector<Allocation> allocations;
    std::int64_t system_lifetime = 0;  // intervals
    bool censored = false;             // horizon reached before any Tier-1 death

    /// t,device,energy_mj,event: one row per device per step, then events.
    std::string to_csv() const {
        std::ostringstream out;
        out << "t,device,energy_mj,event\n";
        out << std::fixed << std::setprecision(3);
        std::size_t e = 0;
        auto flush_events = [&](std::int64_t upto) {
            for (; e < events.size() && events[e].t <= upto; ++e) {
                out << events[e].t << "," << events[e].device << ",," << events[e].kind;
                if (!events[e].detail.empty()) out << ":" << events[e].detail;
                out << "\n";
            }
        };
        flush_events(0);
        for (const auto& s : steps) {
            for (std::size_t i = 0; i < devices.size(); ++i) {
                out << s.t << "," << devices[i] << "," << static_cast<double>(s.energy[i]) / 1000.0 << ",\n";
            }
            flush_events(s.t);
        }
        flush_events(std::numeric_limits<std::int64_t>::max());
        return out.str();
    }
};

namespace detail {

/// Scenario restricted to `keep`; chains from dropped devices vanish and
/// pins onto dropped devices are released.
inline Scenario restrict_devices(const Scenario& s, const std::vector<char>& keep) {
    Scenario out = s;
    out.devices.clear();
    out.functions.clear();
    out.chains.clear();
    out.comm.pairs.clear();
    out.comm.radio.clear();
    std::map<std::string, bool> kept;
    for (std::size_t i = 0; i < s.devices.size(); ++i) {
        kept[s.devices[i].id] = keep[i] != 0;
        if (keep[i]) out.devices.push_back(s.devices[i]);
    }
    for (const auto& f : s.functions) {
        if (kept[f.host]) out.functions.push_back(f);
    }
    for (const auto& p : s.comm.pairs) {
        if (kept[p.from] && kept[p.to]) out.comm.pairs.push_back(p);
    }
    for (const auto& [dev, prof] : s.comm.radio) {
        if (kept[dev]) out.comm.radio.emplace(dev, prof);
    }
    for (auto c : s.chains) {
        if (!kept[c.device]) continue;
        for (auto it = c.pinned.begin(); it != c.pinned.end();) {
            it = kept[it->second] ? std::next(it) : c.pinned.erase(it);
        }
        out.chains.push_back(std::move(c));
    }
    return out;
}

inline bool attached_at(const DeviceSpec& d, std::int64_t t) {
    return !d.availability || (d.availability->start <= t && t < d.availability->end);
}

}  // namespace detail

/// Flat-discharge battery simulation under a reallocation policy.
///
/// Allocation is recomputed at t = 0, every `realloc_every` intervals, on
/// every attach/detach, and when a non-Tier-1 device dies, always from the
/// current remaining energies. Each interval every attached device loses
/// C_i + A_i. The episode ends when a Tier-1 device cannot complete an
/// interval; the system lifetime counts completed intervals.
inline EpisodeTrace run_episode(const Scenario& s, const Policy& policy, const EpisodeConfig& cfg = {}) {
    if (cfg.realloc_every < 1) throw ValidationError("realloc_every must be >= 1");
    validate(s);
    const Problem full(s);
    const std::size_t n = full.num_devices();

    EpisodeTrace tr;
    for (const auto& d : full.devices()) {
        tr.devices.push_back(d.id);
        tr.initial.push_back(d.energy.uj());
    }
    std::vector<std::int64_t> energy = tr.initial;
    tr.drained.assign(n, 0);
    std::vector<char> dead(n, 0);

    std::vector<char> attached(n, 0);
    for (std::size_t i = 0; i < n; ++i) attached[i] = detail::attached_at(s.devices[i], 0) ? 1 : 0;

    std::vector<std::int64_t> drain(n, 0);
    int allocation_id = -1;
    std::uint64_t epoch = 0;

    auto replan = [&](std::int64_t t, const std::string& reason) -> bool {
        std::vector<char> keep(n, 0);
        for (std::size_t i = 0; i < n; ++i) keep[i] = attached[i] && !dead[i];
        const Scenario sub = detail::restrict_devices(s, keep);
        std::vector<Energy> live;
        for (std::size_t i = 0; i < n; ++i) {
            if (keep[i]) live.push_back(Energy::from_uj(energy[i]));
        }
        try {
            const Problem p = Problem(sub).with_energies(live);
            const Assignment a = plan(p, policy, epoch++);
            const auto added = added_costs_unchecked(p, a);
            std::fill(drain.begin(), drain.end(), 0);
            EpisodeTrace::Allocation alloc;
            alloc.t = t;
            std::size_t k = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (!keep[i]) continue;
                drain[i] = (p.device(k).baseline + added[k]).uj();
                ++k;
            }
            for (RequestIndex r = 0; r < p.num_requests(); ++r) {
                alloc.hosts.emplace_back(p.request_id(r), p.device(a.host[r]).id);
            }
            tr.allocations.push_back(std::move(alloc));
            ++allocation_id;
            tr.events.push_back({t, "", "realloc", reason});
            return true;
        } catch (const Error& e) {
            tr.events.push_back({t, "", "policy_failure", e.what()});
            return false;
        }
    };

    if (!replan(0, "start")) {
        tr.final = energy;
        return tr;
    }

    std::int64_t t = 0;
    std::int64_t since = 0;
    while (true) {
        if (t >= cfg.max_intervals) {
            tr.events.push_back({t, "", "horizon", ""});
            tr.censored = true;
            tr.system_lifetime = t;
            break;
        }
        // One interval of flat discharge.
        bool tier1_died = false;
        std::vector<std::size_t> died;
        for (std::size_t i = 0; i < n; ++i) {
            if (!attached[i] || dead[i]) continue;
            const std::int64_t dec = std::min(drain[i], energy[i]);
            const bool short_of = drain[i] > energy[i];
            energy[i] -= dec;
            tr.drained[i] += dec;
            if (short_of || (energy[i] == 0 && drain[i] > 0)) {
                died.push_back(i);
                if (full.device(i).tier == Tier::Tier1) {
                    // A partial interval does not count.
                    const std::int64_t life = short_of ? t : t + 1;
                    tr.system_lifetime = tier1_died ? std::min(tr.system_lifetime, life) : life;
                    tier1_died = true;
                }
            }
        }
        ++t;
        ++since;
        if (cfg.record_steps) tr.steps.push_back({t, energy, allocation_id});
        for (std::size_t i : died) {
            dead[i] = 1;
            tr.events.push_back({t, full.device(i).id, "death", ""});
        }
        if (tier1_died) break;

        bool changed = !died.empty();
        std::string reason = changed ? "death" : "";
        for (std::size_t i = 0; i < n; ++i) {
            const bool now = detail::attached_at(s.devices[i], t);
            if (now != static_cast<bool>(attached[i])) {
                attached[i] = now ? 1 : 0;
                tr.events.push_back({t, full.device(i).id, now ? "attach" : "detach", ""});
                changed = true;
                reason = "availability";
            }
        }
        if (!changed && since >= cfg.realloc_every) {
            changed = true;
            reason = "schedule";
        }
        if (changed) {
            since = 0;
            if (!replan(t, reason)) {
                tr.system_lifetime = t;
                break;
            }
        }
    }
    tr.final = energy;
    return tr;
}

/// Random ensemble in the style of the three-device experiment: every
/// device hosts every function type and originates one chain running all
/// types in a fixed order.
struct EnsembleConfig {
    int n_devices = 3;
    int functions_per_device = 1;
    double mu_mj = 200.0;
    double sigma_fraction = 0.1;
    double data_kb_per_interval = 13.5;
    std::vector<double> capacities_mah{400, 450, 500};
    double idle_fraction = 0.8;
    double comm_mj = 200.0;  // transfer + idle for one function moved off-device
    double baseline_mj = 0.0;
    double interval_s = 60.0;
    int count = 1;
};

/// Transfer energy per request and endpoint.
inline double ensemble_transfer_mj(const EnsembleConfig& cfg) { return cfg.comm_mj * (1.0 - cfg.idle_fraction); }

/// Idle energy charged once per device per interval.
inline double ensemble_idle_mj(const EnsembleConfig& cfg) { return cfg.comm_mj * cfg.idle_fraction; }

/// Communication cost attributable to one function of a chain once the
/// idle share is split across the chain.
inline double ensemble_comm_per_function_mj(const EnsembleConfig& cfg) {
    return ensemble_transfer_mj(cfg) + ensemble_idle_mj(cfg) / cfg.functions_per_device;
}

inline std::vector<Scenario> generate_ensemble(const EnsembleConfig& cfg, std::uint64_t seed) {
    if (cfg.n_devices < 1 || cfg.functions_per_device < 1) throw ValidationError("ensemble needs devices and functions");
    if (cfg.capacities_mah.empty()) throw ValidationError("ensemble needs capacities");
    std::vector<Scenario> out;
    for (int k = 0; k < cfg.count; ++k) {
        auto rng = rng_stream(seed, "ensemble", static_cast<std::uint64_t>(k) * 1000 + cfg.functions_per_device);
        std::normal_distribution<double> cost(cfg.mu_mj, cfg.sigma_fraction * cfg.mu_mj);
        Scenario s;
        s.interval_s = cfg.interval_s;
        s.rng_seed = seed;
        for (int i = 0; i < cfg.n_devices; ++i) {
            DeviceSpec d;
            d.id = "dev" + std::to_string(i);
            d.capacity_mah = cfg.capacities_mah[static_cast<std::size_t>(i) % cfg.capacities_mah.size()];
            d.baseline_drain_mj = cfg.baseline_mj;
            d.idle_mj = ensemble_idle_mj(cfg);
            s.devices.push_back(d);
        }
        std::vector<std::string> types;
        for (int f = 0; f < cfg.functions_per_device; ++f) types.push_back("fn" + std::to_string(f));
        for (const auto& d : s.devices) {
            for (const auto& t : types) {
                double c = cost(rng);
                while (!(c > 0.0)) c = cost(rng);
                s.functions.push_back({d.id, t, std::round(c * 1000.0) / 1000.0});
            }
        }
        const double transfer = ensemble_transfer_mj(cfg);
        for (const auto& a : s.devices) {
            for (const auto& b : s.devices) {
                if (a.id != b.id) s.comm.pairs.push_back({a.id, b.id, transfer, transfer});
            }
        }
        for (const auto& d : s.devices) s.chains.push_back({d.id, "app", types, {}});
        out.push_back(std::move(s));
    }
    return out;
}

/// Sweep over one scenario parameter; every policy is simulated at every
/// point and compared with EACH at the same point.
struct SweepSpec {
    enum class Key { Charge, Availability };
    Key key = Key::Charge;
    std::string device = "phone";         // Charge: whose initial charge moves
    std::vector<std::string> windowed;    // Availability: devices whose window moves
    std::vector<double> values;           // percent for Charge, intervals for Availability
};

struct SweepRow {
    std::string policy;
    double value = 0.0;
    std::int64_t lifetime = 0;
    double increment_pct = 0.0;  // vs EACH at the same point
};

inline Scenario apply_sweep_point(const Scenario& base, const SweepSpec& spec, double value) {
    Scenario s = base;
    if (spec.key == SweepSpec::Key::Charge) {
        bool found = false;
        for (auto& d : s.devices) {
            if (d.id == spec.device) {
                d.initial_charge = value / 100.0;
                found = true;
            }
        }
        if (!found) throw ValidationError("sweep device '" + spec.device + "' not in scenario");
        return s;
    }
    std::vector<char> keep(s.devices.size(), 1);
    for (std::size_t i = 0; i < s.devices.size(); ++i) {
        if (std::find(spec.windowed.begin(), spec.windowed.end(), s.devices[i].id) == spec.windowed.end()) continue;
        const auto len = static_cast<std::int64_t>(std::llround(value));
        if (len <= 0) keep[i] = 0;
        else s.devices[i].availability = Availability{0, len};
    }
    return detail::restrict_devices(s, keep);
}

inline double increment_pct(std::int64_t lifetime, std::int64_t reference) {
    if (reference <= 0) return 0.0;
    return 100.0 * (static_cast<double>(lifetime) - static_cast<double>(reference)) / static_cast<double>(reference);
}

/// Rows ordered by sweep value, then policy order as given.
inline std::vector<SweepRow> run_usecase_sweep(const Scenario& base, const SweepSpec& spec,
                                               const std::vector<Policy>& policies, const EpisodeConfig& cfg = {}) {
    if (spec.values.empty()) throw ValidationError("empty sweep range");
    EpisodeConfig quiet = cfg;
    quiet.record_steps = false;
    std::vector<SweepRow> rows;
    for (double value : spec.values) {
        const Scenario s = apply_sweep_point(base, spec, value);
        const std::int64_t each = run_episode(s, Policy::each(), quiet).system_lifetime;
        for (const auto& pol : policies) {
            const std::int64_t life =
                pol.kind == Policy::Kind::Each ? each : run_episode(s, pol, quiet).system_lifetime;
            rows.push_back({pol.name(), value, life, increment_pct(life, each)});
        }
    }
    return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows, const std::string& param) {
    std::ostringstream out;
    out << "policy,sweep_param,sweep_value,system_lifetime_intervals,increment_pct_vs_each\n";
    out << std::fixed;
    for (const auto& r : rows) {
        out << r.policy << "," << param << "," << std::setprecision(3) << r.value << "," << r.lifetime << ","
            << std::setprecision(4) << r.increment_pct << "\n";
    }
    return out.str();
}

/// Spearman rank correlation with average ranks for ties.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size();) {
            std::size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
            const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    const auto rx = ranks(x), ry = ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0 || syy == 0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace chainalloc
