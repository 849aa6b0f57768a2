#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "energy.hpp"
#include "errors.hpp"

namespace chainalloc {

enum class Tier { Tier1, Tier2, Extended };

inline const char* to_string(Tier t) {
    switch (t) {
        case Tier::Tier1: return "Tier1";
        case Tier::Tier2: return "Tier2";
        case Tier::Extended: return "Extended";
    }
    return "?";
}

/// Half-open window [start, end) of intervals during which a device is attached.
struct Availability {
    std::int64_t start = 0;
    std::int64_t end = 0;
    friend bool operator==(const Availability&, const Availability&) = default;
};

struct DeviceSpec {
    std::string id;
    Tier tier = Tier::Tier1;
    double capacity_mah = 0.0;
    double voltage = 3.8;
    double initial_charge = 1.0;
    double baseline_drain_mj = 0.0;  // C_i per interval
    double idle_mj = 0.0;            // H_i per interval
    std::uint64_t min_lifetime = 0;  // T_i*, 0 = unconstrained
    std::optional<Availability> availability;
    friend bool operator==(const DeviceSpec&, const DeviceSpec&) = default;
};

struct FunctionInstance {
    std::string host;
    std::string ftype;
    double cost_mj = 0.0;
    friend bool operator==(const FunctionInstance&, const FunctionInstance&) = default;
};

/// Per-interval costs when `from`'s request is served by `to`.
struct CommPair {
    std::string from;
    std::string to;
    double request_mj = 0.0;  // borne by the requester
    double serve_mj = 0.0;    // borne by the host
    friend bool operator==(const CommPair&, const CommPair&) = default;
};

struct RadioProfile {
    double tx_mw = 0.0;
    double rx_mw = 0.0;
    std::optional<double> idle_mj;
    double throughput_bps = 1.0;
    friend bool operator==(const RadioProfile&, const RadioProfile&) = default;
};

/// Communication costs, either listed per ordered device pair or derived
/// from per-device radio figures and per-function-type payload sizes.
struct CommCostModel {
    enum class Mode { Pairs, Radio };
    Mode mode = Mode::Pairs;
    std::vector<CommPair> pairs;
    std::map<std::string, RadioProfile> radio;
    std::map<std::string, double> bytes_per_interval;
    friend bool operator==(const CommCostModel&, const CommCostModel&) = default;
};

struct ChainSpec {
    std::string device;
    std::string app;
    std::vector<std::string> steps;
    std::map<int, std::string> pinned;  // 1-based sequence number -> host
    friend bool operator==(const ChainSpec&, const ChainSpec&) = default;
};

struct RequestId {
    std::string device;
    std::string app;
    int seq = 1;
    friend auto operator<=>(const RequestId&, const RequestId&) = default;
};

struct Scenario {
    double interval_s = 60.0;
    std::uint64_t rng_seed = 0;
    std::vector<DeviceSpec> devices;
    std::vector<FunctionInstance> functions;
    CommCostModel comm;
    std::vector<ChainSpec> chains;
    friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Remaining battery energy in mJ: capacity [mAh] x voltage [V] x 3600 x charge.
inline double energy_budget(const DeviceSpec& spec) {
    return spec.capacity_mah * spec.voltage * 3600.0 * spec.initial_charge;
}

inline const DeviceSpec* find_device(const Scenario& s, const std::string& id) {
    for (const auto& d : s.devices) {
        if (d.id == id) return &d;
    }
    return nullptr;
}

/// Throws ValidationError naming the first violated invariant.
inline void validate(const Scenario& s) {
    auto fail = [](const std::string& what) { throw ValidationError(what); };

    if (!(s.interval_s > 0.0)) fail("interval_s must be positive");
    if (s.devices.empty()) fail("scenario has no devices");

    std::set<std::string> ids;
    for (const auto& d : s.devices) {
        if (d.id.empty()) fail("device with empty id");
        if (!ids.insert(d.id).second) fail("duplicate device id '" + d.id + "'");
        if (!(d.capacity_mah > 0.0)) fail("device '" + d.id + "': capacity must be positive");
        if (!(d.voltage > 0.0)) fail("device '" + d.id + "': voltage must be positive");
        if (!(d.initial_charge >= 0.0 && d.initial_charge <= 1.0))
            fail("device '" + d.id + "': charge outside [0,1]");
        if (!(d.baseline_drain_mj >= 0.0)) fail("device '" + d.id + "': negative baseline drain");
        if (!(d.idle_mj >= 0.0)) fail("device '" + d.id + "': negative idle cost");
        if (d.availability && !(d.availability->start < d.availability->end))
            fail("device '" + d.id + "': availability start must precede end");
    }

    std::set<std::pair<std::string, std::string>> hosted;
    for (const auto& f : s.functions) {
        if (!ids.count(f.host)) fail("function '" + f.ftype + "' on unknown device '" + f.host + "'");
        if (f.ftype.empty()) fail("function with empty type on '" + f.host + "'");
        if (!(f.cost_mj >= 0.0)) fail("function '" + f.ftype + "' on '" + f.host + "': negative cost");
        if (!hosted.insert({f.host, f.ftype}).second)
            fail("duplicate function '" + f.ftype + "' on '" + f.host + "'");
    }
    auto owns = [&](const std::string& dev, const std::string& type) {
        return hosted.count({dev, type}) > 0;
    };

    if (s.comm.mode == CommCostModel::Mode::Pairs) {
        std::set<std::pair<std::string, std::string>> seen;
        for (const auto& p : s.comm.pairs) {
            if (!ids.count(p.from) || !ids.count(p.to))
                fail("comm pair references unknown device '" + p.from + "'->'" + p.to + "'");
            if (p.from == p.to) fail("comm pair '" + p.from + "' to itself");
            if (!(p.request_mj >= 0.0) || !(p.serve_mj >= 0.0))
                fail("comm pair '" + p.from + "'->'" + p.to + "': negative cost");
            if (!seen.insert({p.from, p.to}).second)
                fail("duplicate comm pair '" + p.from + "'->'" + p.to + "'");
        }
    } else {
        for (const auto& d : s.devices) {
            auto it = s.comm.radio.find(d.id);
            if (it == s.comm.radio.end()) fail("device '" + d.id + "' has no radio profile");
            const auto& r = it->second;
            if (!(r.tx_mw >= 0.0) || !(r.rx_mw >= 0.0))
                fail("radio profile of '" + d.id + "': negative power");
            if (r.idle_mj && !(*r.idle_mj >= 0.0)) fail("radio profile of '" + d.id + "': negative idle");
            if (!(r.throughput_bps > 0.0)) fail("radio profile of '" + d.id + "': throughput must be positive");
        }
        for (const auto& [dev, prof] : s.comm.radio) {
            if (!ids.count(dev)) fail("radio profile for unknown device '" + dev + "'");
        }
        for (const auto& [type, bytes] : s.comm.bytes_per_interval) {
            if (!(bytes >= 0.0)) fail("negative bytes_per_interval for '" + type + "'");
        }
    }

    std::set<std::pair<std::string, std::string>> chain_ids;
    for (const auto& c : s.chains) {
        if (!ids.count(c.device)) fail("chain on unknown device '" + c.device + "'");
        if (!chain_ids.insert({c.device, c.app}).second)
            fail("duplicate chain '" + c.device + "/" + c.app + "'");
        if (c.steps.empty()) fail("chain '" + c.device + "/" + c.app + "' has no steps");
        for (const auto& step : c.steps) {
            bool any = std::any_of(s.functions.begin(), s.functions.end(),
                                   [&](const FunctionInstance& f) { return f.ftype == step; });
            if (!any) fail("unhostable step '" + step + "' in chain '" + c.device + "/" + c.app + "'");
        }
        for (const auto& [seq, host] : c.pinned) {
            if (seq < 1 || seq > static_cast<int>(c.steps.size()))
                fail("chain '" + c.device + "/" + c.app + "': pinned sequence number out of range");
            if (!owns(host, c.steps[seq - 1]))
                fail("chain '" + c.device + "/" + c.app + "': pinned host '" + host +
                     "' lacks function '" + c.steps[seq - 1] + "'");
        }
    }
}

using DeviceIndex = std::size_t;
using TypeIndex = std::size_t;
using InstanceIndex = std::size_t;
using RequestIndex = std::size_t;

inline constexpr std::size_t npos = static_cast<std::size_t>(-1);

/// Energy per interval of one cross-device request, split by endpoint.
struct CommCost {
    Energy request_side;
    Energy serve_side;
};

/// Solver-facing view of a scenario: indices instead of names, integer
/// energies, and communication costs resolved per (type, requester, host).
///
/// Requests are ordered by (sequence number, chain), so the previous step
/// of any chain request always has a smaller index.
class Problem {
public:
    struct Device {
        std::string id;
        Tier tier = Tier::Tier1;
        Energy energy;    // E_i
        Energy baseline;  // C_i
        Energy idle;      // H_i
        std::uint64_t min_lifetime = 0;
    };
    struct Instance {
        DeviceIndex device = 0;
        TypeIndex type = 0;
        Energy cost;
    };
    struct Request {
        RequestIndex chain_index = 0;     // position in its chain (0-based)
        std::size_t chain = 0;
        TypeIndex type = 0;
        DeviceIndex origin = 0;
        int seq = 1;
        RequestIndex prev = npos;          // previous step of the same chain
        DeviceIndex pinned = npos;
    };
    struct Chain {
        DeviceIndex origin = 0;
        std::string app;
        std::vector<RequestIndex> steps;
    };

    Problem() = default;

    explicit Problem(const Scenario& s) {
        validate(s);
        build(s);
    }

    std::size_t num_devices() const { return devices_.size(); }
    std::size_t num_types() const { return types_.size(); }
    std::size_t num_instances() const { return instances_.size(); }
    std::size_t num_requests() const { return requests_.size(); }

    const std::vector<Device>& devices() const { return devices_; }
    const Device& device(DeviceIndex i) const { return devices_[i]; }
    const std::vector<std::string>& types() const { return types_; }
    const std::string& type_name(TypeIndex t) const { return types_[t]; }
    const std::vector<Instance>& instances() const { return instances_; }
    const Instance& instance(InstanceIndex v) const { return instances_[v]; }
    const std::vector<Request>& requests() const { return requests_; }
    const Request& request(RequestIndex r) const { return requests_[r]; }
    const std::vector<Chain>& chains() const { return chains_; }
    double interval_s() const { return interval_s_; }

    /// Instance of `type` hosted on `device`, or npos.
    InstanceIndex instance_at(TypeIndex type, DeviceIndex device) const {
        return instance_at_[type * devices_.size() + device];
    }
    const std::vector<DeviceIndex>& hosts_of(TypeIndex type) const { return hosts_of_[type]; }
    const std::vector<RequestIndex>& requests_of(TypeIndex type) const { return requests_of_[type]; }

    /// Zero when requester == host.
    const CommCost& comm(TypeIndex type, DeviceIndex requester, DeviceIndex host) const {
        const std::size_t n = devices_.size();
        return comm_[(type * n + requester) * n + host];
    }

    DeviceIndex device_index(const std::string& id) const {
        for (DeviceIndex i = 0; i < devices_.size(); ++i) {
            if (devices_[i].id == id) return i;
        }
        return npos;
    }
    TypeIndex type_index(const std::string& name) const {
        auto it = std::find(types_.begin(), types_.end(), name);
        return it == types_.end() ? npos : static_cast<TypeIndex>(it - types_.begin());
    }

    RequestId request_id(RequestIndex r) const {
        const auto& req = requests_[r];
        return RequestId{devices_[req.origin].id, chains_[req.chain].app, req.seq};
    }

    /// Copy with E_i replaced; used by the simulator to re-plan on live batteries.
    Problem with_energies(const std::vector<Energy>& energies) const {
        Problem p = *this;
        for (std::size_t i = 0; i < p.devices_.size() && i < energies.size(); ++i) {
            p.devices_[i].energy = energies[i];
        }
        return p;
    }

    /// Scales every energy figure (budgets, drains, costs) by k.
    Problem scaled(std::int64_t k) const {
        Problem p = *this;
        for (auto& d : p.devices_) {
            d.energy = d.energy * k;
            d.baseline = d.baseline * k;
            d.idle = d.idle * k;
        }
        for (auto& v : p.instances_) v.cost = v.cost * k;
        for (auto& c : p.comm_) {
            c.request_side = c.request_side * k;
            c.serve_side = c.serve_side * k;
        }
        return p;
    }

private:
    void build(const Scenario& s) {
        interval_s_ = s.interval_s;
        const std::size_t n = s.devices.size();
        for (const auto& d : s.devices) {
            Device dev;
            dev.id = d.id;
            dev.tier = d.tier;
            dev.energy = Energy::from_mj(energy_budget(d));
            dev.baseline = Energy::from_mj(d.baseline_drain_mj);
            dev.idle = Energy::from_mj(d.idle_mj);
            dev.min_lifetime = d.min_lifetime;
            if (s.comm.mode == CommCostModel::Mode::Radio) {
                const auto& prof = s.comm.radio.at(d.id);
                if (prof.idle_mj) dev.idle = Energy::from_mj(*prof.idle_mj);
            }
            devices_.push_back(dev);
        }

        auto intern = [&](const std::string& name) {
            auto it = std::find(types_.begin(), types_.end(), name);
            if (it != types_.end()) return static_cast<TypeIndex>(it - types_.begin());
            types_.push_back(name);
            return types_.size() - 1;
        };
        for (const auto& f : s.functions) intern(f.ftype);
        for (const auto& c : s.chains) {
            for (const auto& step : c.steps) intern(step);
        }

        const std::size_t nt = types_.size();
        instance_at_.assign(nt * n, npos);
        hosts_of_.assign(nt, {});
        requests_of_.assign(nt, {});
        for (const auto& f : s.functions) {
            Instance v;
            v.device = device_index(f.host);
            v.type = type_index(f.ftype);
            v.cost = Energy::from_mj(f.cost_mj);
            instance_at_[v.type * n + v.device] = instances_.size();
            instances_.push_back(v);
        }
        for (TypeIndex t = 0; t < nt; ++t) {
            for (DeviceIndex i = 0; i < n; ++i) {
                if (instance_at(t, i) != npos) hosts_of_[t].push_back(i);
            }
        }

        comm_.assign(nt * n * n, CommCost{});
        if (s.comm.mode == CommCostModel::Mode::Pairs) {
            for (const auto& p : s.comm.pairs) {
                const DeviceIndex a = device_index(p.from);
                const DeviceIndex b = device_index(p.to);
                for (TypeIndex t = 0; t < nt; ++t) {
                    comm_[(t * n + a) * n + b] =
                        CommCost{Energy::from_mj(p.request_mj), Energy::from_mj(p.serve_mj)};
                }
            }
        } else {
            for (TypeIndex t = 0; t < nt; ++t) {
                auto bit = s.comm.bytes_per_interval.find(types_[t]);
                const double bytes = bit == s.comm.bytes_per_interval.end() ? 0.0 : bit->second;
                for (DeviceIndex a = 0; a < n; ++a) {
                    for (DeviceIndex b = 0; b < n; ++b) {
                        if (a == b) continue;
                        const auto& ra = s.comm.radio.at(devices_[a].id);
                        const auto& rb = s.comm.radio.at(devices_[b].id);
                        const double seconds = bytes * 8.0 / std::min(ra.throughput_bps, rb.throughput_bps);
                        // mW x s = mJ; the host transmits the result, the requester receives it.
                        comm_[(t * n + a) * n + b] =
                            CommCost{Energy::from_mj(ra.rx_mw * seconds), Energy::from_mj(rb.tx_mw * seconds)};
                    }
                }
            }
        }

        std::vector<std::pair<int, std::size_t>> order;
        for (std::size_t c = 0; c < s.chains.size(); ++c) {
            const auto& spec = s.chains[c];
            Chain chain;
            chain.origin = device_index(spec.device);
            chain.app = spec.app;
            chains_.push_back(chain);
            for (std::size_t k = 0; k < spec.steps.size(); ++k) order.emplace_back(static_cast<int>(k), c);
        }
        std::sort(order.begin(), order.end());
        for (const auto& [k, c] : order) {
            const auto& spec = s.chains[c];
            Request r;
            r.chain = c;
            r.chain_index = static_cast<std::size_t>(k);
            r.seq = k + 1;
            r.type = type_index(spec.steps[static_cast<std::size_t>(k)]);
            r.origin = chains_[c].origin;
            if (k > 0) r.prev = chains_[c].steps.back();
            if (auto it = spec.pinned.find(k + 1); it != spec.pinned.end()) r.pinned = device_index(it->second);
            chains_[c].steps.push_back(requests_.size());
            requests_of_[r.type].push_back(requests_.size());
            requests_.push_back(r);
        }
    }

    double interval_s_ = 60.0;
    std::vector<Device> devices_;
    std::vector<std::string> types_;
    std::vector<Instance> instances_;
    std::vector<Request> requests_;
    std::vector<Chain> chains_;
    std::vector<InstanceIndex> instance_at_;
    std::vector<std::vector<DeviceIndex>> hosts_of_;
    std::vector<std::vector<RequestIndex>> requests_of_;
    std::vector<CommCost> comm_;
};

/// Per-interval energy of every (function instance, request) pairing.
///
/// Row v carries the function-cost vector over devices (nonzero only at the
/// host). Cell (v, r) carries the communication-cost vector over devices,
/// computed with the chain's origin as requester; nonzero only at requester
/// and host, all zero when they coincide, and absent (unreachable) when the
/// instance type does not match the request.
struct CostTable {
    std::vector<std::vector<Energy>> function_cost;                       // [instance][device]
    std::vector<std::vector<std::optional<std::vector<Energy>>>> comm;    // [instance][request]

    std::size_t rows() const { return function_cost.size(); }
    std::size_t cols() const { return comm.empty() ? 0 : comm.front().size(); }
    bool reachable(InstanceIndex v, RequestIndex r) const { return comm[v][r].has_value(); }
};

inline CostTable build_cost_table(const Problem& p) {
    CostTable table;
    const std::size_t n = p.num_devices();
    table.function_cost.assign(p.num_instances(), std::vector<Energy>(n));
    table.comm.assign(p.num_instances(), std::vector<std::optional<std::vector<Energy>>>(p.num_requests()));
    for (InstanceIndex v = 0; v < p.num_instances(); ++v) {
        const auto& inst = p.instance(v);
        table.function_cost[v][inst.device] = inst.cost;
        for (RequestIndex r = 0; r < p.num_requests(); ++r) {
            const auto& req = p.request(r);
            if (req.type != inst.type) continue;
            std::vector<Energy> cell(n);
            if (req.origin != inst.device) {
                const auto& c = p.comm(inst.type, req.origin, inst.device);
                cell[req.origin] += c.request_side;
                cell[inst.device] += c.serve_side;
            }
            table.comm[v][r] = std::move(cell);
        }
    }
    return table;
}

inline CostTable build_cost_table(const Scenario& s) { return build_cost_table(Problem(s)); }

}  // namespace chainalloc
