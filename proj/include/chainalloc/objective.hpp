#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "energy.hpp"
#include "errors.hpp"
#include "model.hpp"

namespace chainalloc {

/// Request -> hosting device, plus the indicator sets the mapping implies:
/// `active` (w, per instance) and `comm` (z, per device).
struct Assignment {
    std::vector<DeviceIndex> host;  // per request; npos = unmapped
    std::vector<char> active;
    std::vector<char> comm;

    friend bool operator==(const Assignment&, const Assignment&) = default;
};

/// Device that issues request `r` under `host`: the chain origin for the
/// first step, otherwise the performer of the nearest mapped previous step.
inline DeviceIndex requester_of(const Problem& p, const std::vector<DeviceIndex>& host, RequestIndex r) {
    RequestIndex prev = p.request(r).prev;
    while (prev != npos) {
        if (host[prev] != npos) return host[prev];
        prev = p.request(prev).prev;
    }
    return p.request(r).origin;
}

namespace detail {

inline bool mapping_ok(const Problem& p, const std::vector<DeviceIndex>& host, RequestIndex r) {
    const DeviceIndex h = host[r];
    return h != npos && h < p.num_devices() && p.instance_at(p.request(r).type, h) != npos;
}

}  // namespace detail

/// Builds an assignment and derives its w/z indicators. Unmapped or
/// type-mismatched entries contribute nothing.
inline Assignment make_assignment(const Problem& p, std::vector<DeviceIndex> host) {
    Assignment a;
    a.host = std::move(host);
    a.host.resize(p.num_requests(), npos);
    a.active.assign(p.num_instances(), 0);
    a.comm.assign(p.num_devices(), 0);
    for (RequestIndex r = 0; r < p.num_requests(); ++r) {
        if (!detail::mapping_ok(p, a.host, r)) continue;
        const DeviceIndex h = a.host[r];
        a.active[p.instance_at(p.request(r).type, h)] = 1;
        const DeviceIndex q = requester_of(p, a.host, r);
        if (q != h) {
            a.comm[q] = 1;
            a.comm[h] = 1;
        }
    }
    return a;
}

/// A_i for every device, summed over the mapped requests only.
inline std::vector<Energy> added_costs_unchecked(const Problem& p, const Assignment& a) {
    std::vector<Energy> added(p.num_devices());
    std::vector<char> active(p.num_instances(), 0);
    std::vector<char> comm(p.num_devices(), 0);
    for (RequestIndex r = 0; r < p.num_requests(); ++r) {
        if (!detail::mapping_ok(p, a.host, r)) continue;
        const auto& req = p.request(r);
        const DeviceIndex h = a.host[r];
        const InstanceIndex v = p.instance_at(req.type, h);
        if (!active[v]) {
            active[v] = 1;
            added[h] += p.instance(v).cost;
        }
        const DeviceIndex q = requester_of(p, a.host, r);
        if (q != h) {
            const auto& c = p.comm(req.type, q, h);
            added[q] += c.request_side;
            added[h] += c.serve_side;
            comm[q] = 1;
            comm[h] = 1;
        }
    }
    for (DeviceIndex i = 0; i < p.num_devices(); ++i) {
        if (comm[i]) added[i] += p.device(i).idle;
    }
    return added;
}

/// Throws InvalidAssignment unless every request is mapped to a device
/// owning its type and the indicator sets match the mapping.
inline void require_valid(const Problem& p, const Assignment& a) {
    if (a.host.size() != p.num_requests()) throw InvalidAssignment("mapping size does not match request count");
    for (RequestIndex r = 0; r < p.num_requests(); ++r) {
        if (a.host[r] == npos) throw InvalidAssignment("request " + std::to_string(r) + " is unmapped");
        if (!detail::mapping_ok(p, a.host, r))
            throw InvalidAssignment("request " + std::to_string(r) + " mapped to a device lacking its function");
    }
    const Assignment derived = make_assignment(p, a.host);
    if (derived.active != a.active) throw InvalidAssignment("active-instance set inconsistent with mapping");
    if (derived.comm != a.comm) throw InvalidAssignment("communication flags inconsistent with mapping");
}

/// A_i: active function costs on i, request- and serve-side communication
/// for i's cross-device traffic, and H_i once if i communicates at all.
inline Energy added_cost(const Problem& p, const Assignment& a, DeviceIndex device) {
    require_valid(p, a);
    return added_costs_unchecked(p, a)[device];
}

struct LifetimeReport {
    struct Row {
        std::string device;
        Tier tier = Tier::Tier1;
        Energy energy;
        Energy baseline;
        Energy added;
        CostRatio ratio;   // (C_i + A_i) / E_i
        double lifetime = 0.0;  // intervals
    };
    std::vector<Row> rows;
    CostRatio system_cost;  // max ratio over Tier-1 devices
    double system_lifetime = std::numeric_limits<double>::infinity();
    DeviceIndex bottleneck = npos;

    std::string bottleneck_id() const { return bottleneck == npos ? std::string() : rows[bottleneck].device; }
};

/// Max over Tier-1 devices of (C_i + added_i) / E_i; ties resolved to the
/// lexicographically smallest device id. Returns the argmax via `which`.
inline CostRatio tier1_cost(const Problem& p, const std::vector<Energy>& added, DeviceIndex* which = nullptr) {
    CostRatio worst = CostRatio::zero();
    DeviceIndex arg = npos;
    for (DeviceIndex i = 0; i < p.num_devices(); ++i) {
        const auto& d = p.device(i);
        if (d.tier != Tier::Tier1) continue;
        const CostRatio r(d.baseline + added[i], d.energy);
        if (arg == npos || r > worst || (r == worst && d.id < p.device(arg).id)) {
            worst = r;
            arg = i;
        }
    }
    if (which) *which = arg;
    return worst;
}

inline LifetimeReport lifetime_report(const Problem& p, const std::vector<Energy>& added) {
    LifetimeReport rep;
    for (DeviceIndex i = 0; i < p.num_devices(); ++i) {
        const auto& d = p.device(i);
        LifetimeReport::Row row;
        row.device = d.id;
        row.tier = d.tier;
        row.energy = d.energy;
        row.baseline = d.baseline;
        row.added = added[i];
        row.ratio = CostRatio(d.baseline + added[i], d.energy);
        row.lifetime = row.ratio.lifetime();
        rep.rows.push_back(row);
    }
    rep.system_cost = tier1_cost(p, added, &rep.bottleneck);
    rep.system_lifetime = rep.bottleneck == npos ? std::numeric_limits<double>::infinity()
                                                 : rep.rows[rep.bottleneck].lifetime;
    return rep;
}

/// T_i = E_i / (C_i + A_i); T = min over Tier-1 devices.
inline LifetimeReport system_lifetime(const Problem& p, const Assignment& a) {
    require_valid(p, a);
    return lifetime_report(p, added_costs_unchecked(p, a));
}

/// (C_i + A_i) / E_i <= 1 / T_i*, evaluated exactly.
inline bool meets_min_lifetime(const Problem::Device& d, Energy load) {
    if (d.min_lifetime == 0) return true;
    return static_cast<__int128>(load.uj()) * static_cast<__int128>(d.min_lifetime) <= d.energy.uj();
}

struct Violation {
    int constraint = 0;
    std::string detail;
};

struct FeasibilityReport {
    std::vector<Violation> violations;

    bool feasible() const { return violations.empty(); }
    /// True when no constraint numbered <= `last` is violated.
    bool satisfies_through(int last) const {
        for (const auto& v : violations) {
            if (v.constraint <= last) return false;
        }
        return true;
    }
    bool has(int constraint) const {
        for (const auto& v : violations) {
            if (v.constraint == constraint) return true;
        }
        return false;
    }
};

/// Lists every violated constraint (1-8) of the allocation problem.
/// Binary indicators (1) and x/y pairing (5) hold by construction of
/// Assignment; 2 is a property of the cost model.
inline FeasibilityReport check_constraints(const Problem& p, const Assignment& a) {
    FeasibilityReport rep;
    auto add = [&](int c, std::string d) { rep.violations.push_back({c, std::move(d)}); };

    for (TypeIndex t = 0; t < p.num_types(); ++t) {
        for (DeviceIndex i = 0; i < p.num_devices(); ++i) {
            const auto& c = p.comm(t, i, i);
            if (c.request_side.uj() != 0 || c.serve_side.uj() != 0)
                add(2, "nonzero self-communication cost on '" + p.device(i).id + "'");
        }
    }

    std::vector<DeviceIndex> host = a.host;
    host.resize(p.num_requests(), npos);
    for (RequestIndex r = 0; r < p.num_requests(); ++r) {
        const auto id = p.request_id(r);
        const std::string name = id.device + "/" + id.app + "#" + std::to_string(id.seq);
        if (host[r] == npos) {
            add(4, "request " + name + " is not assigned");
        } else if (host[r] >= p.num_devices() || p.instance_at(p.request(r).type, host[r]) == npos) {
            add(3, "request " + name + " mapped to a device without '" + p.type_name(p.request(r).type) + "'");
            host[r] = npos;
        }
    }

    const Assignment derived = make_assignment(p, host);
    if (a.active.size() != derived.active.size() || a.active != derived.active)
        add(6, "active-instance set inconsistent with mapping");
    if (a.comm.size() != derived.comm.size() || a.comm != derived.comm)
        add(7, "communication flags inconsistent with mapping");

    const auto added = added_costs_unchecked(p, derived);
    for (DeviceIndex i = 0; i < p.num_devices(); ++i) {
        const auto& d = p.device(i);
        if (!meets_min_lifetime(d, d.baseline + added[i]))
            add(8, "device '" + d.id + "' falls below its minimum lifetime");
    }
    return rep;
}

/// Incremental C_i + A_i bookkeeping for search procedures. Requests must
/// be assigned so that a chain's previous step is already mapped, and
/// unassigned in reverse order.
class LoadTracker {
public:
    explicit LoadTracker(const Problem& p)
        : p_(&p),
          host_(p.num_requests(), npos),
          load_(p.num_devices()),
          uses_(p.num_instances(), 0),
          links_(p.num_devices(), 0) {
        for (DeviceIndex i = 0; i < p.num_devices(); ++i) load_[i] = p.device(i).baseline;
    }

    const std::vector<DeviceIndex>& hosts() const { return host_; }
    Energy load(DeviceIndex i) const { return load_[i]; }
    const std::vector<Energy>& loads() const { return load_; }
    int uses(InstanceIndex v) const { return uses_[v]; }
    bool linked(DeviceIndex i) const { return links_[i] > 0; }
    std::size_t active_count() const { return active_; }

    DeviceIndex requester(RequestIndex r) const {
        const auto& req = p_->request(r);
        return req.prev == npos ? req.origin : host_[req.prev];
    }

    void assign(RequestIndex r, DeviceIndex h) {
        const auto& req = p_->request(r);
        const InstanceIndex v = p_->instance_at(req.type, h);
        host_[r] = h;
        if (uses_[v]++ == 0) {
            load_[h] += p_->instance(v).cost;
            ++active_;
        }
        const DeviceIndex q = requester(r);
        if (q != h) {
            const auto& c = p_->comm(req.type, q, h);
            load_[q] += c.request_side;
            load_[h] += c.serve_side;
            link(q, +1);
            link(h, +1);
        }
    }

    /// Switches an instance on without routing a request to it.
    void reserve(InstanceIndex v) {
        if (uses_[v]++ == 0) {
            load_[p_->instance(v).device] += p_->instance(v).cost;
            ++active_;
        }
    }

    void unassign(RequestIndex r) {
        const auto& req = p_->request(r);
        const DeviceIndex h = host_[r];
        const InstanceIndex v = p_->instance_at(req.type, h);
        const DeviceIndex q = requester(r);
        if (q != h) {
            const auto& c = p_->comm(req.type, q, h);
            load_[q] -= c.request_side;
            load_[h] -= c.serve_side;
            link(q, -1);
            link(h, -1);
        }
        if (--uses_[v] == 0) {
            load_[h] -= p_->instance(v).cost;
            --active_;
        }
        host_[r] = npos;
    }

    CostRatio ratio(DeviceIndex i) const { return CostRatio(load_[i], p_->device(i).energy); }

    CostRatio system_cost() const {
        CostRatio worst = CostRatio::zero();
        for (DeviceIndex i = 0; i < p_->num_devices(); ++i) {
            if (p_->device(i).tier != Tier::Tier1) continue;
            const CostRatio r = ratio(i);
            if (r > worst) worst = r;
        }
        return worst;
    }

    bool meets_min_lifetimes() const {
        for (DeviceIndex i = 0; i < p_->num_devices(); ++i) {
            if (!meets_min_lifetime(p_->device(i), load_[i])) return false;
        }
        return true;
    }

private:
    void link(DeviceIndex i, int delta) {
        const int before = links_[i];
        links_[i] += delta;
        if (before == 0 && links_[i] > 0) load_[i] += p_->device(i).idle;
        if (before > 0 && links_[i] == 0) load_[i] -= p_->device(i).idle;
    }

    const Problem* p_;
    std::vector<DeviceIndex> host_;
    std::vector<Energy> load_;
    std::vector<int> uses_;
    std::vector<int> links_;
    std::size_t active_ = 0;
};

}  // namespace chainalloc
