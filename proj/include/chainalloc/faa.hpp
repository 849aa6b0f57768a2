#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "model.hpp"
#include "objective.hpp"

namespace chainalloc {

/// One record of the chain orchestration log: which device asked for step
/// `seq` of chain (chain_device, app) and which device performs it.
struct OrchestrationLogEntry {
    std::string chain_device;
    std::string app;
    int seq = 1;
    std::string ftype;
    std::string requester;
    std::string performer;

    friend bool operator==(const OrchestrationLogEntry&, const OrchestrationLogEntry&) = default;
};

using OrchestrationLog = std::vector<OrchestrationLogEntry>;

/// Rebuilds the log from a complete assignment: entries ordered by chain
/// then sequence number, each step requested by the previous performer.
inline OrchestrationLog orchestrate_log(const Problem& p, const Assignment& a) {
    OrchestrationLog log;
    for (const auto& chain : p.chains()) {
        DeviceIndex requester = chain.origin;
        for (RequestIndex r : chain.steps) {
            const auto& req = p.request(r);
            if (r >= a.host.size() || a.host[r] == npos) {
                throw BrokenChain("chain '" + p.device(chain.origin).id + "/" + chain.app + "' step " +
                                  std::to_string(req.seq) + " is unassigned");
            }
            const DeviceIndex performer = a.host[r];
            log.push_back({p.device(chain.origin).id, chain.app, req.seq, p.type_name(req.type),
                           p.device(requester).id, p.device(performer).id});
            requester = performer;
        }
    }
    return log;
}

/// One greedy decision: requests R of one type handed to one instance.
struct FaaStep {
    int seq = 1;
    TypeIndex type = 0;
    InstanceIndex instance = 0;
    std::vector<RequestIndex> requests;
    double lifetime_before = 0.0;
    double lifetime_after = 0.0;
    std::vector<Energy> loads_after;  // working C_i after folding the step
};

struct FaaResult {
    Assignment assignment;
    OrchestrationLog log;
    LifetimeReport report;
    std::vector<FaaStep> steps;
};

/// Candidate considered by one selection round.
struct FaaCandidate {
    InstanceIndex instance = npos;
    std::vector<RequestIndex> requests;
    double lifetime = 0.0;       // system lifetime after the move
    double host_lifetime = 0.0;  // host's own lifetime after the move
    bool feasible = true;        // minimum-lifetime constraints still hold
};

namespace detail {

inline double lifetime_of(Energy energy, Energy load) {
    if (load.uj() <= 0) return std::numeric_limits<double>::infinity();
    return static_cast<double>(energy.uj()) / static_cast<double>(load.uj());
}

inline double system_lifetime_of(const Problem& p, const std::vector<Energy>& loads) {
    double t = std::numeric_limits<double>::infinity();
    for (DeviceIndex i = 0; i < p.num_devices(); ++i) {
        if (p.device(i).tier == Tier::Tier1) t = std::min(t, lifetime_of(p.device(i).energy, loads[i]));
    }
    return t;
}

/// Reduction of system lifetime per assigned request. With an unbounded
/// reference lifetime, any finite outcome is an infinite reduction.
inline double reduction_per_request(double reference, const FaaCandidate& c) {
    const double inf = std::numeric_limits<double>::infinity();
    if (reference == inf) return c.lifetime == inf ? 0.0 : inf;
    return (reference - c.lifetime) / static_cast<double>(c.requests.size());
}

inline bool better_candidate(double reference, const Problem& p, const FaaCandidate& a, const FaaCandidate& b) {
    if (a.feasible != b.feasible) return a.feasible;
    const double ra = reduction_per_request(reference, a);
    const double rb = reduction_per_request(reference, b);
    if (ra != rb) return ra < rb;
    if (ra == std::numeric_limits<double>::infinity() && a.lifetime != b.lifetime) {
        // Both moves end an unbounded lifetime. In the limit T* -> inf the
        // larger batch has the smaller per-request reduction.
        if (a.requests.size() != b.requests.size()) return a.requests.size() > b.requests.size();
        return a.lifetime > b.lifetime;
    }
    if (a.requests.size() != b.requests.size()) return a.requests.size() > b.requests.size();
    if (a.host_lifetime != b.host_lifetime) return a.host_lifetime > b.host_lifetime;
    return p.device(p.instance(a.instance).device).id < p.device(p.instance(b.instance).device).id;
}

}  // namespace detail

/// Selection step: for each instance of `type`, order the pending requests
/// (host-local first, then by ascending transfer cost), try every prefix of
/// that order, and keep the (instance, prefix) with the smallest system
/// lifetime reduction per request.
inline FaaCandidate select_candidate(const Problem& p, const LoadTracker& state, TypeIndex type,
                                     const std::vector<RequestIndex>& pending, double reference) {
    FaaCandidate best;
    std::vector<Energy> loads;
    std::vector<char> latched;
    for (DeviceIndex h : p.hosts_of(type)) {
        const InstanceIndex v = p.instance_at(type, h);
        std::vector<RequestIndex> order = pending;
        auto key = [&](RequestIndex r) {
            const DeviceIndex q = state.requester(r);
            if (q == h) return std::make_pair(0, Energy());
            const auto& c = p.comm(type, q, h);
            return std::make_pair(1, c.request_side + c.serve_side);
        };
        std::stable_sort(order.begin(), order.end(),
                         [&](RequestIndex a, RequestIndex b) { return key(a) < key(b); });

        loads = state.loads();
        latched.assign(p.num_devices(), 0);
        for (DeviceIndex i = 0; i < p.num_devices(); ++i) latched[i] = state.linked(i) ? 1 : 0;
        if (state.uses(v) == 0) loads[h] += p.instance(v).cost;

        FaaCandidate cand;
        cand.instance = v;
        for (RequestIndex r : order) {
            const DeviceIndex q = state.requester(r);
            if (q != h) {
                const auto& c = p.comm(type, q, h);
                loads[q] += c.request_side;
                loads[h] += c.serve_side;
                for (DeviceIndex e : {q, h}) {
                    if (!latched[e]) {
                        latched[e] = 1;
                        loads[e] += p.device(e).idle;
                    }
                }
            }
            cand.requests.push_back(r);
            cand.lifetime = detail::system_lifetime_of(p, loads);
            cand.host_lifetime = detail::lifetime_of(p.device(h).energy, loads[h]);
            cand.feasible = true;
            for (DeviceIndex i = 0; i < p.num_devices(); ++i) {
                if (!meets_min_lifetime(p.device(i), loads[i])) {
                    cand.feasible = false;
                    break;
                }
            }
            if (best.instance == npos || detail::better_candidate(reference, p, cand, best)) best = cand;
        }
    }
    return best;
}

/// Greedy function allocation over function chains.
///
/// Pinned steps are fixed first and their instances switched on. Then, for
/// each sequence number in ascending order: pinned requests, then types
/// with a single host in bulk, then every other type (highest mean instance
/// cost first) in batches chosen by select_candidate until none remain.
/// A step s+1 request is issued by the device performing step s of the
/// same chain. An instance already switched on costs nothing further, and a
/// device's idle cost is charged once.
inline FaaResult faa_allocate(const Problem& p) {
    FaaResult result;
    LoadTracker state(p);

    // Instances named by pinned steps are switched on up front.
    std::vector<char> reserved(p.num_instances(), 0);
    for (const auto& req : p.requests()) {
        if (req.pinned == npos) continue;
        const InstanceIndex v = p.instance_at(req.type, req.pinned);
        if (!reserved[v]) {
            reserved[v] = 1;
            state.reserve(v);
        }
    }
    double reference = detail::system_lifetime_of(p, state.loads());

    auto record = [&](int seq, TypeIndex type, InstanceIndex v, std::vector<RequestIndex> reqs) {
        FaaStep step;
        step.seq = seq;
        step.type = type;
        step.instance = v;
        step.requests = std::move(reqs);
        step.lifetime_before = reference;
        for (RequestIndex r : step.requests) state.assign(r, p.instance(v).device);
        step.loads_after = state.loads();
        step.lifetime_after = detail::system_lifetime_of(p, step.loads_after);
        reference = step.lifetime_after;
        result.steps.push_back(std::move(step));
    };

    int max_seq = 0;
    for (const auto& req : p.requests()) max_seq = std::max(max_seq, req.seq);

    // Dearer function types are placed first, while batteries are fullest.
    std::vector<double> mean_cost(p.num_types(), 0.0);
    for (TypeIndex t = 0; t < p.num_types(); ++t) {
        for (DeviceIndex h : p.hosts_of(t)) mean_cost[t] += p.instance(p.instance_at(t, h)).cost.mj();
        if (!p.hosts_of(t).empty()) mean_cost[t] /= static_cast<double>(p.hosts_of(t).size());
    }
    std::vector<TypeIndex> type_order(p.num_types());
    for (TypeIndex t = 0; t < p.num_types(); ++t) type_order[t] = t;
    std::stable_sort(type_order.begin(), type_order.end(),
                     [&](TypeIndex a, TypeIndex b) { return mean_cost[a] > mean_cost[b]; });

    for (int seq = 1; seq <= max_seq; ++seq) {
        std::vector<std::vector<RequestIndex>> pending(p.num_types());
        for (TypeIndex type : type_order) {
            std::vector<std::pair<DeviceIndex, RequestIndex>> pinned;
            for (RequestIndex r : p.requests_of(type)) {
                const auto& req = p.request(r);
                if (req.seq != seq) continue;
                if (req.pinned != npos) {
                    pinned.emplace_back(req.pinned, r);
                } else {
                    pending[type].push_back(r);
                }
            }
            std::stable_sort(pinned.begin(), pinned.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
            for (std::size_t k = 0; k < pinned.size();) {
                std::vector<RequestIndex> batch;
                const DeviceIndex h = pinned[k].first;
                for (; k < pinned.size() && pinned[k].first == h; ++k) batch.push_back(pinned[k].second);
                record(seq, type, p.instance_at(type, h), std::move(batch));
            }
        }
        for (TypeIndex type : type_order) {
            if (pending[type].empty() || p.hosts_of(type).size() != 1) continue;
            record(seq, type, p.instance_at(type, p.hosts_of(type).front()), std::move(pending[type]));
            pending[type].clear();
        }
        for (TypeIndex type : type_order) {
            auto& left = pending[type];
            while (!left.empty()) {
                FaaCandidate c = select_candidate(p, state, type, left, reference);
                std::vector<RequestIndex> rest;
                for (RequestIndex r : left) {
                    if (std::find(c.requests.begin(), c.requests.end(), r) == c.requests.end()) rest.push_back(r);
                }
                left = std::move(rest);
                record(seq, type, c.instance, std::move(c.requests));
            }
        }
    }

    result.assignment = make_assignment(p, state.hosts());
    result.log = orchestrate_log(p, result.assignment);
    result.report = system_lifetime(p, result.assignment);
    for (DeviceIndex i = 0; i < p.num_devices(); ++i) {
        const auto& row = result.report.rows[i];
        if (!meets_min_lifetime(p.device(i), row.baseline + row.added)) throw MinLifetimeViolated(p.device(i).id);
    }
    return result;
}

inline FaaResult faa_allocate(const Scenario& s) { return faa_allocate(Problem(s)); }

}  // namespace chainalloc
