#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "faa.hpp"
#include "model.hpp"
#include "objective.hpp"

namespace chainalloc {

struct SearchStats {
    std::uint64_t nodes_expanded = 0;
    std::uint64_t assignments_evaluated = 0;
    std::uint64_t pruned = 0;
    double wall_time = 0.0;  // seconds
};

enum class InstanceStatus : std::uint8_t { Unknown, Open, Closed };

/// Branch-and-bound node. `lower_bound` bounds the cost of every completion
/// that respects the statuses (open instances serve at least one request,
/// closed ones none); `upper_bound` is the cost of one such completion, or
/// infinite when none was built.
struct BBNode {
    std::vector<InstanceStatus> status;
    std::vector<DeviceIndex> fixed;  // requests with a single admissible host; npos otherwise
    CostRatio lower_bound;
    CostRatio upper_bound = CostRatio::infinite();
    int depth = 0;
};

struct ExactOptions {
    std::uint64_t cap = 100'000'000;
    bool warm_start = true;
    /// Called for every expanded node after its bounds are computed.
    std::function<void(const BBNode&)> on_node;
};

struct ExactResult {
    Assignment assignment;
    LifetimeReport report;
    SearchStats stats;
};

/// n_1^{r_1} x ... x n_x^{r_x}: hosts per type raised to requests per type,
/// saturating at UINT64_MAX.
inline std::uint64_t combination_count(const Problem& p) {
    constexpr std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t k = 1;
    for (TypeIndex t = 0; t < p.num_types(); ++t) {
        const std::uint64_t n = p.hosts_of(t).size();
        for (std::size_t r = 0; r < p.requests_of(t).size(); ++r) {
            if (n != 0 && k > max / n) return max;
            k *= n;
        }
    }
    return k;
}

namespace detail {

inline void check_cap(const Problem& p, std::uint64_t cap) {
    const std::uint64_t k = combination_count(p);
    if (k > cap) {
        throw TooLarge("TooLarge: " + std::to_string(k) + " combinations exceed the cap of " + std::to_string(cap));
    }
}

/// Best-so-far under the ordering (cost, active instances, mapping).
class Incumbent {
public:
    bool empty() const { return !cost_.has_value(); }
    const CostRatio& cost() const { return *cost_; }
    const std::vector<DeviceIndex>& hosts() const { return hosts_; }

    bool offer(const CostRatio& cost, std::size_t active, const std::vector<DeviceIndex>& hosts) {
        if (cost_) {
            if (cost > *cost_) return false;
            if (cost == *cost_) {
                if (active > active_) return false;
                if (active == active_ && hosts >= hosts_) return false;
            }
        }
        cost_ = cost;
        active_ = active;
        hosts_ = hosts;
        return true;
    }

    /// True when `lb` cannot reach the incumbent (strict).
    bool dominates(const CostRatio& lb) const { return cost_ && lb > *cost_; }

private:
    std::optional<CostRatio> cost_;
    std::size_t active_ = 0;
    std::vector<DeviceIndex> hosts_;
};

inline std::size_t active_count(const Problem& p, const std::vector<DeviceIndex>& hosts) {
    const Assignment a = make_assignment(p, hosts);
    return static_cast<std::size_t>(std::count(a.active.begin(), a.active.end(), 1));
}

inline void warm_start(const Problem& p, Incumbent& inc) {
    try {
        const FaaResult faa = faa_allocate(p);
        inc.offer(faa.report.system_cost, active_count(p, faa.assignment.host), faa.assignment.host);
    } catch (const MinLifetimeViolated&) {
    }
}

inline ExactResult finish(const Problem& p, const Incumbent& inc, SearchStats stats,
                          std::chrono::steady_clock::time_point start) {
    if (inc.empty()) throw Infeasible("Infeasible: no assignment meets every minimum lifetime");
    ExactResult res;
    res.assignment = make_assignment(p, inc.hosts());
    res.report = system_lifetime(p, res.assignment);
    stats.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    res.stats = stats;
    return res;
}

}  // namespace detail

/// Enumerates every assignment (pinned steps stay on their hosts) and keeps
/// the one with the longest system lifetime; ties go to fewer active
/// instances, then the lexicographically smallest mapping.
inline ExactResult brute_force_solve(const Problem& p, const ExactOptions& opt = {}) {
    const auto start = std::chrono::steady_clock::now();
    detail::check_cap(p, opt.cap);
    SearchStats stats;
    detail::Incumbent inc;
    LoadTracker tracker(p);
    const std::size_t nreq = p.num_requests();

    std::function<void(RequestIndex)> dfs = [&](RequestIndex r) {
        if (r == nreq) {
            ++stats.assignments_evaluated;
            if (!tracker.meets_min_lifetimes()) return;
            inc.offer(tracker.system_cost(), tracker.active_count(), tracker.hosts());
            return;
        }
        const auto& req = p.request(r);
        for (DeviceIndex h : p.hosts_of(req.type)) {
            if (req.pinned != npos && h != req.pinned) continue;
            tracker.assign(r, h);
            dfs(r + 1);
            tracker.unassign(r);
        }
    };
    ++stats.nodes_expanded;
    dfs(0);
    return detail::finish(p, inc, stats, start);
}

inline ExactResult brute_force_solve(const Scenario& s, const ExactOptions& opt = {}) {
    return brute_force_solve(Problem(s), opt);
}

namespace detail {

class BranchAndBound {
public:
    BranchAndBound(const Problem& p, const ExactOptions& opt) : p_(p), opt_(opt), tracker_(p) {
        const std::size_t nt = p.num_types();
        pinned_hosts_.assign(nt, {});
        unpinned_.assign(nt, 0);
        for (const auto& req : p.requests()) {
            if (req.pinned != npos) {
                auto& hs = pinned_hosts_[req.type];
                if (std::find(hs.begin(), hs.end(), req.pinned) == hs.end()) hs.push_back(req.pinned);
            } else {
                ++unpinned_[req.type];
            }
        }
    }

    ExactResult run() {
        const auto start = std::chrono::steady_clock::now();
        if (opt_.warm_start) warm_start(p_, inc_);

        // First level: one primary host per requested type. The primary is
        // the lowest-indexed active instance of that type, so instances of
        // the type on lower-indexed devices are closed; the subtrees are
        // disjoint and together cover every assignment.
        std::vector<TypeIndex> requested;
        for (TypeIndex t = 0; t < p_.num_types(); ++t) {
            if (!p_.requests_of(t).empty()) requested.push_back(t);
        }
        BBNode root;
        root.status.assign(p_.num_instances(), InstanceStatus::Unknown);
        for (TypeIndex t = 0; t < p_.num_types(); ++t) {
            if (p_.requests_of(t).empty()) {
                for (DeviceIndex h : p_.hosts_of(t)) root.status[p_.instance_at(t, h)] = InstanceStatus::Closed;
            }
        }
        first_level(root, requested, 0);
        return finish(p_, inc_, stats_, start);
    }

private:
    void first_level(BBNode& node, const std::vector<TypeIndex>& types, std::size_t k) {
        if (k == types.size()) {
            BBNode child = node;
            child.depth = 1;
            expand(std::move(child));
            return;
        }
        const TypeIndex t = types[k];
        const auto& hosts = p_.hosts_of(t);
        for (std::size_t a = 0; a < hosts.size(); ++a) {
            const auto saved = node.status;
            for (std::size_t b = 0; b < a; ++b) node.status[p_.instance_at(t, hosts[b])] = InstanceStatus::Closed;
            node.status[p_.instance_at(t, hosts[a])] = InstanceStatus::Open;
            first_level(node, types, k + 1);
            node.status = saved;
        }
    }

    /// Tightens statuses; false when the node admits no completion.
    bool propagate(BBNode& node) const {
        bool changed = true;
        while (changed) {
            changed = false;
            for (TypeIndex t = 0; t < p_.num_types(); ++t) {
                if (p_.requests_of(t).empty()) continue;
                for (DeviceIndex h : pinned_hosts_[t]) {
                    auto& st = node.status[p_.instance_at(t, h)];
                    if (st == InstanceStatus::Closed) return false;
                    if (st != InstanceStatus::Open) {
                        st = InstanceStatus::Open;
                        changed = true;
                    }
                }
                std::size_t open_free = 0, unknown = 0, nonclosed = 0;
                for (DeviceIndex h : p_.hosts_of(t)) {
                    const auto st = node.status[p_.instance_at(t, h)];
                    const bool pinned = is_pinned_host(t, h);
                    if (st != InstanceStatus::Closed) ++nonclosed;
                    if (st == InstanceStatus::Open && !pinned) ++open_free;
                    if (st == InstanceStatus::Unknown) ++unknown;
                }
                if (open_free > unpinned_[t]) return false;
                if (unpinned_[t] > 0 && nonclosed == 0) return false;
                if (unknown == 0) continue;
                if (open_free == unpinned_[t]) {
                    for (DeviceIndex h : p_.hosts_of(t)) {
                        auto& st = node.status[p_.instance_at(t, h)];
                        if (st == InstanceStatus::Unknown) st = InstanceStatus::Closed;
                    }
                    changed = true;
                } else if (nonclosed == 1) {
                    for (DeviceIndex h : p_.hosts_of(t)) {
                        auto& st = node.status[p_.instance_at(t, h)];
                        if (st == InstanceStatus::Unknown) st = InstanceStatus::Open;
                    }
                    changed = true;
                }
            }
        }
        return true;
    }

    bool is_pinned_host(TypeIndex t, DeviceIndex h) const {
        const auto& hs = pinned_hosts_[t];
        return std::find(hs.begin(), hs.end(), h) != hs.end();
    }

    std::vector<DeviceIndex> admissible(const BBNode& node, RequestIndex r) const {
        const auto& req = p_.request(r);
        if (req.pinned != npos) return {req.pinned};
        std::vector<DeviceIndex> out;
        for (DeviceIndex h : p_.hosts_of(req.type)) {
            if (node.status[p_.instance_at(req.type, h)] != InstanceStatus::Closed) out.push_back(h);
        }
        return out;
    }

    /// Per-device minimum over completions: open function costs, the
    /// cheapest share of every request's transfer, and the idle cost when
    /// some request forces the device onto a cross-device link.
    std::vector<Energy> lower_loads(const BBNode& node, const std::vector<std::vector<DeviceIndex>>& adm) const {
        const std::size_t n = p_.num_devices();
        std::vector<Energy> load(n);
        for (DeviceIndex i = 0; i < n; ++i) load[i] = p_.device(i).baseline;
        for (InstanceIndex v = 0; v < p_.num_instances(); ++v) {
            if (node.status[v] == InstanceStatus::Open) load[p_.instance(v).device] += p_.instance(v).cost;
        }
        std::vector<char> forced_link(n, 0);
        std::vector<DeviceIndex> origin_only(1);
        for (RequestIndex r = 0; r < p_.num_requests(); ++r) {
            const auto& req = p_.request(r);
            const std::vector<DeviceIndex>* senders = &adm[req.prev == npos ? r : req.prev];
            if (req.prev == npos) {
                origin_only[0] = req.origin;
                senders = &origin_only;
            }
            for (DeviceIndex i = 0; i < n; ++i) {
                std::int64_t best = std::numeric_limits<std::int64_t>::max();
                bool always_linked = true;
                for (DeviceIndex q : *senders) {
                    for (DeviceIndex h : adm[r]) {
                        std::int64_t share = 0;
                        if (q != h) {
                            const auto& c = p_.comm(req.type, q, h);
                            if (i == q) share = c.request_side.uj();
                            if (i == h) share = c.serve_side.uj();
                        }
                        best = std::min(best, share);
                        if (q == h || (i != q && i != h)) always_linked = false;
                    }
                }
                load[i] += Energy::from_uj(best);
                if (always_linked) forced_link[i] = 1;
            }
        }
        for (DeviceIndex i = 0; i < n; ++i) {
            if (forced_link[i]) load[i] += p_.device(i).idle;
        }
        return load;
    }

    InstanceIndex branching_instance(const BBNode& node, const std::vector<std::vector<DeviceIndex>>& adm) const {
        std::vector<int> votes(p_.num_instances(), 0);
        std::vector<DeviceIndex> preferred(p_.num_requests(), npos);
        for (RequestIndex r = 0; r < p_.num_requests(); ++r) {
            const auto& req = p_.request(r);
            const DeviceIndex q = req.prev == npos ? req.origin : preferred[req.prev];
            std::int64_t best = std::numeric_limits<std::int64_t>::max();
            for (DeviceIndex h : adm[r]) {
                const InstanceIndex v = p_.instance_at(req.type, h);
                std::int64_t cost = node.status[v] == InstanceStatus::Open ? 0 : p_.instance(v).cost.uj();
                if (q != h) {
                    const auto& c = p_.comm(req.type, q, h);
                    cost += c.request_side.uj() + c.serve_side.uj();
                }
                if (cost < best) {
                    best = cost;
                    preferred[r] = h;
                }
            }
            ++votes[p_.instance_at(req.type, preferred[r])];
        }
        InstanceIndex pick = npos;
        for (InstanceIndex v = 0; v < p_.num_instances(); ++v) {
            if (node.status[v] != InstanceStatus::Unknown) continue;
            if (pick == npos || votes[v] > votes[pick] ||
                (votes[v] == votes[pick] && instance_key(v) < instance_key(pick))) {
                pick = v;
            }
        }
        return pick;
    }

    std::pair<std::string, std::string> instance_key(InstanceIndex v) const {
        return {p_.device(p_.instance(v).device).id, p_.type_name(p_.instance(v).type)};
    }

    /// Loads of open instances that have not received a request yet.
    std::vector<Energy> pending_open(const BBNode& node) const {
        std::vector<Energy> pending(p_.num_devices());
        for (InstanceIndex v = 0; v < p_.num_instances(); ++v) {
            if (node.status[v] == InstanceStatus::Open && tracker_.uses(v) == 0)
                pending[p_.instance(v).device] += p_.instance(v).cost;
        }
        return pending;
    }

    CostRatio cost_with(const std::vector<Energy>& extra) const {
        CostRatio worst = CostRatio::zero();
        for (DeviceIndex i = 0; i < p_.num_devices(); ++i) {
            if (p_.device(i).tier != Tier::Tier1) continue;
            const CostRatio r(tracker_.load(i) + extra[i], p_.device(i).energy);
            if (r > worst) worst = r;
        }
        return worst;
    }

    bool meets_with(const std::vector<Energy>& extra) const {
        for (DeviceIndex i = 0; i < p_.num_devices(); ++i) {
            if (!meets_min_lifetime(p_.device(i), tracker_.load(i) + extra[i])) return false;
        }
        return true;
    }

    /// Counts per type of open instances still waiting for a request, and
    /// of requests not yet placed.
    struct Demand {
        std::vector<int> idle_open;
        std::vector<int> remaining;
    };

    Demand demand(const BBNode& node) const {
        Demand d;
        d.idle_open.assign(p_.num_types(), 0);
        d.remaining.assign(p_.num_types(), 0);
        for (InstanceIndex v = 0; v < p_.num_instances(); ++v) {
            if (node.status[v] == InstanceStatus::Open) ++d.idle_open[p_.instance(v).type];
        }
        for (const auto& req : p_.requests()) ++d.remaining[req.type];
        return d;
    }

    /// Greedy completion over open instances only, using every open
    /// instance at least once. Returns its cost, or infinite.
    CostRatio upper_bound(const BBNode& node) {
        Demand d = demand(node);
        std::vector<Energy> pending = pending_open(node);
        for (RequestIndex r = 0; r < p_.num_requests(); ++r) {
            const auto& req = p_.request(r);
            const bool must_use_new = d.remaining[req.type] == d.idle_open[req.type];
            DeviceIndex best_h = npos;
            CostRatio best_cost = CostRatio::infinite();
            for (DeviceIndex h : p_.hosts_of(req.type)) {
                const InstanceIndex v = p_.instance_at(req.type, h);
                if (node.status[v] != InstanceStatus::Open) continue;
                if (req.pinned != npos && h != req.pinned) continue;
                const bool fresh = tracker_.uses(v) == 0;
                if (must_use_new && !fresh) continue;
                tracker_.assign(r, h);
                if (fresh) pending[h] -= p_.instance(v).cost;
                const CostRatio c = cost_with(pending);
                if (best_h == npos || c < best_cost) {
                    best_cost = c;
                    best_h = h;
                }
                if (fresh) pending[h] += p_.instance(v).cost;
                tracker_.unassign(r);
            }
            if (best_h == npos) {
                for (RequestIndex k = r; k-- > 0;) tracker_.unassign(k);
                return CostRatio::infinite();
            }
            const InstanceIndex v = p_.instance_at(req.type, best_h);
            if (tracker_.uses(v) == 0) {
                pending[best_h] -= p_.instance(v).cost;
                --d.idle_open[req.type];
            }
            --d.remaining[req.type];
            tracker_.assign(r, best_h);
        }
        CostRatio cost = CostRatio::infinite();
        if (tracker_.meets_min_lifetimes()) {
            cost = tracker_.system_cost();
            inc_.offer(cost, tracker_.active_count(), tracker_.hosts());
        }
        for (RequestIndex k = p_.num_requests(); k-- > 0;) tracker_.unassign(k);
        return cost;
    }

    void expand(BBNode node) {
        if (!propagate(node)) {
            ++stats_.pruned;
            return;
        }
        ++stats_.nodes_expanded;

        std::vector<std::vector<DeviceIndex>> adm(p_.num_requests());
        node.fixed.assign(p_.num_requests(), npos);
        for (RequestIndex r = 0; r < p_.num_requests(); ++r) {
            adm[r] = admissible(node, r);
            if (adm[r].size() == 1) node.fixed[r] = adm[r].front();
        }
        const std::vector<Energy> lb_loads = lower_loads(node, adm);
        node.lower_bound = CostRatio::zero();
        bool lb_feasible = true;
        for (DeviceIndex i = 0; i < p_.num_devices(); ++i) {
            if (!meets_min_lifetime(p_.device(i), lb_loads[i])) lb_feasible = false;
            if (p_.device(i).tier != Tier::Tier1) continue;
            const CostRatio r(lb_loads[i], p_.device(i).energy);
            if (r > node.lower_bound) node.lower_bound = r;
        }
        if (!lb_feasible) node.lower_bound = CostRatio::infinite();
        node.upper_bound = lb_feasible ? upper_bound(node) : CostRatio::infinite();
        if (opt_.on_node) opt_.on_node(node);

        if (!lb_feasible || inc_.dominates(node.lower_bound)) {
            ++stats_.pruned;
            return;
        }

        const InstanceIndex v = branching_instance(node, adm);
        if (v == npos) {
            enumerate_leaf(node);
            return;
        }
        BBNode open = node;
        open.status[v] = InstanceStatus::Open;
        open.depth = node.depth + 1;
        BBNode closed = node;
        closed.status[v] = InstanceStatus::Closed;
        closed.depth = open.depth;
        // Splitting only pays when both sides still hold a choice; this also
        // keeps the tree smaller than the number of assignments it covers.
        if (completions(open) < 2.0 || completions(closed) < 2.0) {
            enumerate_leaf(node);
            return;
        }
        expand(std::move(open));
        expand(std::move(closed));
    }

    /// Number of assignments compatible with the statuses, counted per type
    /// by inclusion-exclusion over the open instances that must be used.
    double completions(BBNode node) const {
        if (!propagate(node)) return 0.0;
        double total = 1.0;
        for (TypeIndex t = 0; t < p_.num_types(); ++t) {
            if (p_.requests_of(t).empty()) continue;
            int allowed = 0, must = 0;
            for (DeviceIndex h : p_.hosts_of(t)) {
                const auto st = node.status[p_.instance_at(t, h)];
                if (st != InstanceStatus::Closed) ++allowed;
                if (st == InstanceStatus::Open && !is_pinned_host(t, h)) ++must;
            }
            const int u = static_cast<int>(unpinned_[t]);
            double onto = 0.0, binom = 1.0;
            for (int k = 0; k <= must; ++k) {
                onto += (k % 2 ? -1.0 : 1.0) * binom * std::pow(static_cast<double>(allowed - k), u);
                binom = binom * (must - k) / (k + 1);
            }
            total *= std::max(0.0, std::round(onto));
        }
        return total;
    }

    /// Enumerates request mappings onto the instances that are not closed,
    /// using every open one, and prunes partial mappings whose loads
    /// already lose.
    void enumerate_leaf(const BBNode& node) {
        Demand d = demand(node);
        std::vector<Energy> pending = pending_open(node);
        const std::size_t nreq = p_.num_requests();

        std::function<void(RequestIndex)> dfs = [&](RequestIndex r) {
            if (r == nreq) {
                ++stats_.assignments_evaluated;
                if (tracker_.meets_min_lifetimes()) {
                    inc_.offer(tracker_.system_cost(), tracker_.active_count(), tracker_.hosts());
                }
                return;
            }
            const auto& req = p_.request(r);
            for (DeviceIndex h : p_.hosts_of(req.type)) {
                const InstanceIndex v = p_.instance_at(req.type, h);
                if (node.status[v] == InstanceStatus::Closed) continue;
                if (req.pinned != npos && h != req.pinned) continue;
                const bool fresh = node.status[v] == InstanceStatus::Open && tracker_.uses(v) == 0;
                if (!fresh && d.remaining[req.type] == d.idle_open[req.type]) continue;
                tracker_.assign(r, h);
                if (fresh) {
                    pending[h] -= p_.instance(v).cost;
                    --d.idle_open[req.type];
                }
                --d.remaining[req.type];
                if (meets_with(pending) && !inc_.dominates(cost_with(pending))) {
                    dfs(r + 1);
                } else {
                    ++stats_.pruned;
                }
                ++d.remaining[req.type];
                if (fresh) {
                    pending[h] += p_.instance(v).cost;
                    ++d.idle_open[req.type];
                }
                tracker_.unassign(r);
            }
        };
        dfs(0);
    }

    const Problem& p_;
    const ExactOptions& opt_;
    LoadTracker tracker_;
    Incumbent inc_;
    SearchStats stats_;
    std::vector<std::vector<DeviceIndex>> pinned_hosts_;
    std::vector<std::size_t> unpinned_;
};

}  // namespace detail

/// Branch and bound over instance statuses (open / closed / unknown).
///
/// The first level fixes, for every requested type, the lowest-indexed
/// active host. Deeper levels open or close the unknown instance most often
/// preferred by the requests, and a node is pruned when its lower bound is
/// strictly worse than the incumbent. Leaves enumerate mappings onto the
/// open instances. The result is the same assignment brute_force_solve
/// returns.
inline ExactResult branch_and_bound_solve(const Problem& p, const ExactOptions& opt = {}) {
    detail::check_cap(p, opt.cap);
    detail::BranchAndBound bb(p, opt);
    return bb.run();
}

inline ExactResult branch_and_bound_solve(const Scenario& s, const ExactOptions& opt = {}) {
    return branch_and_bound_solve(Problem(s), opt);
}

}  // namespace chainalloc
