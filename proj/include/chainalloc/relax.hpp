#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"
#include "model.hpp"
#include "objective.hpp"
#include "simplex.hpp"

namespace chainalloc {

/// Linear relaxation of the allocation MILP, min-max objective linearised
/// with an auxiliary t: (C_i + A_i) / E_i <= t for every Tier-1 device.
///
/// Communication terms need the requester of a request. It is known for
/// first chain steps (the origin) and for steps after a pinned step; for
/// other steps the requester depends on the previous placement, so their
/// transfer and idle terms are left out. That keeps the LP a lower bound of
/// the chain-aware integer problem.
struct LPModel {
    Problem problem;
    LinearProgram lp;
    std::vector<std::size_t> w;               // [instance]
    std::vector<std::vector<std::size_t>> x;  // [request][device]
    std::vector<std::vector<std::size_t>> y;  // [instance][requesting device]
    std::vector<std::size_t> z;               // [device]
    std::size_t t = 0;
    double scale = 1.0;  // t = variable value / scale

    struct RowCounts {
        std::size_t cover = 0, activation = 0, pairing = 0, idle = 0, lifetime = 0, budget = 0;
    } rows;

    std::size_t variable_count() const { return lp.num_vars; }
};

/// Σ|V_i| + Σ|R_i|·|D| + Σ|V_i|·|D| + |D| + 1.
inline std::size_t lp_variable_count(const Problem& p) {
    const std::size_t n = p.num_devices();
    return p.num_instances() + p.num_requests() * n + p.num_instances() * n + n + 1;
}

/// Requester of `r` when it does not depend on other placements, else npos.
inline DeviceIndex known_requester(const Problem& p, RequestIndex r) {
    const auto& req = p.request(r);
    if (req.prev == npos) return req.origin;
    return p.request(req.prev).pinned;
}

namespace detail {

inline std::vector<DeviceIndex> allowed_hosts(const Problem& p, RequestIndex r) {
    const auto& req = p.request(r);
    if (req.pinned != npos) return {req.pinned};
    return p.hosts_of(req.type);
}

/// Per-device load expression (mJ) without C_i.
inline std::vector<std::vector<std::pair<std::size_t, double>>> load_terms(const LPModel& m) {
    const Problem& p = m.problem;
    std::vector<std::vector<std::pair<std::size_t, double>>> terms(p.num_devices());
    for (InstanceIndex v = 0; v < p.num_instances(); ++v) {
        terms[p.instance(v).device].emplace_back(m.w[v], p.instance(v).cost.mj());
    }
    for (RequestIndex r = 0; r < p.num_requests(); ++r) {
        const DeviceIndex q = known_requester(p, r);
        if (q == npos) continue;
        const TypeIndex t = p.request(r).type;
        for (DeviceIndex j : allowed_hosts(p, r)) {
            if (j == q) continue;
            const auto& c = p.comm(t, q, j);
            if (c.request_side.uj() != 0) terms[q].emplace_back(m.x[r][j], c.request_side.mj());
            if (c.serve_side.uj() != 0) terms[j].emplace_back(m.x[r][j], c.serve_side.mj());
        }
    }
    for (DeviceIndex i = 0; i < p.num_devices(); ++i) {
        if (p.device(i).idle.uj() != 0) terms[i].emplace_back(m.z[i], p.device(i).idle.mj());
    }
    return terms;
}

}  // namespace detail

inline LPModel build_lp(const Problem& p) {
    using Sense = LinearProgram::Sense;
    LPModel m;
    m.problem = p;
    const std::size_t n = p.num_devices();
    auto& lp = m.lp;

    for (InstanceIndex v = 0; v < p.num_instances(); ++v) m.w.push_back(lp.add_var());
    m.x.assign(p.num_requests(), std::vector<std::size_t>(n));
    for (RequestIndex r = 0; r < p.num_requests(); ++r) {
        for (DeviceIndex j = 0; j < n; ++j) m.x[r][j] = lp.add_var();
    }
    m.y.assign(p.num_instances(), std::vector<std::size_t>(n));
    for (InstanceIndex v = 0; v < p.num_instances(); ++v) {
        for (DeviceIndex j = 0; j < n; ++j) m.y[v][j] = lp.add_var();
    }
    for (DeviceIndex i = 0; i < n; ++i) m.z.push_back(lp.add_var());
    m.t = lp.add_var(1.0);

    double emax = 0.0;
    for (const auto& d : p.devices()) emax = std::max(emax, d.energy.mj());
    m.scale = emax > 0.0 ? emax / 1000.0 : 1.0;

    for (RequestIndex r = 0; r < p.num_requests(); ++r) {
        const auto hosts = detail::allowed_hosts(p, r);
        std::vector<std::pair<std::size_t, double>> cover;
        for (DeviceIndex j : hosts) cover.emplace_back(m.x[r][j], 1.0);
        lp.add_row(cover, Sense::GreaterEqual, 1.0);
        ++m.rows.cover;

        const TypeIndex t = p.request(r).type;
        const DeviceIndex q = known_requester(p, r);
        for (DeviceIndex j : hosts) {
            const InstanceIndex v = p.instance_at(t, j);
            lp.add_row({{m.w[v], 1.0}, {m.x[r][j], -1.0}}, Sense::GreaterEqual, 0.0);
            ++m.rows.activation;
            if (q == npos || q == j) continue;
            lp.add_row({{m.y[v][q], 1.0}, {m.x[r][j], -1.0}}, Sense::GreaterEqual, 0.0);
            ++m.rows.pairing;
            lp.add_row({{m.z[q], 1.0}, {m.x[r][j], -1.0}}, Sense::GreaterEqual, 0.0);
            ++m.rows.idle;
        }
    }
    for (InstanceIndex v = 0; v < p.num_instances(); ++v) {
        const DeviceIndex i = p.instance(v).device;
        for (DeviceIndex j = 0; j < n; ++j) {
            if (j == i) continue;
            lp.add_row({{m.w[v], 1.0}, {m.y[v][j], -1.0}}, Sense::GreaterEqual, 0.0);
            ++m.rows.activation;
            lp.add_row({{m.z[i], 1.0}, {m.y[v][j], -1.0}}, Sense::GreaterEqual, 0.0);
            ++m.rows.idle;
        }
    }

    const auto terms = detail::load_terms(m);
    for (DeviceIndex i = 0; i < n; ++i) {
        const auto& d = p.device(i);
        if (d.tier == Tier::Tier1) {
            auto row = terms[i];
            row.emplace_back(m.t, -d.energy.mj() / m.scale);
            lp.add_row(row, Sense::LessEqual, -d.baseline.mj());
            ++m.rows.lifetime;
        }
        if (d.min_lifetime > 0) {
            lp.add_row(terms[i], Sense::LessEqual,
                       d.energy.mj() / static_cast<double>(d.min_lifetime) - d.baseline.mj());
            ++m.rows.budget;
        }
    }
    return m;
}

inline LPModel build_lp(const Scenario& s) { return build_lp(Problem(s)); }

/// Fractional optimum of the relaxation, indexed like the model.
struct FractionalSolution {
    std::vector<double> w;
    std::vector<std::vector<double>> x;
    std::vector<std::vector<double>> y;
    std::vector<double> z;
    std::vector<double> loads;  // C_i + relaxed A_i, mJ
    double opt_lp = 0.0;        // t*, cost per interval
    DeviceIndex bottleneck = npos;
    std::size_t pivots = 0;
};

/// Tier-1 device with the largest relaxed ratio; near-ties go to the
/// smallest id.
inline DeviceIndex lp_bottleneck(const Problem& p, const std::vector<double>& loads) {
    DeviceIndex arg = npos;
    double best = -1.0;
    for (DeviceIndex i = 0; i < p.num_devices(); ++i) {
        if (p.device(i).tier != Tier::Tier1) continue;
        const double e = p.device(i).energy.mj();
        const double r = e > 0 ? loads[i] / e : std::numeric_limits<double>::infinity();
        const double tol = 1e-9 * std::max(1.0, std::abs(best));
        if (arg == npos || r > best + tol || (std::abs(r - best) <= tol && p.device(i).id < p.device(arg).id)) {
            if (arg == npos || r > best + tol) best = r;
            arg = i;
        }
    }
    return arg;
}

inline FractionalSolution solve_lp(const LPModel& m) {
    const LPResult res = solve_simplex(m.lp);
    if (res.status == LPResult::Status::Infeasible) {
        throw LPInfeasible("LP relaxation infeasible: minimum-lifetime budgets cannot be met");
    }
    if (res.status == LPResult::Status::Unbounded) {
        throw std::logic_error("LP relaxation unbounded; the model is malformed");
    }
    const Problem& p = m.problem;
    FractionalSolution f;
    f.pivots = res.pivots;
    for (auto v : m.w) f.w.push_back(res.x[v]);
    for (const auto& row : m.x) {
        f.x.emplace_back();
        for (auto v : row) f.x.back().push_back(res.x[v]);
    }
    for (const auto& row : m.y) {
        f.y.emplace_back();
        for (auto v : row) f.y.back().push_back(res.x[v]);
    }
    for (auto v : m.z) f.z.push_back(res.x[v]);
    f.opt_lp = res.x[m.t] / m.scale;

    const auto terms = detail::load_terms(m);
    f.loads.assign(p.num_devices(), 0.0);
    for (DeviceIndex i = 0; i < p.num_devices(); ++i) {
        f.loads[i] = p.device(i).baseline.mj();
        for (const auto& [var, coeff] : terms[i]) f.loads[i] += coeff * res.x[var];
    }
    f.bottleneck = lp_bottleneck(p, f.loads);
    return f;
}

/// Rounds a fractional solution to an integral assignment.
///
/// On the bottleneck device d: a request from d that is not wholly served
/// elsewhere stays on d, and any request with a fractional inbound share on
/// d moves to d. Every other request goes to its largest fraction, ties to
/// the device that issues it, then to the lowest index.
inline Assignment round_to_integral(const Problem& p, const FractionalSolution& f, double eps = 1e-9) {
    std::vector<DeviceIndex> host(p.num_requests(), npos);
    for (RequestIndex r = 0; r < p.num_requests(); ++r) {
        if (p.request(r).pinned != npos) host[r] = p.request(r).pinned;
    }
    const DeviceIndex d = f.bottleneck;
    if (d != npos) {
        for (RequestIndex r = 0; r < p.num_requests(); ++r) {
            const auto& req = p.request(r);
            if (host[r] != npos || req.origin != d) continue;
            if (p.instance_at(req.type, d) != npos && f.x[r][d] > eps) host[r] = d;
        }
        for (RequestIndex r = 0; r < p.num_requests(); ++r) {
            if (host[r] != npos) continue;
            const TypeIndex t = p.request(r).type;
            const InstanceIndex v = p.instance_at(t, d);
            const DeviceIndex q = known_requester(p, r);
            if (v == npos || q == npos || q == d) continue;
            if (f.y[v][q] > eps && f.x[r][d] > eps) host[r] = d;
        }
    }
    for (RequestIndex r = 0; r < p.num_requests(); ++r) {
        if (host[r] != npos) continue;
        const DeviceIndex q = requester_of(p, host, r);
        DeviceIndex best = npos;
        for (DeviceIndex j : p.hosts_of(p.request(r).type)) {
            if (best == npos || f.x[r][j] > f.x[r][best] + eps) {
                best = j;
            } else if (std::abs(f.x[r][j] - f.x[r][best]) <= eps && j == q) {
                best = j;
            }
        }
        host[r] = best;
    }
    Assignment a = make_assignment(p, host);
    const auto added = added_costs_unchecked(p, a);
    for (DeviceIndex i = 0; i < p.num_devices(); ++i) {
        if (!meets_min_lifetime(p.device(i), p.device(i).baseline + added[i])) {
            throw RoundingInfeasible("rounded assignment leaves '" + p.device(i).id + "' below its minimum lifetime");
        }
    }
    return a;
}

struct RelaxReport {
    double opt_lp = 0.0;
    Assignment integral;
    double integral_cost = 0.0;
    double int_worst = 0.0;
    double int_best = 0.0;
    double af = 1.0;
    bool loose = false;
    DeviceIndex bottleneck = npos;
    DeviceIndex worst_device = npos;

    std::string csv_header() const { return "opt_lp,integral_cost,int_worst,int_best,af"; }
    std::string csv_row() const {
        std::ostringstream out;
        out << std::scientific << std::setprecision(9) << opt_lp << "," << integral_cost << "," << int_worst << ","
            << int_best << "," << std::fixed << std::setprecision(6) << af;
        return out.str();
    }
};

namespace detail {

inline bool runs_remote(const Problem& p, RequestIndex r, DeviceIndex i) {
    const auto& req = p.request(r);
    return p.instance_at(req.type, i) == npos || (req.pinned != npos && req.pinned != i);
}

/// Load of device i when it runs every request it can locally, pays the
/// dearest transfer for the ones it cannot, serves every inbound request
/// whose requester would rather remote than run it, and idles.
inline double worst_load(const Problem& p, DeviceIndex i) {
    const auto& dev = p.device(i);
    double load = dev.baseline.mj() + dev.idle.mj();
    for (InstanceIndex v = 0; v < p.num_instances(); ++v) {
        if (p.instance(v).device == i && !p.requests_of(p.instance(v).type).empty()) load += p.instance(v).cost.mj();
    }
    for (RequestIndex r = 0; r < p.num_requests(); ++r) {
        const auto& req = p.request(r);
        const DeviceIndex known = known_requester(p, r);

        if ((known == npos || known == i) && runs_remote(p, r, i)) {
            double m = 0.0;
            for (DeviceIndex j : allowed_hosts(p, r)) {
                if (j != i) m = std::max(m, p.comm(req.type, i, j).request_side.mj());
            }
            load += m;
        }

        if (p.instance_at(req.type, i) == npos || (req.pinned != npos && req.pinned != i)) continue;
        auto inbound = [&](DeviceIndex q) -> double {
            if (q == i) return 0.0;
            const auto& c = p.comm(req.type, q, i);
            const InstanceIndex own = p.instance_at(req.type, q);
            const bool remote_cheaper =
                own == npos || p.instance(own).cost.mj() > c.request_side.mj() + c.serve_side.mj();
            return remote_cheaper || req.pinned == i ? c.serve_side.mj() : 0.0;
        };
        if (known != npos) {
            load += inbound(known);
        } else {
            double m = 0.0;
            for (DeviceIndex q = 0; q < p.num_devices(); ++q) m = std::max(m, inbound(q));
            load += m;
        }
    }
    return load;
}

/// Load of device d when its own requests are placed as cheaply as
/// possible and it serves nobody.
inline double best_load(const Problem& p, DeviceIndex d) {
    const auto& dev = p.device(d);
    double load = dev.baseline.mj();
    bool linked = false;
    std::vector<char> opened(p.num_instances(), 0);
    for (RequestIndex r = 0; r < p.num_requests(); ++r) {
        if (known_requester(p, r) != d) continue;
        const auto& req = p.request(r);
        const InstanceIndex own = p.instance_at(req.type, d);
        double remote = std::numeric_limits<double>::infinity();
        for (DeviceIndex j : allowed_hosts(p, r)) {
            if (j != d) remote = std::min(remote, p.comm(req.type, d, j).request_side.mj());
        }
        const bool may_local = own != npos && (req.pinned == npos || req.pinned == d);
        const double local = may_local ? (opened[own] ? 0.0 : p.instance(own).cost.mj())
                                       : std::numeric_limits<double>::infinity();
        if (local <= remote) {
            load += local;
            if (may_local) opened[own] = 1;
        } else {
            load += remote;
            linked = true;
        }
    }
    if (linked) load += dev.idle.mj();
    return load;
}

}  // namespace detail

/// Worst- and best-case integral costs and the approximation factor.
///
/// The worst case is evaluated on every Tier-1 device and the largest is
/// kept; on the LP bottleneck alone it can fall below the integer optimum.
/// The best case is taken on the LP bottleneck.
inline RelaxReport bounds_and_af(const Problem& p, const FractionalSolution& f, const Assignment& integral,
                                 double loose_threshold = 3.0) {
    RelaxReport rep;
    rep.opt_lp = f.opt_lp;
    rep.integral = integral;
    rep.integral_cost = system_lifetime(p, integral).system_cost.value();
    rep.bottleneck = f.bottleneck;
    if (f.bottleneck == npos) {
        rep.int_worst = rep.int_best = rep.integral_cost;
        rep.af = 1.0;
        return rep;
    }
    for (DeviceIndex i = 0; i < p.num_devices(); ++i) {
        if (p.device(i).tier != Tier::Tier1) continue;
        const double w = detail::worst_load(p, i) / p.device(i).energy.mj();
        if (rep.worst_device == npos || w > rep.int_worst) {
            rep.int_worst = w;
            rep.worst_device = i;
        }
    }
    rep.int_best = detail::best_load(p, f.bottleneck) / p.device(f.bottleneck).energy.mj();

    if (rep.opt_lp > 0.0) {
        rep.af = rep.int_worst / rep.opt_lp;
        // Tight LP: the ratio is 1 up to simplex round-off.
        if (rep.af < 1.0 && rep.af > 1.0 - 1e-9) rep.af = 1.0;
    } else {
        rep.af = rep.int_worst > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    }
    rep.loose = rep.af > loose_threshold;
    return rep;
}

/// Build, solve, round and bound in one call.
inline RelaxReport relax_solve(const Problem& p, double loose_threshold = 3.0) {
    const LPModel m = build_lp(p);
    const FractionalSolution f = solve_lp(m);
    const Assignment a = round_to_integral(p, f);
    return bounds_and_af(p, f, a, loose_threshold);
}

}  // namespace chainalloc
