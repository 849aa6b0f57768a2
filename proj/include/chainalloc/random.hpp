#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "model.hpp"

namespace chainalloc {

/// Independent generator for a named purpose derived from one master seed,
/// so adding draws to one stream never shifts another.
inline std::mt19937_64 rng_stream(std::uint64_t seed, std::string_view name) {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (unsigned char c : name) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
    return std::mt19937_64(seq);
}

inline std::mt19937_64 rng_stream(std::uint64_t seed, std::string_view name, std::uint64_t index) {
    return rng_stream(seed, std::string(name) + "#" + std::to_string(index));
}

/// Shape of a small random instance for oracle and property tests.
struct RandomInstanceSpec {
    int min_devices = 2;
    int max_devices = 3;
    int min_types = 1;
    int max_types = 4;
    int min_requests_per_type = 1;
    int max_requests_per_type = 2;
    double pin_probability = 0.1;
    double min_lifetime_probability = 0.0;
    bool include_non_tier1 = true;
};

inline Scenario random_instance(std::mt19937_64& rng, const RandomInstanceSpec& spec = {}) {
    auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    auto real = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    auto coin = [&](double p) { return std::bernoulli_distribution(p)(rng); };

    Scenario s;
    s.interval_s = 60;
    const int n = uni(spec.min_devices, spec.max_devices);
    for (int i = 0; i < n; ++i) {
        DeviceSpec d;
        d.id = "d" + std::to_string(i);
        d.tier = Tier::Tier1;
        if (spec.include_non_tier1 && i > 0 && coin(0.15)) d.tier = coin(0.5) ? Tier::Tier2 : Tier::Extended;
        d.capacity_mah = uni(200, 3000);
        d.initial_charge = uni(10, 100) / 100.0;
        d.baseline_drain_mj = uni(0, 300);
        d.idle_mj = coin(0.5) ? uni(0, 200) : 0;
        s.devices.push_back(d);
    }

    const int nt = uni(spec.min_types, spec.max_types);
    std::vector<std::vector<std::string>> wanted(n);
    for (int t = 0; t < nt; ++t) {
        const std::string type = "f" + std::to_string(t);
        std::vector<int> hosts;
        for (int i = 0; i < n; ++i) {
            if (coin(0.6)) hosts.push_back(i);
        }
        if (hosts.empty()) hosts.push_back(uni(0, n - 1));
        for (int h : hosts) s.functions.push_back({s.devices[h].id, type, static_cast<double>(uni(50, 1000))});
        const int r = uni(spec.min_requests_per_type, spec.max_requests_per_type);
        for (int k = 0; k < r; ++k) wanted[uni(0, n - 1)].push_back(type);
    }

    s.comm.mode = CommCostModel::Mode::Pairs;
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            if (a == b) continue;
            s.comm.pairs.push_back({s.devices[a].id, s.devices[b].id, static_cast<double>(uni(5, 250)),
                                    static_cast<double>(uni(5, 250))});
        }
    }

    // Each device's requested types become one or two chains.
    for (int i = 0; i < n; ++i) {
        auto& types = wanted[i];
        if (types.empty()) continue;
        std::shuffle(types.begin(), types.end(), rng);
        const std::size_t cut = types.size() > 1 && coin(0.5) ? 1 + static_cast<std::size_t>(uni(0, static_cast<int>(types.size()) - 2)) : types.size();
        std::vector<std::vector<std::string>> parts{{types.begin(), types.begin() + static_cast<std::ptrdiff_t>(cut)}};
        if (cut < types.size()) parts.emplace_back(types.begin() + static_cast<std::ptrdiff_t>(cut), types.end());
        for (std::size_t c = 0; c < parts.size(); ++c) {
            ChainSpec chain;
            chain.device = s.devices[i].id;
            chain.app = "app" + std::to_string(c);
            chain.steps = parts[c];
            for (std::size_t k = 0; k < chain.steps.size(); ++k) {
                if (!coin(spec.pin_probability)) continue;
                std::vector<std::string> owners;
                for (const auto& f : s.functions) {
                    if (f.ftype == chain.steps[k]) owners.push_back(f.host);
                }
                chain.pinned[static_cast<int>(k) + 1] = owners[static_cast<std::size_t>(uni(0, static_cast<int>(owners.size()) - 1))];
            }
            s.chains.push_back(std::move(chain));
        }
    }

    if (spec.min_lifetime_probability > 0.0) {
        for (auto& d : s.devices) {
            if (coin(spec.min_lifetime_probability)) {
                const double e = energy_budget(d);
                const double drain = d.baseline_drain_mj + real(200, 2000);
                d.min_lifetime = static_cast<std::uint64_t>(e / drain);
            }
        }
    }
    return s;
}

}  // namespace chainalloc
