#pragma once

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include <json.hpp>

#include "errors.hpp"
#include "model.hpp"

namespace chainalloc {

namespace detail {

using nlohmann::json;

inline void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                                const std::string& where) {
    if (!obj.is_object()) throw ParseError(where + ": expected an object");
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ValidationError(where + ": unknown key '" + key + "'");
    }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
    auto it = obj.find(key);
    return it == obj.end() ? fallback : it->get<T>();
}

inline Tier parse_tier(const std::string& s) {
    if (s == "Tier1") return Tier::Tier1;
    if (s == "Tier2") return Tier::Tier2;
    if (s == "Extended") return Tier::Extended;
    throw ValidationError("unknown tier '" + s + "'");
}

inline Scenario scenario_from_json(const json& j) {
    reject_unknown_keys(j, {"interval_s", "rng_seed", "devices", "functions", "comm", "chains"}, "scenario");
    Scenario s;
    s.interval_s = get_or(j, "interval_s", 60.0);
    s.rng_seed = get_or<std::uint64_t>(j, "rng_seed", 0);

    for (const auto& d : j.at("devices")) {
        reject_unknown_keys(d,
                            {"id", "tier", "capacity_mah", "voltage", "charge", "baseline_drain_mj", "idle_mj",
                             "min_lifetime", "availability"},
                            "device");
        DeviceSpec spec;
        spec.id = d.at("id").get<std::string>();
        spec.tier = parse_tier(get_or<std::string>(d, "tier", "Tier1"));
        spec.capacity_mah = d.at("capacity_mah").get<double>();
        spec.voltage = get_or(d, "voltage", 3.8);
        spec.initial_charge = get_or(d, "charge", 1.0);
        spec.baseline_drain_mj = get_or(d, "baseline_drain_mj", 0.0);
        spec.idle_mj = get_or(d, "idle_mj", 0.0);
        spec.min_lifetime = get_or<std::uint64_t>(d, "min_lifetime", 0);
        if (auto it = d.find("availability"); it != d.end() && !it->is_null()) {
            if (!it->is_array() || it->size() != 2) throw ParseError("device '" + spec.id + "': availability must be [start,end]");
            spec.availability = Availability{(*it)[0].get<std::int64_t>(), (*it)[1].get<std::int64_t>()};
        }
        s.devices.push_back(std::move(spec));
    }

    if (auto it = j.find("functions"); it != j.end()) {
        for (const auto& f : *it) {
            reject_unknown_keys(f, {"host", "type", "cost_mj"}, "function");
            s.functions.push_back({f.at("host").get<std::string>(), f.at("type").get<std::string>(),
                                   f.at("cost_mj").get<double>()});
        }
    }

    if (auto it = j.find("comm"); it != j.end()) {
        const json& c = *it;
        reject_unknown_keys(c, {"pairs", "radio", "bytes_per_interval"}, "comm");
        if (c.contains("pairs") && c.contains("radio")) throw ValidationError("comm: give either 'pairs' or 'radio'");
        if (c.contains("radio")) {
            s.comm.mode = CommCostModel::Mode::Radio;
            for (const auto& [dev, r] : c.at("radio").items()) {
                reject_unknown_keys(r, {"tx_mw", "rx_mw", "idle_mj", "throughput_bps"}, "radio profile");
                RadioProfile prof;
                prof.tx_mw = r.at("tx_mw").get<double>();
                prof.rx_mw = r.at("rx_mw").get<double>();
                if (r.contains("idle_mj")) prof.idle_mj = r.at("idle_mj").get<double>();
                prof.throughput_bps = r.at("throughput_bps").get<double>();
                s.comm.radio.emplace(dev, prof);
            }
            if (c.contains("bytes_per_interval")) {
                for (const auto& [type, bytes] : c.at("bytes_per_interval").items()) {
                    s.comm.bytes_per_interval.emplace(type, bytes.get<double>());
                }
            }
        } else {
            if (c.contains("bytes_per_interval")) throw ValidationError("comm: 'bytes_per_interval' requires 'radio'");
            for (const auto& p : c.value("pairs", json::array())) {
                reject_unknown_keys(p, {"from", "to", "request_mj", "serve_mj"}, "comm pair");
                s.comm.pairs.push_back({p.at("from").get<std::string>(), p.at("to").get<std::string>(),
                                        p.at("request_mj").get<double>(), p.at("serve_mj").get<double>()});
            }
        }
    }

    if (auto it = j.find("chains"); it != j.end()) {
        for (const auto& c : *it) {
            reject_unknown_keys(c, {"device", "app", "steps", "pinned"}, "chain");
            ChainSpec chain;
            chain.device = c.at("device").get<std::string>();
            chain.app = c.at("app").get<std::string>();
            chain.steps = c.at("steps").get<std::vector<std::string>>();
            if (auto pit = c.find("pinned"); pit != c.end()) {
                for (const auto& [seq, host] : pit->items()) {
                    int n = 0;
                    try {
                        std::size_t used = 0;
                        n = std::stoi(seq, &used);
                        if (used != seq.size()) throw std::invalid_argument(seq);
                    } catch (const std::exception&) {
                        throw ParseError("chain '" + chain.device + "/" + chain.app + "': bad pinned key '" + seq + "'");
                    }
                    chain.pinned.emplace(n, host.get<std::string>());
                }
            }
            s.chains.push_back(std::move(chain));
        }
    }
    return s;
}

}  // namespace detail

inline nlohmann::json to_json(const Scenario& s) {
    using nlohmann::json;
    json j;
    j["interval_s"] = s.interval_s;
    j["rng_seed"] = s.rng_seed;
    j["devices"] = json::array();
    for (const auto& d : s.devices) {
        json o = {{"id", d.id},
                  {"tier", to_string(d.tier)},
                  {"capacity_mah", d.capacity_mah},
                  {"voltage", d.voltage},
                  {"charge", d.initial_charge},
                  {"baseline_drain_mj", d.baseline_drain_mj},
                  {"idle_mj", d.idle_mj},
                  {"min_lifetime", d.min_lifetime}};
        if (d.availability) o["availability"] = {d.availability->start, d.availability->end};
        j["devices"].push_back(o);
    }
    j["functions"] = json::array();
    for (const auto& f : s.functions) j["functions"].push_back({{"host", f.host}, {"type", f.ftype}, {"cost_mj", f.cost_mj}});
    json comm = json::object();
    if (s.comm.mode == CommCostModel::Mode::Pairs) {
        comm["pairs"] = json::array();
        for (const auto& p : s.comm.pairs) {
            comm["pairs"].push_back(
                {{"from", p.from}, {"to", p.to}, {"request_mj", p.request_mj}, {"serve_mj", p.serve_mj}});
        }
    } else {
        comm["radio"] = json::object();
        for (const auto& [dev, r] : s.comm.radio) {
            json o = {{"tx_mw", r.tx_mw}, {"rx_mw", r.rx_mw}, {"throughput_bps", r.throughput_bps}};
            if (r.idle_mj) o["idle_mj"] = *r.idle_mj;
            comm["radio"][dev] = o;
        }
        comm["bytes_per_interval"] = json::object();
        for (const auto& [type, bytes] : s.comm.bytes_per_interval) comm["bytes_per_interval"][type] = bytes;
    }
    j["comm"] = comm;
    j["chains"] = json::array();
    for (const auto& c : s.chains) {
        json o = {{"device", c.device}, {"app", c.app}, {"steps", c.steps}};
        if (!c.pinned.empty()) {
            json pins = json::object();
            for (const auto& [seq, host] : c.pinned) pins[std::to_string(seq)] = host;
            o["pinned"] = pins;
        }
        j["chains"].push_back(o);
    }
    return j;
}

inline std::string serialize(const Scenario& s) { return to_json(s).dump(2) + "\n"; }

/// Parses and validates scenario text.
inline Scenario parse_scenario(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed scenario: ") + e.what());
    }
    Scenario s;
    try {
        s = detail::scenario_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed scenario: ") + e.what());
    }
    validate(s);
    return s;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open scenario file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

}  // namespace chainalloc
