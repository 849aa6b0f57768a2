#include <gtest/gtest.h>

#include <chainalloc/exact.hpp>
#include <chainalloc/faa.hpp>
#include <chainalloc/random.hpp>
#include <chainalloc/scenario_io.hpp>

using namespace chainalloc;

namespace {

DeviceSpec dev(const std::string& id, double mah = 100, double idle = 0) {
    return {id, Tier::Tier1, mah, 3.8, 1.0, 0, idle, 0, {}};
}

void link_all(Scenario& s, double req, double serve) {
    for (const auto& a : s.devices)
        for (const auto& b : s.devices)
            if (a.id != b.id) s.comm.pairs.push_back({a.id, b.id, req, serve});
}

}  // namespace

TEST(Faa, SingleDeviceAllLocal) {
    Scenario s;
    s.devices.push_back(dev("a"));
    s.functions.push_back({"a", "x", 5});
    s.functions.push_back({"a", "y", 7});
    s.chains.push_back({"a", "one", {"x", "y"}, {}});
    s.chains.push_back({"a", "two", {"y"}, {}});
    const Problem p(s);
    const auto res = faa_allocate(p);
    for (auto h : res.assignment.host) EXPECT_EQ(h, 0u);
    for (const auto& e : res.log) EXPECT_EQ(e.performer, "a");
    EXPECT_DOUBLE_EQ(res.report.system_lifetime, p.device(0).energy.mj() / 12.0);
}

TEST(Faa, TwoSensorReturnsOptimum) {
    const Problem p(load_scenario(CHAINALLOC_SCENARIO_DIR "/two_sensor.json"));
    const auto faa = faa_allocate(p);
    const auto bf = brute_force_solve(p);
    EXPECT_EQ(faa.assignment, bf.assignment);
}

TEST(Faa, LaterStepUsesPreviousPerformerAsRequester) {
    Scenario s;
    s.devices = {dev("phone", 3000), dev("watch", 3000), dev("glasses", 3000)};
    s.functions.push_back({"watch", "sense", 1});
    s.functions.push_back({"phone", "encode", 50});
    s.functions.push_back({"glasses", "encode", 50});
    // From watch, glasses is cheap; from phone (the origin) it would be dear.
    s.comm.pairs = {{"phone", "watch", 1, 1},  {"watch", "glasses", 1, 1}, {"watch", "phone", 40, 40},
                    {"phone", "glasses", 90, 90}, {"glasses", "phone", 1, 1}, {"glasses", "watch", 1, 1}};
    s.chains.push_back({"phone", "app", {"sense", "encode"}, {}});
    const Problem p(s);
    const auto res = faa_allocate(p);
    ASSERT_EQ(res.log.size(), 2u);
    EXPECT_EQ(res.log[1].requester, "watch");
    EXPECT_EQ(res.log[1].performer, "glasses");
}

TEST(SelectCandidate, ForcedChoice) {
    Scenario s;
    s.devices.push_back(dev("a"));
    s.functions.push_back({"a", "x", 5});
    s.chains.push_back({"a", "app", {"x"}, {}});
    const Problem p(s);
    LoadTracker st(p);
    const auto c = select_candidate(p, st, 0, {0}, std::numeric_limits<double>::infinity());
    EXPECT_EQ(c.instance, 0u);
    EXPECT_EQ(c.requests, std::vector<RequestIndex>{0});
}

TEST(SelectCandidate, PrefersNonBottleneckHost) {
    Scenario s;
    s.devices = {dev("a"), dev("b"), dev("c")};
    s.devices[0].baseline_drain_mj = 100;  // a is the bottleneck
    s.functions.push_back({"a", "x", 20});
    s.functions.push_back({"b", "x", 20});
    s.chains.push_back({"b", "app", {"x"}, {}});
    link_all(s, 0, 0);
    const Problem p(s);
    LoadTracker st(p);
    const double ref = detail::system_lifetime_of(p, st.loads());
    const auto c = select_candidate(p, st, 0, {0}, ref);
    EXPECT_EQ(p.instance(c.instance).device, p.device_index("b"));
}

TEST(SelectCandidate, SharedIdleFavoursFullPrefix) {
    Scenario s;
    s.devices = {dev("a", 100, 50), dev("b", 100, 50), dev("c", 1000, 0)};
    s.devices[0].baseline_drain_mj = 10;
    s.devices[1].baseline_drain_mj = 10;
    s.functions.push_back({"c", "x", 30});
    s.functions.push_back({"a", "x", 200});
    s.functions.push_back({"b", "x", 200});
    s.chains.push_back({"a", "app", {"x"}, {}});
    s.chains.push_back({"b", "app", {"x"}, {}});
    link_all(s, 1, 1);
    const Problem p(s);
    LoadTracker st(p);
    const double ref = detail::system_lifetime_of(p, st.loads());
    const auto c = select_candidate(p, st, 0, {0, 1}, ref);
    EXPECT_EQ(p.instance(c.instance).device, p.device_index("c"));
    EXPECT_EQ(c.requests.size(), 2u);
}

TEST(OrchestrationLog, OneStepAndIdentityChains) {
    Scenario s;
    s.devices = {dev("a"), dev("b"), dev("c")};
    for (const char* d : {"a", "b", "c"})
        for (const char* t : {"x", "y", "z"}) s.functions.push_back({d, t, 1});
    s.chains.push_back({"a", "one", {"x"}, {}});
    s.chains.push_back({"a", "three", {"x", "y", "z"}, {}});
    s.chains.push_back({"b", "two", {"x", "y"}, {}});
    link_all(s, 1, 1);
    const Problem p(s);
    std::vector<DeviceIndex> host(p.num_requests(), 0);
    for (RequestIndex r = 0; r < p.num_requests(); ++r) {
        const auto& c = p.chains()[p.request(r).chain];
        if (c.app == "two") host[r] = p.request(r).seq == 1 ? 1 : 2;
    }
    const auto log = orchestrate_log(p, make_assignment(p, host));
    ASSERT_EQ(log.size(), 6u);
    EXPECT_EQ(log[0].requester, "a");
    for (int k = 1; k <= 3; ++k) {
        EXPECT_EQ(log[k].requester, "a");
        EXPECT_EQ(log[k].performer, "a");
    }
    EXPECT_EQ(log[4].requester, "b");
    EXPECT_EQ(log[4].performer, "b");
    EXPECT_EQ(log[5].requester, "b");
    EXPECT_EQ(log[5].performer, "c");

    host[0] = npos;
    Assignment broken;
    broken.host = host;
    EXPECT_THROW(orchestrate_log(p, broken), BrokenChain);
}

TEST(Faa, PinnedStepsHonoured) {
    const Problem p(load_scenario(CHAINALLOC_SCENARIO_DIR "/five_device.json"));
    const auto res = faa_allocate(p);
    for (RequestIndex r = 0; r < p.num_requests(); ++r) {
        if (p.request(r).pinned != npos) {
            EXPECT_EQ(res.assignment.host[r], p.request(r).pinned);
        }
    }
    EXPECT_FALSE(res.steps.empty());
    EXPECT_EQ(res.steps.front().requests.size(), 1u);
    EXPECT_TRUE(p.request(res.steps.front().requests.front()).pinned != npos);
}

TEST(Faa, MinLifetimeViolationReported) {
    Scenario s;
    s.devices.push_back(dev("a"));
    s.devices[0].min_lifetime = 1'000'000;
    s.functions.push_back({"a", "x", 500});
    s.chains.push_back({"a", "app", {"x"}, {}});
    try {
        faa_allocate(Problem(s));
        FAIL() << "expected MinLifetimeViolated";
    } catch (const MinLifetimeViolated& e) {
        EXPECT_NE(std::string(e.what()).find("a"), std::string::npos);
    }
}

TEST(Faa, RandomInstancesStayBelowOptimumAndKeepInvariants) {
    double gap_sum = 0;
    int n = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        auto rng = rng_stream(seed, "faa-random");
        const Problem p(random_instance(rng, {.pin_probability = 0.15}));
        const auto res = faa_allocate(p);
        const auto opt = brute_force_solve(p);
        EXPECT_TRUE(check_constraints(p, res.assignment).feasible()) << seed;
        EXPECT_LE(res.report.system_lifetime, opt.report.system_lifetime * (1 + 1e-12)) << seed;
        EXPECT_LE(res.steps.size(), p.num_requests()) << seed;
        double prev = std::numeric_limits<double>::infinity();
        std::vector<Energy> loads(p.num_devices());
        for (DeviceIndex i = 0; i < p.num_devices(); ++i) loads[i] = p.device(i).baseline;
        for (const auto& st : res.steps) {
            EXPECT_FALSE(st.requests.empty());
            EXPECT_LE(st.lifetime_after, prev) << seed;
            for (DeviceIndex i = 0; i < p.num_devices(); ++i) EXPECT_GE(st.loads_after[i], loads[i]) << seed;
            loads = st.loads_after;
            prev = st.lifetime_after;
        }
        if (std::isfinite(opt.report.system_lifetime)) {
            gap_sum += 1.0 - res.report.system_lifetime / opt.report.system_lifetime;
            ++n;
        }
    }
    EXPECT_LE(gap_sum / n, 0.10);
}
