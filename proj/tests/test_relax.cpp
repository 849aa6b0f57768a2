#include <gtest/gtest.h>

#include <chainalloc/exact.hpp>
#include <chainalloc/random.hpp>
#include <chainalloc/relax.hpp>
#include <chainalloc/scenario_io.hpp>

using namespace chainalloc;

namespace {

Problem two_sensor() { return Problem(load_scenario(CHAINALLOC_SCENARIO_DIR "/two_sensor.json")); }

Scenario two_device_shared(double cost_a, double cost_b) {
    Scenario s;
    s.devices.push_back({"a", Tier::Tier1, 1000, 3.8, 1.0, 10, 0, 0, {}});
    s.devices.push_back({"b", Tier::Tier1, 1000, 3.8, 1.0, 10, 0, 0, {}});
    s.functions.push_back({"a", "x", cost_a});
    s.functions.push_back({"b", "x", cost_b});
    s.comm.pairs.push_back({"a", "b", 1, 1});
    s.comm.pairs.push_back({"b", "a", 1, 1});
    s.chains.push_back({"a", "app", {"x"}, {}});
    return s;
}

FractionalSolution empty_fraction(const Problem& p) {
    FractionalSolution f;
    f.w.assign(p.num_instances(), 0.0);
    f.x.assign(p.num_requests(), std::vector<double>(p.num_devices(), 0.0));
    f.y.assign(p.num_instances(), std::vector<double>(p.num_devices(), 0.0));
    f.z.assign(p.num_devices(), 0.0);
    f.loads.assign(p.num_devices(), 0.0);
    return f;
}

}  // namespace

TEST(Simplex, SmallKnownOptimum) {
    // min -x - y s.t. x + 2y <= 4, 3x + y <= 6
    LinearProgram lp;
    const auto x = lp.add_var(-1), y = lp.add_var(-1);
    lp.add_row({{x, 1}, {y, 2}}, LinearProgram::Sense::LessEqual, 4);
    lp.add_row({{x, 3}, {y, 1}}, LinearProgram::Sense::LessEqual, 6);
    const auto r = solve_simplex(lp);
    ASSERT_EQ(r.status, LPResult::Status::Optimal);
    EXPECT_NEAR(r.x[x], 1.6, 1e-9);
    EXPECT_NEAR(r.x[y], 1.2, 1e-9);
}

TEST(Simplex, DetectsInfeasibleAndUnbounded) {
    LinearProgram a;
    const auto x = a.add_var();
    a.add_row({{x, 1}}, LinearProgram::Sense::GreaterEqual, 2);
    a.add_row({{x, 1}}, LinearProgram::Sense::LessEqual, 1);
    EXPECT_EQ(solve_simplex(a).status, LPResult::Status::Infeasible);

    LinearProgram b;
    const auto u = b.add_var(-1);
    b.add_row({{u, 1}}, LinearProgram::Sense::GreaterEqual, 1);
    EXPECT_EQ(solve_simplex(b).status, LPResult::Status::Unbounded);
}

TEST(Relax, SingleHostForcesWholeRequest) {
    Scenario s;
    s.devices.push_back({"a", Tier::Tier1, 1000, 3.8, 1.0, 10, 0, 0, {}});
    s.functions.push_back({"a", "x", 5});
    s.chains.push_back({"a", "app", {"x"}, {}});
    const Problem p(s);
    const auto m = build_lp(p);
    const auto f = solve_lp(m);
    EXPECT_NEAR(f.x[0][0], 1.0, 1e-9);
    EXPECT_NEAR(f.opt_lp, 15.0 / p.device(0).energy.mj(), 1e-12);
}

TEST(Relax, VariableCountMatchesIndexSets) {
    const Problem p = two_sensor();
    const auto m = build_lp(p);
    EXPECT_EQ(m.variable_count(), lp_variable_count(p));
    EXPECT_EQ(m.variable_count(), 4u + 4u * 2u + 4u * 2u + 2u + 1u);
    EXPECT_EQ(m.rows.cover, p.num_requests());
}

TEST(Relax, TwoSensorLowerBoundsOptimum) {
    const Problem p = two_sensor();
    const auto f = solve_lp(build_lp(p));
    const double opt = brute_force_solve(p).report.system_cost.value();
    EXPECT_LE(f.opt_lp, opt * (1 + 1e-9));
    EXPECT_GT(f.opt_lp, 0.0);
}

TEST(Relax, ScalingEnergiesLeavesSolutionInvariant) {
    const Problem p = two_sensor();
    const auto f1 = solve_lp(build_lp(p));
    const auto f2 = solve_lp(build_lp(p.scaled(7)));
    EXPECT_NEAR(f1.opt_lp, f2.opt_lp, 1e-9 * f1.opt_lp);
}

TEST(Relax, InfeasibleBudgetRaises) {
    Scenario s = two_device_shared(100, 100);
    s.devices[0].min_lifetime = 1'000'000'000;
    EXPECT_THROW(solve_lp(build_lp(Problem(s))), LPInfeasible);
}

TEST(Rounding, BottleneckKeepsLocalShare) {
    const Problem p(two_device_shared(100, 100));
    auto f = empty_fraction(p);
    f.x[0][0] = 0.6;
    f.x[0][1] = 0.4;
    f.bottleneck = 0;
    EXPECT_EQ(round_to_integral(p, f).host[0], 0u);
}

TEST(Rounding, InboundShareMovesToBottleneck) {
    const Problem p(two_device_shared(100, 100));
    auto f = empty_fraction(p);
    f.x[0][0] = 0.7;
    f.x[0][1] = 0.3;
    f.y[p.instance_at(0, 1)][0] = 0.3;
    f.bottleneck = 1;
    const auto a = round_to_integral(p, f);
    EXPECT_EQ(a.host[0], 1u);
    EXPECT_TRUE(a.active[p.instance_at(0, 1)]);
}

TEST(Rounding, IntegralSolutionUnchanged) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        auto rng = rng_stream(seed, "round-integral");
        const Problem p(random_instance(rng));
        const auto opt = brute_force_solve(p);
        auto f = empty_fraction(p);
        for (RequestIndex r = 0; r < p.num_requests(); ++r) f.x[r][opt.assignment.host[r]] = 1.0;
        f.bottleneck = opt.report.bottleneck;
        EXPECT_EQ(round_to_integral(p, f).host, opt.assignment.host) << "seed " << seed;
    }
}

TEST(Rounding, ViolatedBudgetRaises) {
    Scenario s = two_device_shared(100, 100);
    const double e = energy_budget(s.devices[1]);
    s.devices[1].min_lifetime = static_cast<std::uint64_t>(e / 50.0);
    const Problem p(s);
    auto f = empty_fraction(p);
    f.x[0][1] = 1.0;
    f.bottleneck = 0;
    EXPECT_THROW(round_to_integral(p, f), RoundingInfeasible);
}

TEST(Bounds, OrderingOnRandomInstances) {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        auto rng = rng_stream(seed, "bounds");
        const Problem p(random_instance(rng));
        const auto opt = brute_force_solve(p).report.system_cost.value();
        const auto f = solve_lp(build_lp(p));
        const auto rep = bounds_and_af(p, f, round_to_integral(p, f));
        EXPECT_LE(rep.opt_lp, opt * (1 + 1e-9)) << "seed " << seed;
        EXPECT_LE(opt, rep.int_worst * (1 + 1e-9)) << "seed " << seed;
        EXPECT_GE(rep.af, 1.0) << "seed " << seed;
        EXPECT_LE(rep.int_best, rep.int_worst * (1 + 1e-9)) << "seed " << seed;
    }
}

TEST(Bounds, CsvRowHasFiveFields) {
    const auto rep = relax_solve(two_sensor());
    const std::string row = rep.csv_row();
    EXPECT_EQ(std::count(row.begin(), row.end(), ','), 4);
    EXPECT_GE(rep.af, 1.0);
}
