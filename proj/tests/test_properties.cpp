#include <gtest/gtest.h>

#include "property_checks.hpp"

using namespace chainalloc;

namespace {

constexpr int kCases = 1000;
constexpr std::uint64_t kSeed = 20240601;

void expect_ok(const props::Outcome& o) {
    EXPECT_EQ(o.cases, kCases);
    EXPECT_EQ(o.failures, 0) << o.first_failure;
}

}  // namespace

TEST(Properties, ConstraintSatisfaction) { expect_ok(props::constraint_satisfaction(kCases, kSeed)); }
TEST(Properties, ChainConsistency) { expect_ok(props::chain_consistency(kCases, kSeed)); }
TEST(Properties, EnergyConservation) { expect_ok(props::energy_conservation(kCases, kSeed)); }
TEST(Properties, IdleLatch) { expect_ok(props::idle_latch(kCases, kSeed)); }
TEST(Properties, Determinism) { expect_ok(props::determinism(kCases, kSeed)); }
