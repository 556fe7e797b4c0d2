/*
 * Copyright 2026 The mtnoma Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "doctest.h"
#include "mtnoma/access-protocols.h"
#include "mtnoma/errors.h"

#include <cmath>

using namespace mtnoma;

namespace
{

const std::vector<double> kLevels124{1.0, 2.0, 4.0};

PowerMap
UnitMap(const PowerGrid& grid, std::vector<double> gains, double maxTpl = 1e9)
{
    std::vector<Region> regions;
    for (std::size_t i = 0; i < gains.size(); ++i)
    {
        regions.push_back(Region{static_cast<int>(i), {1.0 + i, 0.0}, 1.0, 1.0, gains[i]});
    }
    return BuildPowerMap(regions, grid, ChannelModel{}, maxTpl);
}

std::vector<int>
Levels(const PowerPool& pool)
{
    std::vector<int> out;
    for (const auto& e : pool.entries)
    {
        out.push_back(e.level);
    }
    return out;
}

} // namespace

TEST_CASE("thresholds")
{
    using T = ThresholdType;
    CHECK(ComputeThreshold(3.5, 1.0, 1.0, kLevels124, T::UpperLimit) == 2);
    CHECK_FALSE(ComputeThreshold(1.2, 1.0, 1.0, kLevels124, T::UpperLimit).has_value());
    CHECK_FALSE(ComputeThreshold(0.5, 1.0, 1.0, kLevels124, T::UpperLimit).has_value());
    // I_max exactly on a level admits it.
    CHECK(ComputeThreshold(3.0, 1.0, 1.0, kLevels124, T::UpperLimit) == 2);
    CHECK(ComputeThreshold(100.0, 1.0, 1.0, kLevels124, T::UpperLimit) == 3);
    CHECK(ComputeThreshold(7.0, 2.0, 1.0, kLevels124, T::UpperLimit) == 2);

    CHECK(ComputeThreshold(1.5, 1.0, 1.0, kLevels124, T::LowerLimit) == 2);
    CHECK(ComputeThreshold(2.0, 1.0, 1.0, kLevels124, T::LowerLimit) == 2);
    CHECK(ComputeThreshold(0.1, 1.0, 1.0, kLevels124, T::LowerLimit) == 1);
    CHECK_FALSE(ComputeThreshold(5.0, 1.0, 1.0, kLevels124, T::LowerLimit).has_value());

    for (int level = 1; level <= 3; ++level)
    {
        CHECK(LevelAllowed(level, NoGbThreshold(T::UpperLimit), T::UpperLimit));
        CHECK(LevelAllowed(level, NoGbThreshold(T::LowerLimit), T::LowerLimit));
        CHECK_FALSE(LevelAllowed(level, std::nullopt, T::UpperLimit));
        CHECK_FALSE(LevelAllowed(level, std::nullopt, T::LowerLimit));
    }
    CHECK_THROWS_AS(ComputeThreshold(0.0, 1.0, 1.0, kLevels124, T::UpperLimit), InvalidParameter);
    CHECK(ParseThresholdType("lower_limit") == T::LowerLimit);
    CHECK(ParseProtocolKind(ToString(ProtocolKind::OpenLoop)) == ProtocolKind::OpenLoop);
    CHECK_THROWS_AS(ParseProtocolKind("closed"), InvalidParameter);
}

TEST_CASE("power map pruning")
{
    PowerGrid grid = MakePowerGrid(3, 2, 1.0, 1.0);
    auto map = UnitMap(grid, {1.0, 0.5});
    REQUIRE(Levels(map.pools[0]) == std::vector<int>{1, 2, 3});

    auto upper = PrunePowerMap(map, 2, ThresholdType::UpperLimit);
    CHECK(Levels(upper.pools[0]) == std::vector<int>{1, 2});
    auto lower = PrunePowerMap(map, 2, ThresholdType::LowerLimit);
    CHECK(Levels(lower.pools[0]) == std::vector<int>{3});
    auto none = PrunePowerMap(map, std::nullopt, ThresholdType::UpperLimit);
    for (const auto& p : none.pools)
    {
        CHECK(p.Void());
    }

    // Monotonicity in the threshold.
    for (int t = 0; t < 3; ++t)
    {
        auto a = PrunePowerMap(map, t, ThresholdType::UpperLimit);
        auto b = PrunePowerMap(map, t + 1, ThresholdType::UpperLimit);
        auto c = PrunePowerMap(map, t, ThresholdType::LowerLimit);
        auto d = PrunePowerMap(map, t + 1, ThresholdType::LowerLimit);
        for (std::size_t i = 0; i < map.pools.size(); ++i)
        {
            CHECK(a.pools[i].entries.size() <= b.pools[i].entries.size());
            CHECK(c.pools[i].entries.size() >= d.pools[i].entries.size());
        }
    }
}

TEST_CASE("grant-based slot")
{
    CHECK(SlotGb(3, 10) == 3);
    CHECK(SlotGb(10, 10) == 10);
    CHECK(SlotGb(50, 10) == 10);
    CHECK(SlotGb(0, 10) == 0);
}

TEST_CASE("grant-free slot")
{
    PowerGrid grid = MakePowerGrid(2, 1, 1.0, 1.0);
    Engine rng = StreamKey(3).MakeEngine();
    std::vector<GfContender> one{{7, -1}};
    auto r = SlotGf(one, grid, nullptr, DecodeMode::CollisionLimited, rng);
    CHECK(r.gfSuccesses == std::vector<DeviceId>{7});
    CHECK(r.gfFailures.empty());

    auto empty = SlotGf({}, grid, nullptr, DecodeMode::Sinr, rng);
    CHECK(empty.gfSuccesses.empty());
    CHECK(empty.admittedGf == 0);

    // n=2, N=2, M=1: exact mean 1.0, per-slot variance 1.0.
    AccessSlot slot(grid, DecodeMode::CollisionLimited);
    std::vector<GfContender> two{{0, -1}, {1, -1}};
    const int slots = 1'000'000;
    double sum = 0.0;
    double sumSq = 0.0;
    for (int s = 0; s < slots; ++s)
    {
        double k = static_cast<double>(slot.RunGf(two, rng, rng).gfSuccesses.size());
        sum += k;
        sumSq += k * k;
    }
    double mean = sum / slots;
    double se = std::sqrt((sumSq / slots - mean * mean) / slots);
    CHECK(std::abs(mean - 1.0) <= 4 * se);
}

TEST_CASE("pool-restricted selection and void pools")
{
    PowerGrid grid = MakePowerGrid(3, 2, 1.0, 1.0);
    auto map = UnitMap(grid, {1.0, 1e-12}, 10.0);
    REQUIRE(map.pools[1].Void());
    AccessSlot slot(grid, DecodeMode::CollisionLimited, &map);
    Engine rng = StreamKey(5).MakeEngine();
    std::vector<GfContender> cs{{0, 0}, {1, 1}};
    for (int s = 0; s < 100; ++s)
    {
        const auto& r = slot.RunGf(cs, rng, rng);
        CHECK(r.gfSilent == std::vector<DeviceId>{1});
        CHECK(r.gfSuccesses == std::vector<DeviceId>{0});
        CHECK(r.admittedGf == 1);
    }
    std::vector<GfContender> bad{{0, 5}};
    CHECK_THROWS_AS(slot.RunGf(bad, rng, rng), InvalidInput);

    PowerGrid other = MakePowerGrid(2, 2, 1.0, 1.0);
    CHECK_THROWS_AS(AccessSlot(other, DecodeMode::Sinr, &map), InvalidInput);
}

TEST_CASE("semi-GF dynamic upper-limit guarantees GB QoS")
{
    PowerGrid grid = MakePowerGrid(3, 1, 1.0, 1.0);
    REQUIRE(grid.levels == kLevels124);
    Engine rng = StreamKey(11).MakeEngine();

    std::vector<GbState> gb{{0, 100, 3.5, 3.5, 1.0}};
    auto alone = SlotSemiGf(gb, {}, nullptr, ThresholdType::UpperLimit, ProtocolKind::Dynamic, grid,
                            DecodeMode::Sinr, rng);
    CHECK(alone.gbSuccess[0]);
    CHECK_FALSE(alone.gbOutage[0]);

    std::vector<GfContender> one{{1, -1}};
    for (auto mode : {DecodeMode::CollisionLimited, DecodeMode::Sinr})
    {
        for (int s = 0; s < 200; ++s)
        {
            auto r = SlotSemiGf(gb, one, nullptr, ThresholdType::UpperLimit, ProtocolKind::Dynamic, grid, mode, rng);
            CHECK(r.gbSuccess[0]);
            CHECK_FALSE(r.gbOutage[0]);
            CHECK(r.gfSuccesses == std::vector<DeviceId>{1});
        }
    }

    // Random GB powers: whenever the admitted GF sum stays within I_max the
    // GB device decodes.
    AccessSlot slot(MakePowerGrid(3, 4, 1.0, 1.0), DecodeMode::Sinr);
    std::vector<GfContender> many{{1, -1}, {2, -1}, {3, -1}, {4, -1}, {5, -1}};
    for (int s = 0; s < 2000; ++s)
    {
        std::vector<GbState> states;
        for (int rb = 0; rb < 4; ++rb)
        {
            double p = 1.0 + 10.0 * UniformUnit(rng);
            states.push_back(GbState{rb, static_cast<DeviceId>(100 + rb), p, p, 1.0});
        }
        const auto& r = slot.RunSemiGf(states, many, ThresholdType::UpperLimit, ProtocolKind::Dynamic, rng, rng);
        for (int rb = 0; rb < 4; ++rb)
        {
            CHECK_FALSE(r.gbOutage[static_cast<std::size_t>(rb)]);
        }
        CHECK(r.gfSuccesses.size() + r.gfFailures.size() + r.gfSilent.size() == many.size());
    }
}

TEST_CASE("semi-GF lower-limit decoding")
{
    PowerGrid grid = MakePowerGrid(3, 1, 1.0, 1.0);
    Engine rng = StreamKey(2).MakeEngine();
    std::vector<GbState> gb{{0, 100, 1.5, 1.5, 1.0}};
    std::vector<GfContender> one{{1, -1}};
    std::vector<GfContender> two{{1, -1}, {2, -1}};
    for (auto mode : {DecodeMode::CollisionLimited, DecodeMode::Sinr})
    {
        auto r = SlotSemiGf(gb, one, nullptr, ThresholdType::LowerLimit, ProtocolKind::Dynamic, grid, mode, rng);
        CHECK(r.gfSuccesses == std::vector<DeviceId>{1});
        CHECK(r.gbSuccess[0]);
        // Only level 3 is admissible, so two devices always collide.
        auto c = SlotSemiGf(gb, two, nullptr, ThresholdType::LowerLimit, ProtocolKind::Dynamic, grid, mode, rng);
        CHECK(c.gfSuccesses.empty());
        CHECK_FALSE(c.gbSuccess[0]);
        CHECK(c.collisions == 2);
    }
}

TEST_CASE("two-point fading calibration")
{
    std::vector<double> levels{1.0, 2.0};
    auto f = CalibrateTwoPointFading(4.0, 1.0, 1.0, levels, ThresholdType::UpperLimit, 0.6);
    CHECK(f.violating == doctest::Approx(0.625));
    CHECK(f.nominal == doctest::Approx(1.5625));
    CHECK(f.violationProb * f.violating + (1 - f.violationProb) * f.nominal == doctest::Approx(1.0));
    CHECK(ComputeThreshold(4.0 * f.violating, 1.0, 1.0, levels, ThresholdType::UpperLimit) == 1);
    CHECK(ComputeThreshold(4.0 * f.nominal, 1.0, 1.0, levels, ThresholdType::UpperLimit) == 2);

    auto g = CalibrateTwoPointFading(1.5, 1.0, 1.0, kLevels124, ThresholdType::LowerLimit, 0.3);
    CHECK(ComputeThreshold(1.5 * g.violating, 1.0, 1.0, kLevels124, ThresholdType::LowerLimit) == 3);
    CHECK(*ComputeThreshold(1.5 * g.nominal, 1.0, 1.0, kLevels124, ThresholdType::LowerLimit) <= 2);

    auto none = CalibrateTwoPointFading(4.0, 1.0, 1.0, levels, ThresholdType::UpperLimit, 0.0);
    CHECK(none.violating == 1.0);
    CHECK(none.nominal == 1.0);
    CHECK_THROWS_AS(CalibrateTwoPointFading(4.0, 1.0, 1.0, levels, ThresholdType::UpperLimit, 1.0),
                    InvalidParameter);
    CHECK_THROWS_AS(CalibrateTwoPointFading(1.2, 1.0, 1.0, levels, ThresholdType::UpperLimit, 0.5),
                    InvalidParameter);
}

TEST_CASE("open-loop outage stays within the violation probability")
{
    PowerGrid grid = MakePowerGrid(2, 1, 1.0, 1.0);
    auto fading = CalibrateTwoPointFading(4.0, 1.0, 1.0, grid.levels, ThresholdType::UpperLimit, 0.6);
    AccessSlot openLoop(grid, DecodeMode::CollisionLimited);
    AccessSlot dynamic(grid, DecodeMode::CollisionLimited);
    Engine fadeRng = StreamKey(9).Child("fading").MakeEngine();
    Engine selA = StreamKey(9).Child("select").MakeEngine();
    Engine selB = selA;
    std::vector<GfContender> one{{1, -1}};
    const int slots = 100'000;
    int outagesOpen = 0;
    int outagesDyn = 0;
    int admittedOpen = 0;
    long successOpen = 0;
    long successDyn = 0;
    for (int s = 0; s < slots; ++s)
    {
        double p = 4.0 * fading.Draw(fadeRng);
        std::vector<GbState> gb{{0, 100, p, 4.0, 1.0}};
        const auto& a = openLoop.RunSemiGf(gb, one, ThresholdType::UpperLimit, ProtocolKind::OpenLoop, selA, selA);
        const auto& b = dynamic.RunSemiGf(gb, one, ThresholdType::UpperLimit, ProtocolKind::Dynamic, selB, selB);
        outagesOpen += a.gbOutage[0];
        outagesDyn += b.gbOutage[0];
        admittedOpen += a.admittedGf;
        successOpen += a.gbSuccess[0] + static_cast<long>(a.gfSuccesses.size());
        successDyn += b.gbSuccess[0] + static_cast<long>(b.gfSuccesses.size());
    }
    CHECK(admittedOpen == slots);
    CHECK(outagesOpen <= 0.6 * slots);
    CHECK(outagesOpen > 0);
    CHECK(outagesDyn == 0);
    CHECK(successDyn >= successOpen);
}

TEST_CASE("decode is independent of the worker count")
{
    PowerGrid grid = MakePowerGrid(3, 6, 1.0, 1.0);
    ChannelModel ch;
    ch.shadowingSigmaDb = 2.0;
    auto regions = PartitionArea(RectangleArea{{0, 0}, {100, 100}}, 2, 2);
    AssignMeanGains(regions, ch, {40, 40});
    auto map = BuildPowerMap(regions, grid, ch, 3000, {40, 40});
    for (auto mode : {DecodeMode::CollisionLimited, DecodeMode::Sinr})
    {
        AccessSlot one(grid, mode, &map, 1);
        AccessSlot four(grid, mode, &map, 4);
        Engine a = StreamKey(4).MakeEngine();
        Engine b = a;
        std::vector<GfContender> cs;
        for (DeviceId d = 0; d < 20; ++d)
        {
            cs.push_back(GfContender{d, static_cast<int>(d % 4)});
        }
        for (int s = 0; s < 300; ++s)
        {
            std::vector<GbState> gb{{0, 100, 4.0 + s % 7, 4.0, 1.0}, {3, 101, 9.0, 9.0, 2.0}};
            const auto& x = one.RunSemiGf(gb, cs, ThresholdType::UpperLimit, ProtocolKind::OpenLoop, a, a);
            const auto& y = four.RunSemiGf(gb, cs, ThresholdType::UpperLimit, ProtocolKind::OpenLoop, b, b);
            CHECK(x.gfSuccesses == y.gfSuccesses);
            CHECK(x.gfFailures == y.gfFailures);
            CHECK(x.gbSuccess == y.gbSuccess);
            CHECK(x.gbOutage == y.gbOutage);
        }
    }
}

TEST_CASE("windowed mean")
{
    WindowedMean w(4, 2.0);
    CHECK(w.Value() == 2.0);
    w.Add(6.0);
    CHECK(w.Value() == 3.0);
    for (int i = 0; i < 4; ++i)
    {
        w.Add(1.0);
    }
    CHECK(w.Value() == 1.0);
    CHECK_THROWS_AS(WindowedMean(0, 1.0), InvalidParameter);
}
