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
#include "mtnoma/aar-analytics.h"
#include "mtnoma/errors.h"
#include "oracles.h"

#include <cmath>

using namespace mtnoma;

namespace
{

double
Exact(int n, int levels, int rbs, DecodeMode mode = DecodeMode::CollisionLimited)
{
    return ExactAar(n, MakePowerGrid(levels, rbs, 1.0, 1.0), SelectionModel::Uniform(), mode)
        .expectedSuccessesPerSlot;
}

} // namespace

TEST_CASE("exact AAR reference values")
{
    // Frozen from oracle::BruteForceAar.
    CHECK(Exact(0, 2, 3) == 0.0);
    CHECK(Exact(2, 2, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(Exact(2, 2, 2) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(Exact(3, 2, 1) == doctest::Approx(0.375).epsilon(1e-12));
    CHECK(Exact(10, 1, 10) == doctest::Approx(3.87420489).epsilon(1e-10));

    const auto r = ExactAar(2, MakePowerGrid(2, 2, 1, 1), SelectionModel::Uniform(), DecodeMode::CollisionLimited);
    CHECK(r.perRb * 2 == doctest::Approx(r.expectedSuccessesPerSlot));
    CHECK(r.stdError == 0.0);
}

TEST_CASE("exact AAR agrees with labelled brute-force enumeration")
{
    for (int levels = 1; levels <= 3; ++levels)
    {
        for (int rbs = 1; rbs <= 3; ++rbs)
        {
            const auto grid = MakePowerGrid(levels, rbs, 1.0, 1.0, 1.0);
            for (int n = 0; n <= 5; ++n)
            {
                for (bool sinr : {false, true})
                {
                    CAPTURE(levels);
                    CAPTURE(rbs);
                    CAPTURE(n);
                    CAPTURE(sinr);
                    const double expected = oracle::BruteForceAar(n, grid.levels, rbs, sinr, 1.0, 1.0);
                    const double got =
                        ExactAar(n, grid, SelectionModel::Uniform(), sinr ? DecodeMode::Sinr : DecodeMode::CollisionLimited)
                            .expectedSuccessesPerSlot;
                    CHECK(got == doctest::Approx(expected).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("pool-restricted exact AAR")
{
    const auto grid = MakePowerGrid(2, 2, 1.0, 1.0);
    std::vector<PdRb> all;
    for (int rb = 0; rb < 2; ++rb)
    {
        for (int level = 1; level <= 2; ++level)
        {
            all.push_back({level, rb});
        }
    }
    SUBCASE("full pools reproduce the uniform model")
    {
        const auto r = ExactAar(3, grid, SelectionModel::Restricted({all, all, all}), DecodeMode::CollisionLimited);
        CHECK(r.expectedSuccessesPerSlot == doctest::Approx(Exact(3, 2, 2)).epsilon(1e-12));
    }
    SUBCASE("hand cases")
    {
        const std::vector<PdRb> low = {{1, 0}};
        const std::vector<PdRb> high = {{2, 0}};
        CHECK(ExactAar(2, grid, SelectionModel::Restricted({low, low}), DecodeMode::CollisionLimited)
                  .expectedSuccessesPerSlot == 0.0);
        CHECK(ExactAar(2, grid, SelectionModel::Restricted({low, high}), DecodeMode::CollisionLimited)
                  .expectedSuccessesPerSlot == 2.0);
        // Collision at the top level takes the device below with it.
        CHECK(ExactAar(3, grid, SelectionModel::Restricted({low, high, high}), DecodeMode::CollisionLimited)
                  .expectedSuccessesPerSlot == 0.0);
    }
    SUBCASE("relabelling resource blocks leaves the AAR unchanged")
    {
        const std::vector<PdRb> a = {{1, 0}, {2, 1}};
        const std::vector<PdRb> b = {{2, 0}, {2, 1}};
        const std::vector<PdRb> aSwapped = {{1, 1}, {2, 0}};
        const std::vector<PdRb> bSwapped = {{2, 1}, {2, 0}};
        const double x = ExactAar(2, grid, SelectionModel::Restricted({a, b}), DecodeMode::Sinr).expectedSuccessesPerSlot;
        const double y =
            ExactAar(2, grid, SelectionModel::Restricted({aSwapped, bSwapped}), DecodeMode::Sinr).expectedSuccessesPerSlot;
        CHECK(x == doctest::Approx(y));
        const double z = ExactAar(2, grid, SelectionModel::Restricted({b, a}), DecodeMode::Sinr).expectedSuccessesPerSlot;
        CHECK(x == doctest::Approx(z));
    }
    SUBCASE("errors")
    {
        CHECK_THROWS_AS(ExactAar(2, grid, SelectionModel::Restricted({all}), DecodeMode::Sinr), InvalidInput);
        CHECK_THROWS_AS(ExactAar(1, grid, SelectionModel::Restricted({{}}), DecodeMode::Sinr), InvalidInput);
        CHECK_THROWS_AS(ExactAar(1, grid, SelectionModel::Restricted({{{3, 0}}}), DecodeMode::Sinr), InvalidInput);
        std::vector<std::vector<PdRb>> many(20, all);
        CHECK_THROWS_AS(ExactAar(20, grid, SelectionModel::Restricted(many), DecodeMode::Sinr, 1000), TooLarge);
    }
}

TEST_CASE("exact AAR budget guard")
{
    const auto grid = MakePowerGrid(4, 10, 1.0, 1.0);
    CHECK_THROWS_AS(ExactAar(200, grid, SelectionModel::Uniform(), DecodeMode::Sinr, 10'000), TooLarge);
    // Collision-limited decoding never enumerates.
    CHECK_NOTHROW(ExactAar(200, grid, SelectionModel::Uniform(), DecodeMode::CollisionLimited, 10));
    CHECK_THROWS_AS(ExactAar(-1, grid, SelectionModel::Uniform(), DecodeMode::Sinr), InvalidParameter);
}

TEST_CASE("Monte Carlo AAR")
{
    const auto grid = MakePowerGrid(2, 1, 1.0, 1.0);
    SUBCASE("a lone device always succeeds")
    {
        const auto r = McAar(1, MakePowerGrid(3, 4, 1, 1), SelectionModel::Uniform(), DecodeMode::Sinr, 10'000, 3);
        CHECK(r.expectedSuccessesPerSlot == 1.0);
        CHECK(r.stdError == 0.0);
        CHECK(r.trials == 10'000);
    }
    SUBCASE("matches the exact value")
    {
        const auto r = McAar(2, grid, SelectionModel::Uniform(), DecodeMode::CollisionLimited, 1'000'000, 11);
        CHECK(std::abs(r.expectedSuccessesPerSlot - 1.0) <= 3 * r.stdError);
    }
    SUBCASE("deterministic per seed and independent of worker count")
    {
        const auto big = MakePowerGrid(3, 3, 1, 1);
        const auto a = McAar(5, big, SelectionModel::Uniform(), DecodeMode::Sinr, 300'000, 99, 1);
        const auto b = McAar(5, big, SelectionModel::Uniform(), DecodeMode::Sinr, 300'000, 99, 1);
        const auto c = McAar(5, big, SelectionModel::Uniform(), DecodeMode::Sinr, 300'000, 99, 4);
        CHECK(a.expectedSuccessesPerSlot == b.expectedSuccessesPerSlot);
        CHECK(a.stdError == b.stdError);
        CHECK(a.expectedSuccessesPerSlot == c.expectedSuccessesPerSlot);
        CHECK(a.stdError == c.stdError);
        const auto d = McAar(5, big, SelectionModel::Uniform(), DecodeMode::Sinr, 300'000, 100, 1);
        CHECK(a.expectedSuccessesPerSlot != d.expectedSuccessesPerSlot);
    }
    SUBCASE("pool-restricted sampling")
    {
        const std::vector<PdRb> only = {{2, 0}};
        const auto r = McAar(2, grid, SelectionModel::Restricted({only, only}), DecodeMode::Sinr, 1000, 1);
        CHECK(r.expectedSuccessesPerSlot == 0.0);
    }
    CHECK_THROWS_AS(McAar(1, grid, SelectionModel::Uniform(), DecodeMode::Sinr, 0, 1), InvalidParameter);
}

TEST_CASE("optimal load")
{
    SUBCASE("single level single RB")
    {
        const auto r = OptimalLoad(MakePowerGrid(1, 1, 1, 1), DecodeMode::CollisionLimited, 10);
        CHECK(r.optimalLoad == 1);
        CHECK(r.maxAar == doctest::Approx(1.0));
    }
    SUBCASE("single level, ten RBs: closed form n (1 - 1/M)^(n-1)")
    {
        const auto r = OptimalLoad(MakePowerGrid(1, 10, 1, 1), DecodeMode::CollisionLimited, 40);
        CHECK((r.optimalLoad == 9 || r.optimalLoad == 10));
        CHECK(r.optimalLoad == 9); // exact tie resolves toward the smaller n
        CHECK(r.maxAar == doctest::Approx(oracle::SingleLevelAar(10, 10)).epsilon(1e-10));
        CHECK(r.maxAar == doctest::Approx(3.874).epsilon(1e-3));
    }
    SUBCASE("two levels, one RB")
    {
        const auto r = OptimalLoad(MakePowerGrid(2, 1, 1, 1), DecodeMode::CollisionLimited, 10);
        CHECK(r.optimalLoad == 1);
        CHECK(r.maxAar == doctest::Approx(1.0));
        CHECK(Exact(2, 2, 1) == doctest::Approx(1.0));
    }
    SUBCASE("Monte Carlo fallback beyond the budget")
    {
        OptimalLoadOptions opt;
        opt.budget = 50;
        opt.mcTrials = 50'000;
        const auto grid = MakePowerGrid(2, 3, 1, 1);
        const auto exact = OptimalLoad(grid, DecodeMode::Sinr, 12);
        const auto mixed = OptimalLoad(grid, DecodeMode::Sinr, 12, opt);
        CHECK(exact.exact);
        CHECK_FALSE(mixed.exact);
        CHECK(std::abs(mixed.optimalLoad - exact.optimalLoad) <= 2);
        CHECK(mixed.maxAar == doctest::Approx(exact.maxAar).epsilon(0.05));
    }
    CHECK_THROWS_AS(OptimalLoad(MakePowerGrid(1, 1, 1, 1), DecodeMode::Sinr, 0), InvalidParameter);
}

TEST_CASE("NOMA dominance and sub-linear gain")
{
    for (int rbs = 1; rbs <= 5; ++rbs)
    {
        for (int n = 1; n <= 20; ++n)
        {
            const double oma = Exact(n, 1, rbs);
            for (int levels = 2; levels <= 4; ++levels)
            {
                CHECK(Exact(n, levels, rbs) >= oma - 1e-12);
                CHECK(Exact(n, levels, rbs, DecodeMode::Sinr) >= oma - 1e-12);
            }
        }
        for (int levels = 2; levels <= 4; ++levels)
        {
            CHECK(Exact(rbs, levels, rbs) / Exact(rbs, 1, rbs) < levels);
        }
    }
}
