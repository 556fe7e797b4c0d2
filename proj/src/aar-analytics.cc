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

#include "mtnoma/aar-analytics.h"

#include "mtnoma/errors.h"
#include "mtnoma/parallel.h"
#include "mtnoma/random-streams.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mtnoma
{

std::string_view
ToString(DecodeMode mode)
{
    return mode == DecodeMode::Sinr ? "sinr" : "collision_limited";
}

DecodeMode
ParseDecodeMode(std::string_view text)
{
    if (text == "collision_limited")
    {
        return DecodeMode::CollisionLimited;
    }
    if (text == "sinr")
    {
        return DecodeMode::Sinr;
    }
    throw InvalidParameter("unknown decode mode '" + std::string(text) + "'");
}

namespace
{

std::vector<double>
BinomialPmf(int n, double p)
{
    std::vector<double> pmf(static_cast<std::size_t>(n) + 1, 0.0);
    if (p <= 0.0)
    {
        pmf[0] = 1.0;
        return pmf;
    }
    if (p >= 1.0)
    {
        pmf[static_cast<std::size_t>(n)] = 1.0;
        return pmf;
    }
    const double lp = std::log(p);
    const double lq = std::log1p(-p);
    const double lnFact = std::lgamma(n + 1.0);
    for (int k = 0; k <= n; ++k)
    {
        pmf[static_cast<std::size_t>(k)] =
            std::exp(lnFact - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * lp + (n - k) * lq);
    }
    return pmf;
}

/// C(a, b) as a double, saturating at +inf.
double
Choose(int a, int b)
{
    if (b < 0 || b > a)
    {
        return 0.0;
    }
    return std::round(std::exp(std::lgamma(a + 1.0) - std::lgamma(b + 1.0) - std::lgamma(a - b + 1.0)));
}

/**
 * Expected successes in a single RB holding k devices spread uniformly over
 * its N levels, memoised in k.
 */
class SingleRbModel
{
  public:
    SingleRbModel(const PowerGrid& grid, DecodeMode mode, std::uint64_t budget)
        : m_grid(grid),
          m_mode(mode),
          m_budget(budget)
    {
    }

    /// Throws TooLarge (without caching) when k needs more enumeration than
    /// the remaining budget allows.
    double Expected(int k)
    {
        Extend(k);
        return m_values[static_cast<std::size_t>(k)];
    }

  private:
    void Extend(int k)
    {
        if (static_cast<int>(m_values.size()) > k)
        {
            return;
        }
        if (m_mode == DecodeMode::CollisionLimited)
        {
            ExtendCollisionLimited(k);
        }
        else
        {
            while (static_cast<int>(m_values.size()) <= k)
            {
                m_values.push_back(EnumerateSinr(static_cast<int>(m_values.size())));
            }
        }
    }

    // Scan from the top: with r devices uniform over L remaining levels the
    // top level holds Binomial(r, 1/L) of them. Zero continues the scan, one
    // decodes and continues, two or more stops it.
    void ExtendCollisionLimited(int k)
    {
        const int levels = m_grid.numLevels;
        std::vector<std::vector<double>> f(static_cast<std::size_t>(levels) + 1,
                                           std::vector<double>(static_cast<std::size_t>(k) + 1, 0.0));
        for (int l = 1; l <= levels; ++l)
        {
            const double pTop = 1.0 / l;
            for (int r = 1; r <= k; ++r)
            {
                const double pNone = std::pow(1.0 - pTop, r);
                const double pOne = r * pTop * std::pow(1.0 - pTop, r - 1);
                f[l][r] = pNone * f[l - 1][r] + pOne * (1.0 + f[l - 1][r - 1]);
            }
        }
        m_values.assign(f[static_cast<std::size_t>(levels)].begin(), f[static_cast<std::size_t>(levels)].end());
    }

    double EnumerateSinr(int k)
    {
        const int levels = m_grid.numLevels;
        const double vectors = Choose(k + levels - 1, levels - 1);
        if (m_spent + vectors > static_cast<double>(m_budget))
        {
            throw TooLarge("exact AAR for " + std::to_string(k) + " devices in one RB needs more than " +
                           std::to_string(m_budget) + " count vectors; use Monte Carlo");
        }
        m_spent += vectors;

        std::vector<int> counts(static_cast<std::size_t>(levels), 0);
        const double logBase = std::lgamma(k + 1.0) - k * std::log(static_cast<double>(levels));
        double total = 0.0;
        // Compositions of k into `levels` parts, last part implied.
        auto recurse = [&](auto&& self, int index, int left, double logWeight) -> void {
            if (index == levels - 1)
            {
                counts[static_cast<std::size_t>(index)] = left;
                const double w = std::exp(logWeight - std::lgamma(left + 1.0));
                total += w * CountSinrSuccesses(counts, m_grid);
                return;
            }
            for (int c = 0; c <= left; ++c)
            {
                counts[static_cast<std::size_t>(index)] = c;
                self(self, index + 1, left - c, logWeight - std::lgamma(c + 1.0));
            }
        };
        recurse(recurse, 0, k, logBase);
        return total;
    }

    const PowerGrid& m_grid;
    DecodeMode m_mode;
    std::uint64_t m_budget;
    double m_spent = 0.0;
    std::vector<double> m_values;
};

double
UniformExpectation(int n, const PowerGrid& grid, SingleRbModel& model)
{
    const auto pmf = BinomialPmf(n, 1.0 / grid.numRbs);
    double perRb = 0.0;
    for (int k = 1; k <= n; ++k)
    {
        const double w = pmf[static_cast<std::size_t>(k)];
        if (w > 0.0)
        {
            perRb += w * model.Expected(k);
        }
    }
    return perRb * grid.numRbs;
}

int
SuccessesInRb(std::span<const int> counts, const PowerGrid& grid, DecodeMode mode)
{
    return mode == DecodeMode::CollisionLimited ? CountCollisionLimitedSuccesses(counts)
                                                : CountSinrSuccesses(counts, grid);
}

void
CheckRestricted(int n, const PowerGrid& grid, const SelectionModel& selection)
{
    if (selection.allowed.size() != static_cast<std::size_t>(n))
    {
        throw InvalidInput("pool-restricted selection lists " + std::to_string(selection.allowed.size()) +
                           " devices, expected " + std::to_string(n));
    }
    for (const auto& set : selection.allowed)
    {
        if (set.empty())
        {
            throw InvalidInput("a contending device has an empty allowed set");
        }
        for (const auto& p : set)
        {
            if (p.level < 1 || p.level > grid.numLevels || p.rb < 0 || p.rb >= grid.numRbs)
            {
                throw InvalidInput("allowed PD-RB outside the grid");
            }
        }
    }
}

AarResult
MakeResult(double perSlot, const PowerGrid& grid, double stdError, std::uint64_t trials)
{
    AarResult r;
    r.expectedSuccessesPerSlot = perSlot;
    r.perRb = perSlot / grid.numRbs;
    r.stdError = stdError;
    r.trials = trials;
    return r;
}

} // namespace

AarResult
ExactAar(int n, const PowerGrid& grid, const SelectionModel& selection, DecodeMode mode, std::uint64_t budget)
{
    if (n < 0)
    {
        throw InvalidParameter("device count must be >= 0");
    }
    ValidatePowerGrid(grid);
    if (n == 0)
    {
        return MakeResult(0.0, grid, 0.0, 0);
    }

    if (selection.kind == SelectionModel::Kind::UniformOverPdRbs)
    {
        SingleRbModel model(grid, mode, budget);
        return MakeResult(UniformExpectation(n, grid, model), grid, 0.0, 0);
    }

    CheckRestricted(n, grid, selection);
    double assignments = 1.0;
    for (const auto& set : selection.allowed)
    {
        assignments *= static_cast<double>(set.size());
    }
    if (assignments > static_cast<double>(budget))
    {
        throw TooLarge("exact AAR needs " + std::to_string(assignments) + " labelled assignments (budget " +
                       std::to_string(budget) + "); use Monte Carlo");
    }

    const auto levels = static_cast<std::size_t>(grid.numLevels);
    std::vector<int> counts(levels * static_cast<std::size_t>(grid.numRbs), 0);
    std::vector<std::size_t> digit(static_cast<std::size_t>(n), 0);
    std::uint64_t total = 0;
    while (true)
    {
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t d = 0; d < digit.size(); ++d)
        {
            const PdRb& p = selection.allowed[d][digit[d]];
            ++counts[static_cast<std::size_t>(p.rb) * levels + static_cast<std::size_t>(p.level - 1)];
        }
        for (int rb = 0; rb < grid.numRbs; ++rb)
        {
            total += static_cast<std::uint64_t>(
                SuccessesInRb(std::span<const int>(counts).subspan(static_cast<std::size_t>(rb) * levels, levels),
                              grid,
                              mode));
        }
        std::size_t d = 0;
        while (d < digit.size() && ++digit[d] == selection.allowed[d].size())
        {
            digit[d++] = 0;
        }
        if (d == digit.size())
        {
            break;
        }
    }
    return MakeResult(static_cast<double>(total) / assignments, grid, 0.0, 0);
}

AarResult
McAar(int n,
      const PowerGrid& grid,
      const SelectionModel& selection,
      DecodeMode mode,
      std::uint64_t trials,
      std::uint64_t seed,
      int workers)
{
    if (trials < 1)
    {
        throw InvalidParameter("Monte Carlo needs at least one trial");
    }
    if (n < 0)
    {
        throw InvalidParameter("device count must be >= 0");
    }
    ValidatePowerGrid(grid);
    const bool restricted = selection.kind == SelectionModel::Kind::PoolRestricted;
    if (restricted)
    {
        CheckRestricted(n, grid, selection);
    }

    constexpr std::uint64_t kChunk = 1 << 16;
    const std::uint64_t chunks = (trials + kChunk - 1) / kChunk;
    struct Partial
    {
        double sum = 0.0;
        double sumSq = 0.0;
    };
    std::vector<Partial> partials(chunks);
    const StreamKey root = StreamKey(seed).Child("mc_aar");
    const auto levels = static_cast<std::size_t>(grid.numLevels);
    const std::uint64_t pdRbs = static_cast<std::uint64_t>(grid.NumPdRbs());

    ParallelFor(chunks, workers, [&](std::size_t c) {
        Engine rng = root.Child(c).MakeEngine();
        std::vector<int> counts(levels * static_cast<std::size_t>(grid.numRbs), 0);
        std::vector<int> touched;
        touched.reserve(static_cast<std::size_t>(n));
        const std::uint64_t begin = c * kChunk;
        const std::uint64_t end = std::min(trials, begin + kChunk);
        Partial acc;
        for (std::uint64_t t = begin; t < end; ++t)
        {
            for (int d = 0; d < n; ++d)
            {
                int rb;
                int level;
                if (restricted)
                {
                    const auto& set = selection.allowed[static_cast<std::size_t>(d)];
                    const PdRb& p = set[UniformIndex(rng, set.size())];
                    rb = p.rb;
                    level = p.level;
                }
                else
                {
                    const auto idx = UniformIndex(rng, pdRbs);
                    rb = static_cast<int>(idx / levels);
                    level = static_cast<int>(idx % levels) + 1;
                }
                auto& slot = counts[static_cast<std::size_t>(rb) * levels + static_cast<std::size_t>(level - 1)];
                if (slot++ == 0)
                {
                    touched.push_back(rb);
                }
            }
            std::sort(touched.begin(), touched.end());
            touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
            int successes = 0;
            for (int rb : touched)
            {
                auto rbCounts = std::span<int>(counts).subspan(static_cast<std::size_t>(rb) * levels, levels);
                successes += SuccessesInRb(rbCounts, grid, mode);
                std::fill(rbCounts.begin(), rbCounts.end(), 0);
            }
            touched.clear();
            acc.sum += successes;
            acc.sumSq += static_cast<double>(successes) * successes;
        }
        partials[c] = acc;
    });

    Partial total;
    for (const auto& p : partials)
    {
        total.sum += p.sum;
        total.sumSq += p.sumSq;
    }
    const double count = static_cast<double>(trials);
    const double mean = total.sum / count;
    double stdError = 0.0;
    if (trials > 1)
    {
        const double var = std::max(0.0, (total.sumSq - total.sum * mean) / (count - 1.0));
        stdError = std::sqrt(var / count);
    }
    return MakeResult(mean, grid, stdError, trials);
}

OptimalLoadResult
OptimalLoad(const PowerGrid& grid, DecodeMode mode, int nMax, const OptimalLoadOptions& options)
{
    if (nMax < 1)
    {
        throw InvalidParameter("search bound must be >= 1");
    }
    ValidatePowerGrid(grid);

    SingleRbModel model(grid, mode, options.budget);
    const StreamKey root = StreamKey(options.seed).Child("optimal_load");
    OptimalLoadResult best;
    double bestError = 0.0;
    bool first = true;
    bool exactPossible = true;
    for (int n = 1; n <= nMax; ++n)
    {
        double value = 0.0;
        double error = 0.0;
        if (exactPossible)
        {
            try
            {
                value = UniformExpectation(n, grid, model);
            }
            catch (const TooLarge&)
            {
                exactPossible = false;
                best.exact = false;
            }
        }
        if (!exactPossible)
        {
            const auto r =
                McAar(n, grid, SelectionModel::Uniform(), mode, options.mcTrials, root.Child(static_cast<std::uint64_t>(n)).Value());
            value = r.expectedSuccessesPerSlot;
            error = r.stdError;
        }

        bool better;
        if (first)
        {
            better = true;
        }
        else if (error == 0.0 && bestError == 0.0)
        {
            // Relative tie tolerance keeps mathematically equal values (e.g.
            // n and n + 1 for a single level) resolved toward the smaller n.
            better = value > best.maxAar * (1.0 + 1e-12) + 1e-300;
        }
        else
        {
            better = value - best.maxAar > options.confidenceZ * std::hypot(error, bestError);
        }
        if (better)
        {
            best.optimalLoad = n;
            best.maxAar = value;
            bestError = error;
            first = false;
        }
    }
    return best;
}

} // namespace mtnoma
