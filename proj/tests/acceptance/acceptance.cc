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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Pass --only=K to run a single criterion.

#include "../oracles.h"
#include "mtnoma/aar-analytics.h"
#include "mtnoma/access-protocols.h"
#include "mtnoma/barring-controller.h"
#include "mtnoma/output.h"
#include "mtnoma/power-grid.h"
#include "mtnoma/power-map.h"
#include "mtnoma/random-streams.h"
#include "mtnoma/run-config.h"
#include "mtnoma/sim-engine.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

using namespace mtnoma;

namespace
{

struct Verdict
{
    bool pass = true;
    std::ostringstream detail;
    std::string firstFailure;

    void Require(bool ok, const std::string& what)
    {
        if (!ok && pass)
        {
            firstFailure = what;
        }
        pass = pass && ok;
    }
};

int g_failures = 0;

void
Report(int id, const std::string& name, Verdict& v, double seconds)
{
    const std::string failure = v.pass ? "" : " | first failure: " + v.firstFailure;
    std::printf("[%s] criterion %d %-28s %s%s (%.1f s)\n",
                v.pass ? "PASS" : "FAIL",
                id,
                name.c_str(),
                v.detail.str().c_str(),
                failure.c_str(),
                seconds);
    std::fflush(stdout);
    if (!v.pass)
    {
        ++g_failures;
    }
}

std::string
Fmt(double x, int digits = 4)
{
    std::ostringstream s;
    s.precision(digits);
    s << x;
    return s.str();
}

// 1. MC and simulation agree with the exact AAR; the exact AAR agrees with
// brute-force enumeration.
void
OracleEquivalence(Verdict& v)
{
    const std::uint64_t trials = 1'000'000;
    const std::int64_t simSlots = 200'000;
    int configs = 0;
    double worstMc = 0.0;
    double worstSim = 0.0;
    double worstExact = 0.0;
    for (DecodeMode mode : {DecodeMode::CollisionLimited, DecodeMode::Sinr})
    {
        for (int levels = 1; levels <= 3; ++levels)
        {
            for (int rbs = 1; rbs <= 3; ++rbs)
            {
                const PowerGrid grid = MakePowerGrid(levels, rbs, 1.0, 1.0);
                for (int n = 1; n <= 6; ++n)
                {
                    ++configs;
                    const std::string tag = "n=" + std::to_string(n) + " N=" + std::to_string(levels) +
                                            " M=" + std::to_string(rbs) + " " + std::string(ToString(mode));
                    const double exact =
                        ExactAar(n, grid, SelectionModel::Uniform(), mode).expectedSuccessesPerSlot;
                    const double brute = oracle::BruteForceAar(n,
                                                       grid.levels,
                                                       rbs,
                                                       mode == DecodeMode::Sinr,
                                                       grid.targetSinr,
                                                       grid.noisePower);
                    worstExact = std::max(worstExact, std::abs(exact - brute));
                    v.Require(std::abs(exact - brute) <= 1e-12 * std::max(1.0, brute), "exact vs brute " + tag);

                    const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(configs);
                    const AarResult mc = McAar(n, grid, SelectionModel::Uniform(), mode, trials, seed);
                    const double zMc = mc.stdError > 0 ? std::abs(mc.expectedSuccessesPerSlot - exact) / mc.stdError
                                                       : (mc.expectedSuccessesPerSlot == exact ? 0.0 : INFINITY);
                    worstMc = std::max(worstMc, zMc);
                    v.Require(zMc <= 4.0, "mc " + tag + " z=" + Fmt(zMc));

                    RunConfig c;
                    c.grid.numLevels = levels;
                    c.grid.numRbs = rbs;
                    c.decodeMode = mode;
                    c.scheme = Scheme::Gf;
                    c.traffic.devices = n;
                    c.traffic.activationProb = 1.0;
                    c.traffic.maxAttempts = 1 << 30;
                    c.metrics.perSlot = false;
                    c.slots = simSlots;
                    const RunSummary s = RunSimulation(c, seed).summary;
                    const double zSim =
                        s.aarStdError > 0 ? std::abs(s.aar - exact) / s.aarStdError : (s.aar == exact ? 0.0 : INFINITY);
                    worstSim = std::max(worstSim, zSim);
                    v.Require(zSim <= 4.0, "sim " + tag + " z=" + Fmt(zSim));
                }
            }
        }
    }
    v.detail << configs << " configs, mc 1e6 trials worst |z|=" << Fmt(worstMc, 3) << ", sim 2e5 slots worst |z|="
             << Fmt(worstSim, 3) << ", exact vs enumeration max diff=" << Fmt(worstExact, 3) << " (tol 4 SE)";
}

// 2. One device on the top level and two on level N-2 of the same RB.
void
DecodeExample(Verdict& v)
{
    for (int levels = 3; levels <= 6; ++levels)
    {
        const PowerGrid grid = MakePowerGrid(levels, 1, 1.0, 1.0);
        RbOccupancy occ(levels);
        occ.Add(0, levels);
        occ.Add(1, levels - 2);
        occ.Add(2, levels - 2);
        const DecodeOutcome cl = DecodeCollisionLimited(occ);
        v.Require(cl.succeeded.size() == 1 && cl.succeeded[0] == 0, "collision-limited N=" + std::to_string(levels));
        const DecodeOutcome sinr = DecodeSinr(occ, grid);
        v.Require(sinr.succeeded.size() == 1 && sinr.succeeded[0] == 0, "sinr N=" + std::to_string(levels));
        if (levels == 3)
        {
            v.detail << "N=3: collision-limited successes=" << cl.succeeded.size()
                     << " (device at P_N), sinr successes=" << sinr.succeeded.size() << "; checked N=3..6";
        }
    }
}

// 3. Two levels never lose to one; the gain at n = M is below N.
void
NomaDominance(Verdict& v)
{
    double minMargin = INFINITY;
    double maxRatio = 0.0;
    for (DecodeMode mode : {DecodeMode::CollisionLimited, DecodeMode::Sinr})
    {
        for (int m : {1, 2, 5})
        {
            const PowerGrid one = MakePowerGrid(1, m, 1.0, 1.0);
            const PowerGrid two = MakePowerGrid(2, m, 1.0, 1.0);
            for (int n = 1; n <= 20; ++n)
            {
                const double a1 = ExactAar(n, one, SelectionModel::Uniform(), mode).expectedSuccessesPerSlot;
                const double a2 = ExactAar(n, two, SelectionModel::Uniform(), mode).expectedSuccessesPerSlot;
                minMargin = std::min(minMargin, a2 - a1);
                v.Require(a2 >= a1 - 1e-12,
                          "dominance n=" + std::to_string(n) + " M=" + std::to_string(m) + " " +
                              std::string(ToString(mode)));
                if (n == m)
                {
                    const double ratio = a2 / a1;
                    maxRatio = std::max(maxRatio, ratio);
                    v.Require(ratio < 2.0, "gain ratio at n=M=" + std::to_string(m) + " is " + Fmt(ratio));
                }
            }
        }
    }
    v.detail << "min AAR(N=2)-AAR(N=1)=" << Fmt(minMargin) << " over n<=20, M in {1,2,5}, both modes; max gain ratio at n=M="
             << Fmt(maxRatio) << " (< 2)";
}

// 4. Scheme ordering over n = 1..60 with the default comparison scenario.
void
SchemeOrdering(Verdict& v)
{
    const RunConfig config = DefaultCompareConfig();
    std::vector<int> devices;
    for (int n = 1; n <= 60; ++n)
    {
        devices.push_back(n);
    }
    const CompareTable t = Compare(config, devices, 1, 1);
    double minSemiMinusGb = INFINITY;
    double minSemiMinusGf = INFINITY;
    double minDynMinusOpen = INFINITY;
    for (const auto& r : t.rows)
    {
        const std::string n = "n=" + std::to_string(r.devices);
        minSemiMinusGb = std::min(minSemiMinusGb, r.semiDynamic - r.gb);
        minSemiMinusGf = std::min(minSemiMinusGf, r.semiDynamic - r.gf);
        minDynMinusOpen = std::min(minDynMinusOpen, r.semiDynamic - r.semiOpenLoop);
        v.Require(r.semiDynamic >= r.gb, "semi >= gb " + n);
        v.Require(r.gf < r.semiDynamic, "gf < semi " + n);
        v.Require(r.semiDynamic >= r.semiOpenLoop, "dynamic >= open-loop " + n);
    }
    v.Require(t.maxGainOverGb >= 0.2 && t.maxGainOverGb <= 0.6, "max gain over GB " + Fmt(t.maxGainOverGb));
    v.Require(t.maxRatioOverGf >= 3.0, "max ratio over GF " + Fmt(t.maxRatioOverGf));
    v.detail << "max semi/GB gain=" << Fmt(t.maxGainOverGb) << " (in [0.2,0.6]), max semi/GF ratio="
             << Fmt(t.maxRatioOverGf) << " (>= 3), min margins semi-GB=" << Fmt(minSemiMinusGb)
             << " semi-GF=" << Fmt(minSemiMinusGf) << " dyn-open=" << Fmt(minDynMinusOpen)
             << "; defaults M=10 N=2 eps=0.6 upper-limit, " << config.slots << " slots, seed " << config.seed;
}

// 5. Barring keeps throughput and load near the optimum.
void
BarringStabilization(Verdict& v)
{
    const RunConfig config = DefaultBarringConfig();
    const BarringState init = InitialBarringState(config);
    const int nStar = init.optimalLoad;
    const double aarMax = init.maxAar;
    std::vector<int> devices{nStar, 30, 40, 60, 80, 100, 125, 150, 175, 200};
    devices.erase(std::remove_if(devices.begin(), devices.end(), [&](int n) { return n < nStar; }), devices.end());

    double worstAarDev = 0.0;
    double worstWindowDev = 0.0;
    double worstLoadDev = 0.0;
    double aarWith200 = 0.0;
    double aarWithout200 = 0.0;
    int windows = 0;
    for (int n : devices)
    {
        RunConfig with = config;
        with.traffic.devices = n;
        with.barring.enabled = true;
        const MetricsSeries s = RunSimulation(with, with.seed);
        const double aarDev = std::abs(s.summary.aar - aarMax) / aarMax;
        const double loadDev = std::abs(s.summary.systemLoad - nStar) / nStar;
        worstAarDev = std::max(worstAarDev, aarDev);
        worstLoadDev = std::max(worstLoadDev, loadDev);
        v.Require(aarDev <= 0.15, "mean AAR n=" + std::to_string(n) + " dev " + Fmt(aarDev));
        v.Require(loadDev <= 0.25, "mean load n=" + std::to_string(n) + " dev " + Fmt(loadDev));
        for (const auto& w : s.windows)
        {
            if (w.startSlot >= with.warmupSlots && w.slots == s.window)
            {
                const double dev = std::abs(w.aar - aarMax) / aarMax;
                worstWindowDev = std::max(worstWindowDev, dev);
                ++windows;
                v.Require(dev <= 0.15,
                          "window at slot " + std::to_string(w.startSlot) + " n=" + std::to_string(n) + " dev " +
                              Fmt(dev));
            }
        }
        if (n == 200)
        {
            aarWith200 = s.summary.aar;
            RunConfig without = with;
            without.barring.enabled = false;
            aarWithout200 = RunSimulation(without, without.seed).summary.aar;
        }
    }
    const double ratio = aarWith200 / aarWithout200;
    v.Require(aarWithout200 <= 0.1 * aarMax, "no collapse without barring at n=200: " + Fmt(aarWithout200));
    v.Require(ratio >= 10.0, "ratio at n=200 " + Fmt(ratio));
    v.detail << "n*=" << nStar << " aar_max=" << Fmt(aarMax) << "; n in [n*,200]: worst "
             << config.EffectiveWindow() << "-slot window AAR dev=" << Fmt(worstWindowDev, 3) << " over " << windows
             << " windows after warm-up (<= 0.15), worst mean AAR dev=" << Fmt(worstAarDev, 3)
             << ", worst mean load dev=" << Fmt(worstLoadDev, 3)
             << " (<= 0.25); n=200 AAR with=" << Fmt(aarWith200) << " without=" << Fmt(aarWithout200)
             << " (<= 0.1 aar_max), ratio=" << Fmt(ratio, 3) << " (>= 10); defaults M=10 N=4 collision-limited, period "
             << config.barring.period << ", " << config.slots << " slots";
}

// 6. Controller work per period measured in a live barring loop.
void
ControllerComplexity(Verdict& v)
{
    const int m = 10;
    const PowerGrid grid = MakePowerGrid(4, m, 1.0, 1.0);
    BarringState state;
    state.optimalLoad = 26;
    state.maxAar = 11.25;
    state.period = 50;
    std::vector<std::uint64_t> perPeriod;
    std::ostringstream counts;
    for (int total : {100, 1000, 10000})
    {
        state.loadCap = 100.0 * state.optimalLoad;
        state.rate = 1.0;
        BarringController ctl(state, m);
        AccessSlot slot(grid, DecodeMode::CollisionLimited);
        const StreamKey key = StreamKey(static_cast<std::uint64_t>(total));
        Engine barringRng = key.Child("barring").MakeEngine();
        Engine selectRng = key.Child("select").MakeEngine();
        Engine shadowRng = key.Child("shadowing").MakeEngine();
        std::vector<GfContender> contenders;
        std::uint64_t before = 0;
        for (int p = 0; p < 20; ++p)
        {
            while (!ctl.PeriodComplete())
            {
                contenders.clear();
                for (int d = 0; d < total; ++d)
                {
                    if (PassesBarring(ctl.Rate(), barringRng))
                    {
                        contenders.push_back(GfContender{static_cast<DeviceId>(d)});
                    }
                }
                const SlotResult& r = slot.RunGf(contenders, selectRng, shadowRng);
                ctl.RecordSlot(r.gfBusy, static_cast<int>(r.gfSuccesses.size()));
            }
            ctl.EndPeriod();
            perPeriod.push_back(ctl.Operations() - before);
            before = ctl.Operations();
        }
        counts << total << ":" << perPeriod.back() << " ";
    }
    const bool constant = std::all_of(perPeriod.begin(), perPeriod.end(), [&](auto x) { return x == perPeriod.front(); });
    v.Require(constant, "operation count varies with device count");
    v.detail << "ops/period by device count " << counts.str() << "(period 50, M=10, 20 periods each)";
}

Region
RegionAt(double x, double y, int id)
{
    return Region{id, {x, y}, 1.0, 1.0, 0.0};
}

// 7. Pool ordering, RPL reconstruction and Q-learning properties.
void
PowerMapProperties(Verdict& v)
{
    ChannelModel model;
    std::vector<Region> regions;
    for (int k = 0; k < 4; ++k)
    {
        regions.push_back(RegionAt(10.0 * (k + 1), 0.0, k));
    }
    AssignMeanGains(regions, model, {0.0, 0.0});
    const PowerMap gradient = BuildPowerMap(regions, MakePowerGrid(3, 2, 1.0, 1.0), model, 1e9);
    std::ostringstream avg;
    for (std::size_t i = 0; i + 1 < gradient.regions.size(); ++i)
    {
        v.Require(gradient.regions[i].meanGain > gradient.regions[i + 1].meanGain, "gradient gains not decreasing");
        v.Require(gradient.pools[i].AverageTpl() <= gradient.pools[i + 1].AverageTpl(), "pool ordering");
    }
    for (const auto& p : gradient.pools)
    {
        avg << Fmt(p.AverageTpl()) << " ";
    }

    double worstRpl = 0.0;
    Engine rng = StreamKey(2026).MakeEngine();
    for (int trial = 0; trial < 500; ++trial)
    {
        const int n = 1 + static_cast<int>(UniformIndex(rng, 6));
        const PowerGrid grid = MakePowerGrid(n, 2, 0.5 + 3 * UniformUnit(rng), 0.1 + UniformUnit(rng));
        std::vector<Region> rs;
        for (int k = 0; k < 5; ++k)
        {
            Region r = RegionAt(0, 0, k);
            r.meanGain = std::pow(10.0, -6 * UniformUnit(rng));
            rs.push_back(r);
        }
        const PowerMap m = BuildPowerMap(rs, grid, model, std::pow(10.0, 6 * UniformUnit(rng)));
        for (std::size_t i = 0; i < rs.size(); ++i)
        {
            for (const auto& e : m.pools[i].entries)
            {
                const double rel = std::abs(e.tpl * rs[i].meanGain - grid.Level(e.level)) / grid.Level(e.level);
                worstRpl = std::max(worstRpl, rel);
            }
        }
    }
    v.Require(worstRpl <= 1e-9, "RPL reconstruction " + Fmt(worstRpl));

    auto area = PartitionArea(RectangleArea{{0, 0}, {100, 100}}, 2, 2);
    AssignMeanGains(area, model, {50, 40});
    const PowerMap start = BuildPowerMap(area, MakePowerGrid(3, 2, 1.0, 1.0), model, 5000, {50, 40});
    int outOfPool = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed)
    {
        QLearningOptions opts;
        opts.seed = seed;
        opts.episodes = 100;
        opts.exploration = 0.3;
        const QLearningResult r = RefinePowerMapQLearning(start, MakeSicHook(start), opts);
        for (std::size_t i = 0; i < start.pools.size(); ++i)
        {
            for (const auto& e : r.map.pools[i].entries)
            {
                const auto* orig = start.pools[i].Find(e.level);
                if (!orig || orig->tpl != e.tpl)
                {
                    ++outOfPool;
                }
            }
        }
    }
    v.Require(outOfPool == 0, "out-of-pool TPLs after refinement");

    double consumption = 0.0;
    SimHook rising = [&](std::span<const AgentAction> actions) {
        consumption += 1.0;
        return StepFeedback{std::vector<double>(actions.size(), 2.0), consumption};
    };
    QLearningOptions opts;
    opts.exploration = 0.5;
    std::vector<Region> tr{RegionAt(0, 0, 0), RegionAt(5, 5, 1)};
    tr[0].meanGain = 1.0;
    tr[1].meanGain = 0.5;
    const PowerMap tiny = BuildPowerMap(tr, MakePowerGrid(3, 2, 1.0, 1.0), model, 100);
    const QLearningResult fixed = RefinePowerMapQLearning(tiny, rising, opts);
    bool allZero = true;
    for (const auto& table : fixed.qTables)
    {
        allZero = allZero && std::all_of(table.begin(), table.end(), [](double q) { return q == 0.0; });
    }
    v.Require(allZero && fixed.converged, "zero-reward fixed point");

    v.detail << "gradient average TPLs " << avg.str() << "(non-decreasing as gain falls); worst RPL rel err="
             << Fmt(worstRpl, 3) << " over 500 random maps; out-of-pool TPLs=" << outOfPool
             << " over 10 seeds; trivial example Q all zero=" << (allZero ? "yes" : "no") << ", converged after "
             << fixed.episodesRun << " episode(s)";
}

int
RunCli(const std::string& args)
{
    const std::string cmd = std::string(MTNOMA_CLI_PATH) + " " + args + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 8. simulate and sweep outputs do not depend on the worker count.
void
Determinism(Verdict& v)
{
    const auto dir = std::filesystem::temp_directory_path() / "mtnoma-acceptance";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);

    RunConfig semi = DefaultCompareConfig();
    semi.traffic.devices = 30;
    semi.slots = 3000;
    semi.decodeMode = DecodeMode::Sinr;
    semi.powerMap.generate.channel.shadowingSigmaDb = 2.0;
    RunConfig barred = DefaultBarringConfig();
    barred.traffic.devices = 120;
    barred.slots = 3000;
    barred.barring.enabled = true;
    const std::string semiPath = (dir / "semi.json").string();
    const std::string barredPath = (dir / "barred.json").string();
    WriteText(semiPath, DumpJson(ToJson(semi)));
    WriteText(barredPath, DumpJson(ToJson(barred)));

    struct Case
    {
        std::string name;
        std::string args;
    };
    const std::vector<Case> cases{
        {"simulate-semi-slots", "simulate --config " + semiPath + " --table slots"},
        {"simulate-semi-json", "simulate --config " + semiPath + " --format json"},
        {"simulate-barring-periods", "simulate --config " + barredPath + " --table periods"},
        {"sweep-semi", "sweep --config " + semiPath + " --values 5:40:7 -r 2 --set slots=1000"},
        {"sweep-barring-json", "sweep --config " + barredPath + " --values 50,100,150 -r 2 --format json --set slots=2500"},
    };
    int identical = 0;
    for (const auto& c : cases)
    {
        std::string outputs[2];
        for (int k = 0; k < 2; ++k)
        {
            const int workers = k == 0 ? 1 : 8;
            const std::string out = (dir / (c.name + "-" + std::to_string(workers) + ".out")).string();
            const int rc = RunCli(c.args + " --seed 17 --workers " + std::to_string(workers) + " --output " + out);
            v.Require(rc == 0, c.name + " exited with " + std::to_string(rc));
            outputs[k] = rc == 0 ? ReadText(out) : std::string();
        }
        const bool same = !outputs[0].empty() && outputs[0] == outputs[1];
        v.Require(same, c.name + " differs between 1 and 8 workers");
        identical += same ? 1 : 0;
    }
    v.detail << identical << "/" << cases.size() << " CLI invocations byte-identical across --workers 1 and 8";
    std::filesystem::remove_all(dir);
}

} // namespace

int
main(int argc, char** argv)
{
    int only = 0;
    for (int i = 1; i < argc; ++i)
    {
        const std::string arg = argv[i];
        if (arg.rfind("--only=", 0) == 0)
        {
            only = std::atoi(arg.c_str() + 7);
        }
    }
    struct Criterion
    {
        int id;
        const char* name;
        void (*run)(Verdict&);
    };
    const Criterion criteria[] = {
        {1, "oracle-equivalence", OracleEquivalence},
        {2, "decode-example", DecodeExample},
        {3, "noma-dominance", NomaDominance},
        {4, "scheme-ordering", SchemeOrdering},
        {5, "barring-stabilization", BarringStabilization},
        {6, "controller-complexity", ControllerComplexity},
        {7, "power-map-properties", PowerMapProperties},
        {8, "determinism", Determinism},
    };
    for (const auto& c : criteria)
    {
        if (only != 0 && only != c.id)
        {
            continue;
        }
        Verdict v;
        const auto t0 = std::chrono::steady_clock::now();
        try
        {
            c.run(v);
        }
        catch (const std::exception& e)
        {
            v.Require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        Report(c.id, c.name, v, secs);
    }
    std::printf("%d criteria failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
