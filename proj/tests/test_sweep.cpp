// SPDX-License-Identifier: Apache-2.0
//
// mmsound - simulation and post-processing toolkit for beam-switched mm-wave channel sounders
// Copyright (C) 2026 The mmsound authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <mmsound/sweep.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <map>

using namespace mmsound;

TEST_CASE("full azimuth sweep timing", "[sweep]")
{
    const auto s10 = default_schedule(10);
    CHECK(s10.slots.size() == 3610);
    CHECK(s10.total_ticks() == 144400);
    CHECK(s10.total_duration() == 14.44e-3);
    const auto s1 = default_schedule(1);
    CHECK(s1.slots.size() == 361);
    CHECK(s1.total_ticks() == 14440);
    CHECK(s1.total_duration() == 1.444e-3);

    const auto tx = default_codebook(Side::Tx).azimuth_sweep();
    const auto rx = default_codebook(Side::Rx).azimuth_sweep();
    const auto unit = build_schedule({tx[9]}, {rx[9]}, 1, 2e-6, 2e-6);
    REQUIRE(unit.slots.size() == 1);
    CHECK(unit.slots[0].start_time == 0.0);
    CHECK(unit.total_duration() == 4e-6);
}

TEST_CASE("slots are ordered, non-overlapping and on the 100 ns grid", "[sweep][property]")
{
    AnchorPolicy inter;
    inter.kind = AnchorPolicy::Kind::Interleaved;
    for (const auto &s : {default_schedule(3), default_schedule(2, inter)})
    {
        for (std::size_t i = 0; i < s.slots.size(); ++i)
        {
            const auto &sl = s.slots[i];
            CHECK(sl.index == i);
            CHECK(sl.start_tick == static_cast<std::int64_t>(i) * 40);
            CHECK(sl.start_time == s.slot_start(i));
            const double ticks = sl.start_time / 1e-7;
            CHECK(std::abs(ticks - std::round(ticks)) < 1e-6);
            if (i > 0)
                CHECK(sl.start_tick - s.slots[i - 1].start_tick == s.slot_period_ticks());
        }
        CHECK(s.slot_period_ticks() == s.waveform_ticks + s.guard_ticks);
    }
}

TEST_CASE("every pair appears once per repetition, RX innermost", "[sweep][property]")
{
    for (auto kind : {AnchorPolicy::Kind::Natural, AnchorPolicy::Kind::Interleaved, AnchorPolicy::Kind::None})
    {
        AnchorPolicy a;
        a.kind = kind;
        const auto s = default_schedule(4, a);
        std::map<std::pair<int, int>, int> count;
        for (const auto &sl : s.slots)
            if (!sl.inserted)
                ++count[{sl.tx.azimuth_index, sl.rx.azimuth_index}];
        CHECK(count.size() == 361);
        for (const auto &[k, v] : count)
            CHECK(v == 4);

        std::vector<const Slot *> grid;
        for (const auto &sl : s.slots)
            if (!sl.inserted)
                grid.push_back(&sl);
        for (std::size_t i = 0; i < grid.size(); ++i)
        {
            CHECK(grid[i]->repetition == i / 361);
            CHECK(grid[i]->tx.azimuth_index == static_cast<int>((i / 19) % 19));
            CHECK(grid[i]->rx.azimuth_index == static_cast<int>(i % 19));
        }
    }
}

TEST_CASE("anchor policies", "[sweep]")
{
    const auto natural = default_schedule(10);
    REQUIRE(natural.anchor_slots.size() == 10);
    for (auto i : natural.anchor_slots)
    {
        CHECK(natural.slots[i].tx.azimuth_index == 9);
        CHECK(natural.slots[i].rx.azimuth_index == 9);
        CHECK(natural.slots[i].anchor);
        CHECK_FALSE(natural.slots[i].inserted);
    }

    AnchorPolicy inter;
    inter.kind = AnchorPolicy::Kind::Interleaved;
    inter.period = 50;
    const auto s = default_schedule(1, inter);
    CHECK(s.slots.size() == 361 + 1 + 361 / 50);
    CHECK(s.anchor_slots.front() == 0);
    for (std::size_t j = 1; j < s.anchor_slots.size(); ++j)
        CHECK(s.anchor_slots[j] - s.anchor_slots[j - 1] == 51);

    AnchorPolicy none;
    none.kind = AnchorPolicy::Kind::None;
    CHECK(default_schedule(2, none).anchor_slots.empty());
}

TEST_CASE("schedule construction errors", "[sweep]")
{
    const auto tx = default_codebook(Side::Tx).azimuth_sweep();
    const auto rx = default_codebook(Side::Rx).azimuth_sweep();
    CHECK_THROWS_AS(build_schedule({}, rx, 1, 2e-6, 2e-6), InvalidArgument);
    CHECK_THROWS_AS(build_schedule(tx, rx, 0, 2e-6, 2e-6), InvalidArgument);
    CHECK_THROWS_AS(build_schedule(tx, rx, 1, 0.0, 2e-6), InvalidArgument);
    CHECK_THROWS_AS(build_schedule(tx, rx, 1, 2e-6, 1e-6), HardwareLimitWarning);
    CHECK_NOTHROW(build_schedule(tx, rx, 1, 2e-6, 1e-6, {}, {}, true));
    CHECK_THROWS_AS(build_schedule(tx, rx, 1, 2.05e-6, 2e-6), InvalidArgument);
}

TEST_CASE("snapshot cadence", "[sweep]")
{
    const auto s = default_schedule(10);
    const auto t = snapshot_cadence(s, 0.1, 4);
    REQUIRE(t.size() == 4);
    for (std::size_t i = 0; i < t.size(); ++i)
        CHECK(t[i] == static_cast<std::int64_t>(i) * 1000000);
    const auto b2b = snapshot_cadence(s, 14.44e-3, 3);
    CHECK(b2b[1] - b2b[0] == s.total_ticks());
    CHECK_THROWS_AS(snapshot_cadence(s, 10e-3, 2), InvalidArgument);
    CHECK_THROWS_AS(snapshot_cadence(s, 0.10000005, 2), InvalidArgument);
}

TEST_CASE("pair index and description", "[sweep]")
{
    const auto s = default_schedule(1);
    CHECK(s.pair_index(s.tx_beams[3], s.rx_beams[5]) == 3 * 19 + 5);
    CHECK_THROWS_AS(s.pair_index(BeamId{3, 0, Side::Tx}, s.rx_beams[0]), InvalidArgument);
    const auto text = describe(s, 2);
    CHECK(text.find("total_duration_ms = 1.444000") != std::string::npos);
    CHECK(text.find("slots = 361") != std::string::npos);
}
