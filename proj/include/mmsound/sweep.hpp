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

#ifndef MMSOUND_SWEEP_HPP
#define MMSOUND_SWEEP_HPP

// Timed beam-switching schedule of one MIMO snapshot.
//
// All slot boundaries live on the 10 MHz reference-clock grid (100 ns ticks) counted from a single
// PPS-triggered counter start, so one snapshot never retriggers the digitizer.
// Ordering: repetition (outer) -> TX beam -> RX beam (inner). Each repetition is a complete sweep,
// so the 10 repetitions of one pair are spread over the full snapshot.

#include "beams.hpp"
#include "common.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace mmsound
{
    inline constexpr double min_beam_switch_time = 2e-6; // seconds

    struct TriggerModel
    {
        double ref_clock = 10e6;   // Hz
        double pps_offset_tx = 0.0; // seconds, PPS alignment error to UTC
        double pps_offset_rx = 0.0;
        std::int64_t counter_start = 0; // clock edges after the PPS

        bool operator==(const TriggerModel &) const = default;

        double tick() const { return 1.0 / ref_clock; }

        // Converts a duration to an integral number of clock edges; rejects off-grid values
        std::int64_t to_ticks(double seconds, const char *what) const
        {
            const double t = seconds * ref_clock;
            const double r = std::round(t);
            if (!std::isfinite(t) || std::abs(t - r) > 1e-6 + 1e-12 * std::abs(r))
                throw InvalidArgument(std::string(what) + " is not a multiple of the reference clock period");
            return static_cast<std::int64_t>(r);
        }

        double to_seconds(std::int64_t ticks) const { return static_cast<double>(ticks) / ref_clock; }
    };

    struct AnchorPolicy
    {
        enum class Kind
        {
            Natural,     // the reference pair's own occurrences in each repetition (no extra time)
            Interleaved, // an extra reference-pair slot after every `period` sweep slots
            None
        };
        Kind kind = Kind::Natural;
        std::size_t period = 50;
        int tx_azimuth_index = 9; // reference pair: both beams at 0 degrees
        int rx_azimuth_index = 9;

        bool operator==(const AnchorPolicy &) const = default;
    };

    inline const char *to_string(AnchorPolicy::Kind k)
    {
        switch (k)
        {
        case AnchorPolicy::Kind::Natural:
            return "natural";
        case AnchorPolicy::Kind::Interleaved:
            return "interleaved";
        default:
            return "none";
        }
    }

    struct Slot
    {
        std::size_t index = 0;
        BeamId tx, rx;
        std::size_t repetition = 0;
        std::int64_t start_tick = 0; // relative to counter start
        double start_time = 0.0;     // seconds
        bool anchor = false;
        bool inserted = false;       // extra anchor slot, not part of the repetition grid

        bool operator==(const Slot &) const = default;
    };

    struct SweepSchedule
    {
        std::vector<BeamId> tx_beams, rx_beams;
        std::size_t repetitions = 1;
        double waveform_duration = 2e-6;
        double guard_time = 2e-6;
        std::int64_t waveform_ticks = 20;
        std::int64_t guard_ticks = 20;
        AnchorPolicy anchor_policy{};
        TriggerModel trigger{};
        std::vector<Slot> slots;
        std::vector<std::size_t> anchor_slots;

        bool operator==(const SweepSchedule &) const = default;

        std::int64_t slot_period_ticks() const { return waveform_ticks + guard_ticks; }
        double slot_period() const { return trigger.to_seconds(slot_period_ticks()); }
        std::int64_t total_ticks() const { return static_cast<std::int64_t>(slots.size()) * slot_period_ticks(); }
        double total_duration() const { return trigger.to_seconds(total_ticks()); }

        // Start time of slot `index` recomputed from the slot period
        double slot_start(std::size_t index) const
        {
            return trigger.to_seconds(static_cast<std::int64_t>(index) * slot_period_ticks());
        }

        std::size_t pair_index(const BeamId &tx, const BeamId &rx) const;
    };

    inline std::size_t SweepSchedule::pair_index(const BeamId &tx, const BeamId &rx) const
    {
        std::size_t ti = tx_beams.size(), ri = rx_beams.size();
        for (std::size_t i = 0; i < tx_beams.size(); ++i)
            if (tx_beams[i] == tx)
                ti = i;
        for (std::size_t i = 0; i < rx_beams.size(); ++i)
            if (rx_beams[i] == rx)
                ri = i;
        if (ti == tx_beams.size() || ri == rx_beams.size())
            throw InvalidArgument("SweepSchedule: beam pair not part of the schedule");
        return ti * rx_beams.size() + ri;
    }

    inline SweepSchedule build_schedule(const std::vector<BeamId> &tx_beams, const std::vector<BeamId> &rx_beams,
                                        std::size_t repetitions, double waveform_duration, double guard_time,
                                        const AnchorPolicy &anchors = {}, const TriggerModel &trigger = {},
                                        bool allow_below_switch_floor = false)
    {
        if (tx_beams.empty() || rx_beams.empty())
            throw InvalidArgument("build_schedule: beam lists must be non-empty");
        if (repetitions == 0)
            throw InvalidArgument("build_schedule: repetitions must be at least 1");
        if (!(waveform_duration > 0.0))
            throw InvalidArgument("build_schedule: waveform duration must be positive");
        if (!(guard_time >= 0.0))
            throw InvalidArgument("build_schedule: guard time must be non-negative");
        if (guard_time < min_beam_switch_time * (1.0 - 1e-9) && !allow_below_switch_floor)
            throw HardwareLimitWarning("build_schedule: guard time below the 2 us beam-switching floor");
        if (anchors.kind == AnchorPolicy::Kind::Interleaved && anchors.period == 0)
            throw InvalidArgument("build_schedule: anchor period must be positive");

        SweepSchedule s;
        s.tx_beams = tx_beams;
        s.rx_beams = rx_beams;
        s.repetitions = repetitions;
        s.waveform_duration = waveform_duration;
        s.guard_time = guard_time;
        s.anchor_policy = anchors;
        s.trigger = trigger;
        s.waveform_ticks = trigger.to_ticks(waveform_duration, "waveform duration");
        s.guard_ticks = trigger.to_ticks(guard_time, "guard time");

        const bool has_ref_tx = std::any_of(tx_beams.begin(), tx_beams.end(),
                                            [&](const BeamId &b) { return b.azimuth_index == anchors.tx_azimuth_index; });
        const bool has_ref_rx = std::any_of(rx_beams.begin(), rx_beams.end(),
                                            [&](const BeamId &b) { return b.azimuth_index == anchors.rx_azimuth_index; });
        const BeamId ref_tx = has_ref_tx ? *std::find_if(tx_beams.begin(), tx_beams.end(), [&](const BeamId &b) {
            return b.azimuth_index == anchors.tx_azimuth_index;
        })
                                         : tx_beams.front();
        const BeamId ref_rx = has_ref_rx ? *std::find_if(rx_beams.begin(), rx_beams.end(), [&](const BeamId &b) {
            return b.azimuth_index == anchors.rx_azimuth_index;
        })
                                         : rx_beams.front();

        auto push = [&](const BeamId &tx, const BeamId &rx, std::size_t rep, bool anchor, bool inserted) {
            Slot sl;
            sl.index = s.slots.size();
            sl.tx = tx;
            sl.rx = rx;
            sl.repetition = rep;
            sl.start_tick = static_cast<std::int64_t>(sl.index) * s.slot_period_ticks();
            sl.start_time = trigger.to_seconds(sl.start_tick);
            sl.anchor = anchor;
            sl.inserted = inserted;
            if (anchor)
                s.anchor_slots.push_back(sl.index);
            s.slots.push_back(sl);
        };

        const bool interleaved = anchors.kind == AnchorPolicy::Kind::Interleaved;
        if (interleaved)
            push(ref_tx, ref_rx, 0, true, true); // first anchor at t = 0

        std::size_t sweep_count = 0;
        for (std::size_t rep = 0; rep < repetitions; ++rep)
            for (const auto &tx : tx_beams)
                for (const auto &rx : rx_beams)
                {
                    const bool natural = anchors.kind == AnchorPolicy::Kind::Natural && tx == ref_tx && rx == ref_rx;
                    push(tx, rx, rep, natural, false);
                    if (interleaved && ++sweep_count % anchors.period == 0)
                        push(ref_tx, ref_rx, rep, true, true);
                }
        return s;
    }

    // Azimuth-only default: 19 x 19 pairs at 0 degrees elevation, 10 repetitions, 2 us + 2 us slots
    inline SweepSchedule default_schedule(std::size_t repetitions = 10, const AnchorPolicy &anchors = {})
    {
        return build_schedule(default_codebook(Side::Tx).azimuth_sweep(), default_codebook(Side::Rx).azimuth_sweep(),
                              repetitions, 2e-6, 2e-6, anchors);
    }

    // PPS/counter-quantized start ticks of `count` snapshots repeated every `repeat_interval`
    inline std::vector<std::int64_t> snapshot_cadence(const SweepSchedule &schedule, double repeat_interval,
                                                      std::size_t count)
    {
        const std::int64_t interval = schedule.trigger.to_ticks(repeat_interval, "snapshot interval");
        if (interval < schedule.total_ticks())
            throw InvalidArgument("snapshot_cadence: repeat interval is shorter than the snapshot duration");
        std::vector<std::int64_t> out(count);
        for (std::size_t i = 0; i < count; ++i)
            out[i] = schedule.trigger.counter_start + static_cast<std::int64_t>(i) * interval;
        return out;
    }

    inline std::string describe(const SweepSchedule &s, std::size_t max_slots = 20)
    {
        std::ostringstream os;
        os << "tx_beams = " << s.tx_beams.size() << "\n";
        os << "rx_beams = " << s.rx_beams.size() << "\n";
        os << "repetitions = " << s.repetitions << "\n";
        os << "waveform_duration_us = " << s.waveform_duration * 1e6 << "\n";
        os << "guard_time_us = " << s.guard_time * 1e6 << "\n";
        os << "slot_period_us = " << s.slot_period() * 1e6 << "\n";
        os << "slots = " << s.slots.size() << "\n";
        os << "anchor_policy = " << to_string(s.anchor_policy.kind) << "\n";
        os << "anchor_slots = " << s.anchor_slots.size() << "\n";
        os << "ref_clock_hz = " << s.trigger.ref_clock << "\n";
        os << "total_ticks = " << s.total_ticks() << "\n";
        os.precision(6);
        os << std::fixed << "total_duration_ms = " << s.total_duration() * 1e3 << "\n";
        os << "order = repetition > tx > rx\n";
        os << "# index  start_us  tx_az  rx_az  rep  anchor\n";
        for (std::size_t i = 0; i < s.slots.size() && i < max_slots; ++i)
        {
            const auto &sl = s.slots[i];
            os.precision(1);
            os << sl.index << "  " << sl.start_time * 1e6 << "  " << sl.tx.azimuth_deg() << "  " << sl.rx.azimuth_deg()
               << "  " << sl.repetition << "  " << (sl.anchor ? (sl.inserted ? "inserted" : "yes") : "no") << "\n";
        }
        if (s.slots.size() > max_slots)
            os << "# ... " << (s.slots.size() - max_slots) << " more slots\n";
        return os.str();
    }
}

#endif
