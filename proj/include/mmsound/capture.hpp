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

#ifndef MMSOUND_CAPTURE_HPP
#define MMSOUND_CAPTURE_HPP

// Sounder captures: one complex tone response per sweep slot and snapshot, plus the metadata needed
// to process them. simulate_capture produces measurement captures of a synthetic channel, and
// simulate_calibration produces the back-to-back (cabled, attenuated) reference captures.

#include "beams.hpp"
#include "channel.hpp"
#include "common.hpp"
#include "impairments.hpp"
#include "sweep.hpp"
#include "waveform.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace mmsound
{
    enum class CaptureKind
    {
        Measurement,
        Calibration
    };

    enum class CalibrationMode
    {
        Shared,      // one boresight-to-boresight record reused for every beam pair
        PerBeamPair  // one record per steered pair
    };

    inline const char *to_string(CaptureKind k) { return k == CaptureKind::Measurement ? "measurement" : "calibration"; }
    inline const char *to_string(CalibrationMode m) { return m == CalibrationMode::Shared ? "shared" : "per_beam_pair"; }

    struct GeoPosition
    {
        double latitude = 0.0;
        double longitude = 0.0;
        bool operator==(const GeoPosition &) const = default;
    };

    struct CaptureMetadata
    {
        CaptureKind kind = CaptureKind::Measurement;
        TonePlan plan{};
        std::vector<double> waveform_phases;
        double carrier_freq = default_carrier;
        BeamCodebook tx_codebook = default_codebook(Side::Tx);
        BeamCodebook rx_codebook = default_codebook(Side::Rx);
        SweepSchedule schedule{};
        std::vector<std::int64_t> snapshot_ticks{0}; // counter ticks of each snapshot start
        ClockModel clock{};
        RxFrontEnd front_end{};
        std::size_t averaging = 1;
        double rx_orientation = 0.0; // degrees
        double tx_power = 37.0;      // dBm, total conducted power into the TX array
        RippleConfig ripple{};
        std::string channel_label;
        std::optional<GeoPosition> geo;
        std::uint64_t seed = 0;
        CalibrationMode calibration_mode = CalibrationMode::Shared;
        double calibration_attenuation = 0.0; // dB, only for calibration captures
        nlohmann::json extra = nlohmann::json::object(); // keys not understood by this version

        bool operator==(const CaptureMetadata &) const = default;

        double tone_power_dbm() const { return tx_power - 10.0 * std::log10(static_cast<double>(plan.num_tones)); }
    };

    inline constexpr std::uint16_t record_flag_clipped = 0x0001;
    inline constexpr std::uint16_t record_flag_anchor = 0x0002;

    struct CaptureRecord
    {
        std::uint32_t slot_index = 0; // running index over snapshots x slots
        double agc_gain = 0.0;        // dB, multiple of 0.01
        std::uint16_t flags = 0;
        std::vector<cplx> h;

        bool clipped() const { return flags & record_flag_clipped; }
        bool operator==(const CaptureRecord &) const = default;
    };

    struct CaptureSet
    {
        CaptureMetadata metadata;
        std::vector<CaptureRecord> records;

        bool operator==(const CaptureSet &) const = default;

        std::size_t slots_per_snapshot() const { return metadata.schedule.slots.size(); }

        const Slot &slot_of(const CaptureRecord &r) const
        {
            const std::size_t n = slots_per_snapshot();
            if (n == 0 || r.slot_index / n >= metadata.snapshot_ticks.size())
                throw DataIntegrityError("CaptureSet: record slot index outside the schedule");
            return metadata.schedule.slots[r.slot_index % n];
        }

        std::size_t snapshot_of(const CaptureRecord &r) const { return r.slot_index / slots_per_snapshot(); }

        // Absolute time of a record, seconds since the counter start
        double record_time(const CaptureRecord &r) const
        {
            const auto &tr = metadata.schedule.trigger;
            return tr.to_seconds(metadata.snapshot_ticks[snapshot_of(r)] + slot_of(r).start_tick);
        }

        // Tone response with the AGC gain removed, sqrt(mW) at the RX input
        std::vector<cplx> input_referred(const CaptureRecord &r) const
        {
            const double g = db_to_amplitude(-r.agc_gain);
            std::vector<cplx> out(r.h.size());
            for (std::size_t k = 0; k < out.size(); ++k)
                out[k] = r.h[k] * g;
            return out;
        }
    };

    namespace detail
    {
        // Runs f(i) for i in [0, n) on up to `threads` workers; each index is independent
        template <typename F>
        void parallel_for(std::size_t n, unsigned threads, F &&f)
        {
            if (threads == 0)
                threads = std::max(1u, std::thread::hardware_concurrency());
            threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
            if (threads <= 1)
            {
                for (std::size_t i = 0; i < n; ++i)
                    f(i);
                return;
            }
            std::vector<std::thread> pool;
            std::vector<std::exception_ptr> errors(threads);
            for (unsigned w = 0; w < threads; ++w)
                pool.emplace_back([&, w] {
                    try
                    {
                        for (std::size_t i = w; i < n; i += threads)
                            f(i);
                    }
                    catch (...)
                    {
                        errors[w] = std::current_exception();
                    }
                });
            for (auto &t : pool)
                t.join();
            for (auto &e : errors)
                if (e)
                    std::rethrow_exception(e);
        }
    }

    struct SimulationOptions
    {
        double rx_orientation = 0.0; // degrees
        double tx_power = 37.0;      // dBm conducted (57 dBm EIRP with 20 dBi)
        RippleConfig ripple{};
        std::vector<double> waveform_phases; // empty = optimized for the plan with `seed`
        std::vector<std::int64_t> snapshot_ticks{0};
        std::size_t averaging = 1;
        std::optional<GeoPosition> geo;
        std::string channel_label;
        unsigned threads = 1; // 0 = hardware concurrency
    };

    inline std::vector<double> default_waveform_phases(const TonePlan &plan, std::uint64_t seed)
    {
        PhaseOptimizerOptions o;
        o.seed = seed;
        return optimize_phases(plan, o).waveform.phases;
    }

    inline std::vector<cplx> waveform_phasors(std::span<const double> phases)
    {
        std::vector<cplx> out(phases.size());
        for (std::size_t k = 0; k < phases.size(); ++k)
            out[k] = std::polar(1.0, phases[k]);
        return out;
    }

    // Beam-switched capture of `channel`. The record of running slot i is seeded by (seed, i) only,
    // so results do not depend on the thread count.
    inline CaptureSet simulate_capture(const ChannelRealization &channel, const SweepSchedule &schedule,
                                       const BeamCodebook &tx_codebook, const BeamCodebook &rx_codebook,
                                       const ClockModel &clock, const RxFrontEnd &front_end, const TonePlan &plan,
                                       const SimulationOptions &opt, std::uint64_t seed)
    {
        if (schedule.slots.empty())
            throw InvalidArgument("simulate_capture: empty schedule");
        if (opt.snapshot_ticks.empty())
            throw InvalidArgument("simulate_capture: at least one snapshot is required");
        if (!opt.waveform_phases.empty() && opt.waveform_phases.size() != plan.num_tones)
            throw InvalidArgument("simulate_capture: waveform phase vector does not match the tone plan");
        for (const auto &sl : schedule.slots)
            if (!tx_codebook.contains(sl.tx) || !rx_codebook.contains(sl.rx))
                throw InvalidArgument("simulate_capture: schedule references a beam outside the codebook");

        CaptureSet cs;
        auto &md = cs.metadata;
        md.kind = CaptureKind::Measurement;
        md.plan = plan;
        md.waveform_phases = opt.waveform_phases.empty() ? default_waveform_phases(plan, seed) : opt.waveform_phases;
        md.carrier_freq = channel.carrier_freq;
        md.tx_codebook = tx_codebook;
        md.rx_codebook = rx_codebook;
        md.schedule = schedule;
        md.snapshot_ticks = opt.snapshot_ticks;
        md.clock = clock;
        md.front_end = front_end;
        md.averaging = opt.averaging;
        md.rx_orientation = opt.rx_orientation;
        md.tx_power = opt.tx_power;
        md.ripple = opt.ripple;
        md.channel_label = opt.channel_label.empty() ? to_string(channel.label) : opt.channel_label;
        md.geo = opt.geo;
        md.seed = seed;

        const auto ripple = hardware_ripple(plan, opt.ripple);
        const auto phasors = waveform_phasors(md.waveform_phases);
        const double tone_amp = std::sqrt(db_to_power(md.tone_power_dbm()));
        // PPS misalignment shifts every delay by the same amount
        ChannelRealization ch = channel;
        const double pps_shift = schedule.trigger.pps_offset_tx - schedule.trigger.pps_offset_rx;
        for (auto &m : ch.mpcs)
            m.delay += pps_shift;

        const std::size_t per_snapshot = schedule.slots.size();
        const std::size_t n = per_snapshot * opt.snapshot_ticks.size();
        if (n > std::numeric_limits<std::uint32_t>::max())
            throw InvalidArgument("simulate_capture: too many records");
        cs.records.resize(n);

        detail::parallel_for(n, opt.threads, [&](std::size_t i) {
            const Slot &sl = schedule.slots[i % per_snapshot];
            const std::int64_t tick = opt.snapshot_ticks[i / per_snapshot] + sl.start_tick;
            const double t = schedule.trigger.to_seconds(tick);
            auto h = beam_pair_response(ch, tx_codebook.pattern(sl.tx), rx_codebook.pattern(sl.rx), opt.rx_orientation,
                                        plan, t);
            for (std::size_t k = 0; k < h.size(); ++k)
                h[k] *= tone_amp * ripple[k];
            FrontEndOptions fo;
            fo.waveform_phasors = phasors;
            fo.lo_phase = clock.mode == ClockMode::Shared && clock.initial_phase == 0.0 ? 0.0 : drift_phase(clock, t);
            auto fe = apply_front_end(h, front_end, plan, opt.averaging, derive_seed(seed, streams::thermal_noise, i), fo);
            auto &r = cs.records[i];
            r.slot_index = static_cast<std::uint32_t>(i);
            r.agc_gain = fe.agc_gain;
            r.flags = static_cast<std::uint16_t>((fe.clipped ? record_flag_clipped : 0) |
                                                 (sl.anchor ? record_flag_anchor : 0));
            r.h = std::move(fe.h);
        });
        return cs;
    }

    struct CalibrationOptions
    {
        CalibrationMode mode = CalibrationMode::Shared;
        double attenuation = 60.0; // dB of the back-to-back attenuator chain
        double tx_power = 37.0;    // dBm
        RippleConfig ripple{};
        std::vector<double> waveform_phases;
        std::size_t averaging = 10;
        unsigned threads = 1;
    };

    // Back-to-back calibration through a known attenuator. Shared mode records the boresight pair once;
    // per-pair mode records every azimuth-sweep pair with both beams pointed at each other, so each
    // record carries the steered beam response relative to the nominal peak gain.
    inline CaptureSet simulate_calibration(const BeamCodebook &tx_codebook, const BeamCodebook &rx_codebook,
                                           const RxFrontEnd &front_end, const TonePlan &plan,
                                           const CalibrationOptions &opt, std::uint64_t seed)
    {
        if (!(opt.attenuation >= 0.0))
            throw InvalidArgument("simulate_calibration: attenuation must be non-negative");
        std::vector<BeamId> tx_beams, rx_beams;
        if (opt.mode == CalibrationMode::Shared)
        {
            tx_beams = {tx_codebook.boresight()};
            rx_beams = {rx_codebook.boresight()};
        }
        else
        {
            tx_beams = tx_codebook.azimuth_sweep();
            rx_beams = rx_codebook.azimuth_sweep();
        }
        AnchorPolicy none;
        none.kind = AnchorPolicy::Kind::None;

        CaptureSet cs;
        auto &md = cs.metadata;
        md.kind = CaptureKind::Calibration;
        md.plan = plan;
        md.waveform_phases = opt.waveform_phases.empty() ? default_waveform_phases(plan, seed) : opt.waveform_phases;
        md.tx_codebook = tx_codebook;
        md.rx_codebook = rx_codebook;
        md.schedule = build_schedule(tx_beams, rx_beams, 1, 2e-6, 2e-6, none);
        md.snapshot_ticks = {0};
        md.clock = ClockModel{};
        md.front_end = front_end;
        md.averaging = opt.averaging;
        md.tx_power = opt.tx_power;
        md.ripple = opt.ripple;
        md.channel_label = "back_to_back";
        md.seed = seed;
        md.calibration_mode = opt.mode;
        md.calibration_attenuation = opt.attenuation;

        const auto ripple = hardware_ripple(plan, opt.ripple);
        const auto phasors = waveform_phasors(md.waveform_phases);
        const double amp = std::sqrt(db_to_power(md.tone_power_dbm() - opt.attenuation));
        const auto &slots = md.schedule.slots;
        cs.records.resize(slots.size());
        detail::parallel_for(slots.size(), opt.threads, [&](std::size_t i) {
            const auto &sl = slots[i];
            const auto tp = tx_codebook.pattern(sl.tx);
            const auto rp = rx_codebook.pattern(sl.rx);
            // steered response relative to the peak gains
            const cplx g = tp.gain(tp.steer_az, tp.steer_el) * rp.gain(rp.steer_az, rp.steer_el) /
                           db_to_amplitude(tp.peak_gain + rp.peak_gain);
            std::vector<cplx> h(plan.num_tones);
            for (std::size_t k = 0; k < h.size(); ++k)
                h[k] = amp * g * ripple[k];
            FrontEndOptions fo;
            fo.waveform_phasors = phasors;
            auto fe = apply_front_end(h, front_end, plan, opt.averaging, derive_seed(seed, streams::thermal_noise, i), fo);
            auto &r = cs.records[i];
            r.slot_index = static_cast<std::uint32_t>(i);
            r.agc_gain = fe.agc_gain;
            r.flags = fe.clipped ? record_flag_clipped : 0;
            r.h = std::move(fe.h);
        });
        return cs;
    }
}

#endif
