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

#ifndef MMSOUND_CHANNEL_HPP
#define MMSOUND_CHANNEL_HPP

// Synthetic double-directional channel realizations used as ground truth for validating the
// sounder processing chain, and the beam-pair frequency response the sounder observes.
//
// Frequency convention: tone k of a plan maps to the RF frequency
//   f_k = carrier - plan.center_frequency() + plan.tone_frequency(k)
// (for the default plan: carrier - 250 MHz + 50 MHz + k * 500 kHz), so the center tone sits on the carrier.

#include "beams.hpp"
#include "common.hpp"
#include "waveform.hpp"

#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace mmsound
{
    inline constexpr double default_carrier = 27.85e9;

    struct Mpc
    {
        double delay = 0.0;              // seconds
        cplx amplitude{0.0, 0.0};        // linear voltage gain
        double aod_az = 0.0, aod_el = 0.0; // degrees, TX local frame
        double aoa_az = 0.0, aoa_el = 0.0; // degrees, RX global frame (orientation 0 = facing the TX)
        double doppler_phase_rate = 0.0; // rad/s

        bool operator==(const Mpc &) const = default;
    };

    enum class LinkState
    {
        Los,
        Nlos
    };

    inline const char *to_string(LinkState s) { return s == LinkState::Los ? "LOS" : "NLOS"; }

    struct ChannelRealization
    {
        std::vector<Mpc> mpcs;
        double carrier_freq = default_carrier;
        double tx_rx_distance = 0.0; // meters, metadata only
        LinkState label = LinkState::Nlos;

        bool operator==(const ChannelRealization &) const = default;
    };

    inline double rf_tone_frequency(const TonePlan &plan, double carrier, std::size_t k)
    {
        return carrier - plan.center_frequency() + plan.tone_frequency(k);
    }

    // Free-space (Friis) path loss in dB, 20 log10(4 pi d f / c)
    inline double friis_path_loss_db(double distance, double frequency)
    {
        if (!(distance > 0.0))
            throw InvalidArgument("friis_path_loss_db: distance must be positive");
        return 20.0 * std::log10(4.0 * pi * distance * frequency / speed_of_light);
    }

    inline ChannelRealization los_channel(double distance, double carrier = default_carrier)
    {
        if (!(distance > 0.0) || !std::isfinite(distance))
            throw InvalidArgument("los_channel: distance must be positive");
        const double lambda = speed_of_light / carrier;
        Mpc m;
        m.delay = distance / speed_of_light;
        m.amplitude = cplx(lambda / (4.0 * pi * distance), 0.0);
        // TX and RX arrays face each other
        m.aod_az = m.aod_el = m.aoa_az = m.aoa_el = 0.0;
        ChannelRealization ch;
        ch.mpcs.push_back(m);
        ch.carrier_freq = carrier;
        ch.tx_rx_distance = distance;
        ch.label = LinkState::Los;
        return ch;
    }

    // One line of a planted-channel specification
    struct PlantedMpc
    {
        double delay = 0.0;    // seconds
        double gain_db = 0.0;  // power gain, dB
        double aod_az = 0.0;   // degrees
        double aoa_az = 0.0;   // degrees
        double aod_el = 0.0;
        double aoa_el = 0.0;
        std::optional<double> phase; // radians; drawn from the seed when absent
        double doppler_phase_rate = 0.0;

        bool operator==(const PlantedMpc &) const = default;
    };

    inline ChannelRealization planted_nlos_channel(std::span<const PlantedMpc> spec, std::uint64_t seed,
                                                   double delay_window = 2e-6, double carrier = default_carrier)
    {
        if (spec.empty())
            throw InvalidArgument("planted_nlos_channel: empty MPC specification");
        ChannelRealization ch;
        ch.carrier_freq = carrier;
        ch.label = LinkState::Nlos;
        for (std::size_t i = 0; i < spec.size(); ++i)
        {
            const auto &s = spec[i];
            if (!(s.delay >= 0.0) || !(s.delay < delay_window))
                throw InvalidArgument("planted_nlos_channel: MPC " + std::to_string(i) + " delay " +
                                      std::to_string(s.delay * 1e9) + " ns is outside the unambiguous window [0, " +
                                      std::to_string(delay_window * 1e9) + ") ns");
            const double phase = s.phase ? *s.phase : 2.0 * pi * hash_uniform(derive_seed(seed, streams::mpc_phase, i));
            Mpc m;
            m.delay = s.delay;
            m.amplitude = std::polar(db_to_amplitude(s.gain_db), phase);
            m.aod_az = s.aod_az;
            m.aod_el = s.aod_el;
            m.aoa_az = s.aoa_az;
            m.aoa_el = s.aoa_el;
            m.doppler_phase_rate = s.doppler_phase_rate;
            ch.mpcs.push_back(m);
        }
        return ch;
    }

    // Random scatterer scene for recoverability tests. Delays are placed on the delay-bin grid of the
    // plan, separated by at least `min_separation_bins`; angles are uniform in the field of view;
    // gains span exactly `dynamic_range_db` below `strongest_gain_db`.
    struct ScatterOptions
    {
        std::size_t count = 5;
        double strongest_gain_db = -100.0;
        double dynamic_range_db = 30.0;
        std::size_t min_delay_bin = 1;
        std::size_t max_delay_bin = 600;
        std::size_t min_separation_bins = 10;
        double field_of_view = 45.0; // +/- degrees
    };

    inline std::vector<PlantedMpc> random_scatter_spec(const TonePlan &plan, std::uint64_t seed,
                                                       const ScatterOptions &opt = {})
    {
        if (opt.count == 0 || opt.max_delay_bin <= opt.min_delay_bin)
            throw InvalidArgument("random_scatter_spec: invalid options");
        std::mt19937_64 rng(derive_seed(seed, streams::scene));
        std::uniform_int_distribution<std::size_t> bin_dist(opt.min_delay_bin, opt.max_delay_bin);
        std::uniform_real_distribution<double> ang(-opt.field_of_view, opt.field_of_view);
        std::uniform_real_distribution<double> uni(0.0, 1.0);

        std::vector<std::size_t> bins;
        for (int guard = 0; bins.size() < opt.count; ++guard)
        {
            if (guard > 100000)
                throw InvalidArgument("random_scatter_spec: cannot place delays with the requested separation");
            const std::size_t b = bin_dist(rng);
            bool ok = true;
            for (auto o : bins)
                if ((b > o ? b - o : o - b) < opt.min_separation_bins)
                    ok = false;
            if (ok)
                bins.push_back(b);
        }

        std::vector<PlantedMpc> out;
        for (std::size_t i = 0; i < opt.count; ++i)
        {
            PlantedMpc m;
            m.delay = static_cast<double>(bins[i]) * plan.delay_bin();
            if (i == 0)
                m.gain_db = opt.strongest_gain_db;
            else if (i == 1 && opt.count > 1)
                m.gain_db = opt.strongest_gain_db - opt.dynamic_range_db;
            else
                m.gain_db = opt.strongest_gain_db - opt.dynamic_range_db * uni(rng);
            m.aod_az = ang(rng);
            m.aoa_az = ang(rng);
            m.phase = 2.0 * pi * uni(rng);
            out.push_back(m);
        }
        return out;
    }

    // Complex frequency response of one TX/RX beam pair at time t:
    //   H(f_k) = sum_m a_m g_TX(aod) g_RX(aoa - orientation) exp(-j 2 pi f_k tau_m) exp(j w_m t)
    inline std::vector<cplx> beam_pair_response(const ChannelRealization &ch, const BeamPattern &tx_beam,
                                                const BeamPattern &rx_beam, double rx_orientation,
                                                const TonePlan &plan, double t)
    {
        std::vector<cplx> h(plan.num_tones, cplx(0.0, 0.0));
        const double f0 = rf_tone_frequency(plan, ch.carrier_freq, 0);
        for (const auto &m : ch.mpcs)
        {
            const cplx g = m.amplitude * tx_beam.gain(m.aod_az, m.aod_el) *
                           rx_beam.gain(local_azimuth(m.aoa_az, rx_orientation), m.aoa_el) *
                           std::polar(1.0, m.doppler_phase_rate * t);
            if (g == cplx(0.0, 0.0))
                continue;
            // Phase ramp by recurrence, re-anchored every 64 tones to bound rounding growth
            const double base = -2.0 * pi * std::fmod(f0 * m.delay, 1.0);
            const double step = -2.0 * pi * plan.tone_spacing * m.delay;
            const cplx rot = std::polar(1.0, step);
            cplx e;
            for (std::size_t k = 0; k < plan.num_tones; ++k)
            {
                if (k % 64 == 0)
                    e = std::polar(1.0, base + step * static_cast<double>(k));
                h[k] += g * e;
                e *= rot;
            }
        }
        return h;
    }
}

#endif
