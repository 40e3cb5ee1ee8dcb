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

#ifndef MMSOUND_TEST_GENERATORS_HPP
#define MMSOUND_TEST_GENERATORS_HPP

// Random small captures for container property tests. Records hold arbitrary values; only the
// structure (schedule, snapshot and tone counts) is consistent.

#include <mmsound/capture.hpp>

#include <random>

namespace gen
{
    using namespace mmsound;

    inline CaptureSet random_capture(std::mt19937_64 &rng)
    {
        std::uniform_int_distribution<int> small(1, 4);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::bernoulli_distribution coin(0.5);

        CaptureSet cs;
        auto &md = cs.metadata;
        md.plan = make_tone_plan(static_cast<std::size_t>(std::uniform_int_distribution<int>(1, 16)(rng)),
                                 500e3 * small(rng), 50e6);
        if (coin(rng))
        {
            md.waveform_phases.resize(md.plan.num_tones);
            for (auto &p : md.waveform_phases)
                p = pi * u(rng);
        }
        md.kind = coin(rng) ? CaptureKind::Measurement : CaptureKind::Calibration;
        const auto tx = md.tx_codebook.azimuth_sweep(), rx = md.rx_codebook.azimuth_sweep();
        std::vector<BeamId> tb, rb;
        for (int i = small(rng); i > 0; --i)
            tb.push_back(tx[static_cast<std::size_t>(std::uniform_int_distribution<int>(0, 18)(rng))]);
        for (int i = small(rng); i > 0; --i)
            rb.push_back(rx[static_cast<std::size_t>(std::uniform_int_distribution<int>(0, 18)(rng))]);
        AnchorPolicy ap;
        ap.kind = static_cast<AnchorPolicy::Kind>(std::uniform_int_distribution<int>(0, 2)(rng));
        md.schedule = build_schedule(tb, rb, static_cast<std::size_t>(small(rng)), 2e-6, 2e-6 + 1e-7 * small(rng), ap);
        md.snapshot_ticks = {0};
        if (coin(rng))
            md.snapshot_ticks.push_back(md.schedule.total_ticks() * small(rng));
        md.clock = make_clock_model(coin(rng) ? ClockMode::FreeRunning : ClockMode::GpsDisciplined, rng());
        if (coin(rng))
            md.front_end.noise_figure = -std::numeric_limits<double>::infinity();
        if (coin(rng))
            md.front_end.adc_bits.reset();
        md.averaging = static_cast<std::size_t>(small(rng));
        md.rx_orientation = 90.0 * (small(rng) - 1);
        md.tx_power = 37.0 + u(rng);
        md.ripple.seed = rng();
        md.channel_label = coin(rng) ? "LOS" : "street canyon \"B\"";
        if (coin(rng))
            md.geo = GeoPosition{40.0 + u(rng), -74.0 + u(rng)};
        md.seed = rng();
        md.calibration_mode = coin(rng) ? CalibrationMode::Shared : CalibrationMode::PerBeamPair;
        md.calibration_attenuation = 60.0 * (u(rng) + 1.0);
        if (coin(rng))
            md.extra["operator_note"] = {{"text", "rooftop"}, {"n", small(rng)}};

        const std::size_t n = md.schedule.slots.size() * md.snapshot_ticks.size();
        cs.records.resize(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            auto &r = cs.records[i];
            r.slot_index = static_cast<std::uint32_t>(i);
            r.agc_gain = std::uniform_int_distribution<int>(-2000, 8000)(rng) / 100.0;
            r.flags = static_cast<std::uint16_t>(rng() & 0x3);
            r.h.resize(md.plan.num_tones);
            for (auto &v : r.h)
                v = cplx(u(rng) * std::pow(10.0, 8.0 * u(rng)), u(rng) * std::pow(10.0, 8.0 * u(rng)));
        }
        return cs;
    }
}

#endif
