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

#include "oracles.hpp"

#include <mmsound/capture.hpp>
#include <mmsound/impairments.hpp>

#include <catch2/catch_amalgamated.hpp>

using namespace mmsound;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace
{
    constexpr double deg = pi / 180.0;

    // Flat comb of `tone_dbm` per tone
    std::vector<cplx> flat_tones(const TonePlan &plan, double tone_dbm)
    {
        return std::vector<cplx>(plan.num_tones, cplx(std::sqrt(db_to_power(tone_dbm)), 0.0));
    }

    double mean_error_power(const std::vector<cplx> &a, const std::vector<cplx> &b)
    {
        double s = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k)
            s += std::norm(a[k] - b[k]);
        return s / static_cast<double>(a.size());
    }

    const std::vector<double> &test_phases()
    {
        static const auto ph = default_waveform_phases(default_tone_plan(), 1);
        return ph;
    }
}

TEST_CASE("clock models", "[impairments][clock]")
{
    const auto shared = make_clock_model(ClockMode::Shared, 3);
    CHECK(shared.drift_rate == 0.0);
    CHECK(shared.drift_noise_rms == 0.0);
    for (double t : {0.0, 1e-3, 0.5})
        CHECK(drift_phase(shared, t) == shared.initial_phase);

    const auto free = make_clock_model(ClockMode::FreeRunning, 3);
    CHECK_THAT(free.drift_rate, WithinRel(4.0 * deg / 1.444e-3, 1e-12));
    CHECK_THAT(free.drift_rate, WithinAbs(48.3, 0.05));
    CHECK_THAT((drift_phase(free, 1.444e-3) - free.initial_phase) / deg, WithinAbs(4.0, 3 * 0.2));
    CHECK_THAT((drift_phase(free, 14.44e-3) - free.initial_phase) / deg, WithinAbs(40.0, 3 * 0.2));
    CHECK_THROWS_AS(drift_phase(free, -1e-9), InvalidArgument);

    for (std::uint64_t seed = 0; seed < 50; ++seed)
    {
        const auto gps = make_clock_model(ClockMode::GpsDisciplined, seed);
        CHECK(gps.drift_rate >= 0.0);
        CHECK(gps.drift_rate <= free_running_drift_rate);
    }
    CHECK(make_clock_model(ClockMode::FreeRunning, 3) == free);
    CHECK(make_clock_model(ClockMode::FreeRunning, 4).initial_phase != free.initial_phase);
}

TEST_CASE("drift differentials follow the linear trend within the noise bound", "[impairments][clock][property]")
{
    const double dt = 1.444e-3;
    std::size_t inside = 0;
    double ss = 0.0;
    const std::size_t n = 400;
    for (std::uint64_t seed = 0; seed < n; ++seed)
    {
        const auto c = make_clock_model(ClockMode::FreeRunning, seed);
        const double t0 = 4e-6 * static_cast<double>(seed % 97);
        const double r = drift_phase(c, t0 + dt) - drift_phase(c, t0) - c.drift_rate * dt;
        ss += r * r;
        // the difference of two independent residuals has sqrt(2) times the per-sample rms
        if (std::abs(r) <= 3.0 * std::sqrt(2.0) * c.drift_noise_rms)
            ++inside;
    }
    CHECK(static_cast<double>(inside) / n >= 0.985);
    CHECK_THAT(std::sqrt(ss / n), WithinRel(std::sqrt(2.0) * default_drift_noise_rms, 0.12));
}

TEST_CASE("hardware ripple stays within its limits and is seeded", "[impairments][ripple]")
{
    const auto plan = default_tone_plan();
    RippleConfig cfg;
    cfg.seed = 9;
    const auto r = hardware_ripple(plan, cfg);
    double max_db = 0.0, max_ph = 0.0;
    for (const auto &v : r)
    {
        max_db = std::max(max_db, std::abs(power_to_db(std::norm(v))));
        max_ph = std::max(max_ph, std::abs(std::arg(v)));
    }
    CHECK_THAT(max_db, WithinAbs(1.0, 1e-9));
    CHECK(max_ph <= 5.0 * deg + 1e-12);
    CHECK(hardware_ripple(plan, cfg) == r);
    cfg.seed = 10;
    CHECK(hardware_ripple(plan, cfg) != r);
    cfg.enabled = false;
    for (const auto &v : hardware_ripple(plan, cfg))
        CHECK(v == cplx(1.0, 0.0));
}

TEST_CASE("ideal front end is the identity", "[impairments][front_end]")
{
    const auto plan = default_tone_plan();
    std::vector<cplx> h(plan.num_tones);
    for (std::size_t k = 0; k < h.size(); ++k)
        h[k] = std::polar(1e-5 * (1.0 + 0.1 * static_cast<double>(k % 7)), 0.01 * static_cast<double>(k));
    const auto out = apply_front_end(h, ideal_front_end(), plan, 1, 1);
    CHECK(out.h == h);
    CHECK(out.agc_gain == 0.0);
    CHECK_FALSE(out.clipped);
    CHECK_THROWS_AS(apply_front_end(h, ideal_front_end(), plan, 0, 1), InvalidArgument);
    CHECK_THROWS_AS(apply_front_end(std::span(h).first(10), ideal_front_end(), plan, 1, 1), InvalidArgument);
}

TEST_CASE("thermal noise power per tone is kT * spacing * NF", "[impairments][front_end][oracle]")
{
    const auto plan = default_tone_plan();
    RxFrontEnd fe = ideal_front_end();
    fe.noise_figure = 5.0;
    // -174 dBm/Hz + 10 log10(500 kHz) + 5 dB
    const double expect_mw = std::pow(10.0, (-174.0 + 10.0 * std::log10(500e3) + 5.0) / 10.0);
    CHECK_THAT(tone_noise_power_mw(plan, fe), WithinRel(expect_mw, 1e-12));
    // over the 400 MHz band the floor is -83 dBm
    CHECK_THAT(power_to_db(tone_noise_power_mw(plan, fe) * 800.0), WithinAbs(-83.0, 0.05));

    const std::vector<cplx> zero(plan.num_tones, cplx(0.0, 0.0));
    double acc = 0.0;
    const int draws = 50;
    for (int s = 0; s < draws; ++s)
    {
        const auto out = apply_front_end(zero, fe, plan, 1, static_cast<std::uint64_t>(s));
        for (const auto &v : out.h)
            acc += std::norm(v);
    }
    CHECK_THAT(acc / (draws * 801.0), WithinRel(expect_mw, 0.02));
}

TEST_CASE("coherent averaging of 10 draws gains 10 dB of SNR", "[impairments][front_end]")
{
    const auto plan = default_tone_plan();
    const RxFrontEnd fe; // full chain: noise, AGC and 10-bit ADC
    const auto h = flat_tones(plan, -100.0);
    FrontEndOptions fo;
    fo.waveform_phases = test_phases();
    double e1 = 0.0, e10 = 0.0;
    const int trials = 40;
    for (int s = 0; s < trials; ++s)
    {
        const auto a = apply_front_end(h, fe, plan, 1, 1000 + s, fo);
        const auto b = apply_front_end(h, fe, plan, 10, 5000 + s, fo);
        std::vector<cplx> ra(a.h), rb(b.h);
        for (auto &v : ra)
            v *= db_to_amplitude(-a.agc_gain);
        for (auto &v : rb)
            v *= db_to_amplitude(-b.agc_gain);
        e1 += mean_error_power(ra, h);
        e10 += mean_error_power(rb, h);
    }
    CHECK_THAT(power_to_db(e1 / e10), WithinAbs(10.0, 0.5));
}

TEST_CASE("mid-rise quantizer error is bounded by half an LSB", "[impairments][adc][property]")
{
    const MidRiseQuantizer q(0.3, 10);
    CHECK_THAT(q.lsb, WithinRel(0.6 / 1024.0, 1e-15));
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (int i = 0; i < 20000; ++i)
    {
        const double v = u(rng);
        CHECK(std::abs(q(v) - v) <= 0.5 * q.lsb * (1.0 + 1e-12));
        CHECK(q.from_code(q.code(v)) == q(v));
        CHECK_FALSE(q.saturates(v));
    }
    // mid-rise: no zero level, symmetric outermost levels
    CHECK(q(0.0) == 0.5 * q.lsb);
    CHECK(q(-1e-12) == -0.5 * q.lsb);
    CHECK(q(10.0) == 511.5 * q.lsb);
    CHECK(q(-10.0) == -511.5 * q.lsb);
    CHECK(q.code(10.0) == 511);
    CHECK(q.code(-10.0) == -512);
    CHECK(q.saturates(0.31));
    CHECK_THROWS_AS(MidRiseQuantizer(0.3, 0), InvalidArgument);
    CHECK(adc_lsb(RxFrontEnd{}) == MidRiseQuantizer(std::sqrt(db_to_power(-10.0)), 10).lsb);
}

TEST_CASE("AGC gain is recorded and exactly invertible", "[impairments][adc][property]")
{
    const auto plan = default_tone_plan();
    RxFrontEnd fe;
    fe.noise_figure = -std::numeric_limits<double>::infinity();
    FrontEndOptions fo;
    fo.waveform_phases = test_phases();
    for (double tone_dbm : {-120.0, -95.0, -70.0, -50.0})
    {
        const auto h = flat_tones(plan, tone_dbm);
        const auto out = apply_front_end(h, fe, plan, 1, 1, fo);
        // gain places the total input 6 dB below full scale, in 0.01 dB steps
        const double total_dbm = tone_dbm + 10.0 * std::log10(801.0);
        CHECK_THAT(out.agc_gain, WithinAbs(std::clamp(-16.0 - total_dbm, -20.0, 80.0), 0.005 + 1e-9));
        CHECK_THAT(out.agc_gain * 100.0, WithinAbs(std::round(out.agc_gain * 100.0), 1e-9));
        CHECK_FALSE(out.clipped);
        std::vector<cplx> back(out.h);
        for (auto &v : back)
            v *= db_to_amplitude(-out.agc_gain);
        // only quantization error remains, about 50 dB down for a 10-bit converter
        CHECK(power_to_db(mean_error_power(back, h) / db_to_power(tone_dbm)) < -45.0);
    }
}

TEST_CASE("input above full scale at minimum gain is flagged as clipped", "[impairments][adc]")
{
    const auto plan = default_tone_plan();
    RxFrontEnd fe;
    FrontEndOptions fo;
    fo.waveform_phases = test_phases();
    const auto out = apply_front_end(flat_tones(plan, -5.0), fe, plan, 1, 1, fo);
    CHECK(out.agc_gain == fe.agc_min);
    CHECK(out.saturated > 0);
    CHECK(out.clipped);
}

TEST_CASE("oscillator phase is common to all beam pairs", "[impairments][clock][property]")
{
    const auto plan = default_tone_plan();
    RxFrontEnd fe = ideal_front_end();
    std::vector<cplx> a(plan.num_tones), b(plan.num_tones);
    for (std::size_t k = 0; k < a.size(); ++k)
    {
        a[k] = std::polar(1e-6, 0.003 * static_cast<double>(k));
        b[k] = std::polar(3e-7, -0.011 * static_cast<double>(k) + 1.0);
    }
    std::vector<cplx> ref;
    for (std::uint64_t seed : {1u, 2u, 3u, 4u})
    {
        FrontEndOptions fo;
        fo.lo_phase = make_clock_model(ClockMode::Shared, seed).initial_phase;
        const auto oa = apply_front_end(a, fe, plan, 1, 0, fo);
        const auto ob = apply_front_end(b, fe, plan, 1, 0, fo);
        std::vector<cplx> rel(a.size());
        for (std::size_t k = 0; k < a.size(); ++k)
            rel[k] = oa.h[k] * std::conj(ob.h[k]);
        if (ref.empty())
            ref = rel;
        for (std::size_t k = 0; k < a.size(); ++k)
            CHECK(std::abs(rel[k] - ref[k]) <= 1e-12 * std::abs(ref[k]));
    }
}
