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

#ifndef MMSOUND_IMPAIRMENTS_HPP
#define MMSOUND_IMPAIRMENTS_HPP

// Hardware non-idealities: relative TX/RX clock phase drift, thermal noise, AGC, converter
// quantization and the smooth frequency-response ripple of the RF chain.

#include "common.hpp"
#include "fft.hpp"
#include "waveform.hpp"

#include <optional>
#include <random>
#include <span>
#include <vector>

namespace mmsound
{
    // ----- Clock drift ---------------------------------------------------------------

    enum class ClockMode
    {
        Shared,
        GpsDisciplined,
        FreeRunning
    };

    inline const char *to_string(ClockMode m)
    {
        switch (m)
        {
        case ClockMode::Shared:
            return "SHARED";
        case ClockMode::GpsDisciplined:
            return "GPS_DISCIPLINED";
        default:
            return "FREE_RUNNING";
        }
    }

    // Worst-case drift of two free-running rubidium references: 4 degrees per 1.444 ms
    inline constexpr double free_running_drift_rate = 4.0 * pi / 180.0 / 1.444e-3; // rad/s
    inline constexpr double default_drift_noise_rms = 0.2 * pi / 180.0;            // rad

    // Relative phase of the TX and RX local oscillators
    struct ClockModel
    {
        ClockMode mode = ClockMode::Shared;
        double initial_phase = 0.0;  // rad, random per PLL lock event
        double drift_rate = 0.0;     // rad/s
        double drift_noise_rms = 0.0; // rad, residual around the linear trend
        std::uint64_t seed = 0;

        bool operator==(const ClockModel &) const = default;
    };

    inline ClockModel make_clock_model(ClockMode mode, std::uint64_t seed)
    {
        ClockModel c;
        c.mode = mode;
        c.seed = seed;
        c.initial_phase = 2.0 * pi * hash_uniform(derive_seed(seed, streams::clock_initial_phase));
        switch (mode)
        {
        case ClockMode::Shared:
            break;
        case ClockMode::FreeRunning:
            c.drift_rate = free_running_drift_rate;
            c.drift_noise_rms = default_drift_noise_rms;
            break;
        case ClockMode::GpsDisciplined:
            c.drift_rate = free_running_drift_rate * hash_uniform(derive_seed(seed, streams::clock_rate));
            c.drift_noise_rms = default_drift_noise_rms;
            break;
        }
        return c;
    }

    // Phase at time t (seconds since the counter start). The residual is white per 100 ns tick and
    // deterministic for the clock's seed.
    inline double drift_phase(const ClockModel &c, double t)
    {
        if (t < 0.0)
            throw InvalidArgument("drift_phase: time must be non-negative");
        double phase = c.initial_phase + c.drift_rate * t;
        if (c.drift_noise_rms > 0.0)
        {
            const auto tick = static_cast<std::uint64_t>(std::llround(t * 1e7));
            phase += c.drift_noise_rms * hash_gaussian(derive_seed(c.seed, streams::clock_drift_noise, tick));
        }
        return phase;
    }

    // ----- RF chain ripple -------------------------------------------------------------

    struct RippleConfig
    {
        bool enabled = true;
        double peak_db = 1.0;        // magnitude stays within +/- peak_db
        double peak_phase_deg = 5.0; // phase stays within +/- peak_phase_deg
        std::uint64_t seed = 0;

        bool operator==(const RippleConfig &) const = default;
    };

    // Smooth multiplicative response: a few low-order cosines across the band, scaled to the peak limits
    inline std::vector<cplx> hardware_ripple(const TonePlan &plan, const RippleConfig &cfg)
    {
        std::vector<cplx> out(plan.num_tones, cplx(1.0, 0.0));
        if (!cfg.enabled || plan.num_tones < 2)
            return out;
        std::mt19937_64 rng(derive_seed(cfg.seed, streams::ripple));
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        constexpr int orders = 4;
        double amp_a[orders], ph_a[orders], amp_b[orders], ph_b[orders];
        for (int m = 0; m < orders; ++m)
        {
            amp_a[m] = uni(rng) / (m + 1);
            ph_a[m] = 2.0 * pi * uni(rng);
            amp_b[m] = uni(rng) / (m + 1);
            ph_b[m] = 2.0 * pi * uni(rng);
        }
        std::vector<double> mag(plan.num_tones), phs(plan.num_tones);
        double max_mag = 0.0, max_phs = 0.0;
        for (std::size_t k = 0; k < plan.num_tones; ++k)
        {
            const double x = static_cast<double>(k) / static_cast<double>(plan.num_tones - 1);
            double a = 0.0, b = 0.0;
            for (int m = 0; m < orders; ++m)
            {
                a += amp_a[m] * std::cos(pi * (m + 1) * x + ph_a[m]);
                b += amp_b[m] * std::cos(pi * (m + 1) * x + ph_b[m]);
            }
            mag[k] = a;
            phs[k] = b;
            max_mag = std::max(max_mag, std::abs(a));
            max_phs = std::max(max_phs, std::abs(b));
        }
        for (std::size_t k = 0; k < plan.num_tones; ++k)
        {
            const double db = max_mag > 0.0 ? cfg.peak_db * mag[k] / max_mag : 0.0;
            const double ph = max_phs > 0.0 ? deg_to_rad(cfg.peak_phase_deg) * phs[k] / max_phs : 0.0;
            out[k] = std::polar(db_to_amplitude(db), ph);
        }
        return out;
    }

    // ----- Receiver front end -----------------------------------------------------------

    struct RxFrontEnd
    {
        double noise_figure = 5.0;        // dB; -inf disables thermal noise
        std::optional<int> adc_bits = 10; // nullopt bypasses AGC and quantization
        int awg_bits = 15;
        double agc_min = -20.0; // dB
        double agc_max = 80.0;  // dB
        double full_scale_power = -10.0; // dBm of a full-scale complex exponential
        double agc_backoff = 6.0;        // dB of signal RMS below full scale
        double sample_rate = 1.25e9;     // complex samples per second

        bool operator==(const RxFrontEnd &) const = default;
    };

    // Mid-rise uniform quantizer of one I/Q component over [-full_scale, full_scale]
    struct MidRiseQuantizer
    {
        double full_scale = 1.0;
        int bits = 10;
        double lsb = 0.0;
        double q_max = 0.0; // largest level index, in LSB units (2^(bits-1) - 1/2)

        MidRiseQuantizer(double full_scale_amplitude, int adc_bits)
            : full_scale(full_scale_amplitude), bits(adc_bits), lsb(2.0 * full_scale_amplitude / std::ldexp(1.0, adc_bits)),
              q_max(std::ldexp(1.0, adc_bits - 1) - 0.5)
        {
            if (adc_bits < 1 || adc_bits > 16)
                throw InvalidArgument("MidRiseQuantizer: ADC resolution must be 1 to 16 bits");
            if (!(full_scale_amplitude > 0.0))
                throw InvalidArgument("MidRiseQuantizer: full scale must be positive");
        }

        // Level index in LSB units, an odd multiple of 1/2
        double level(double v) const { return std::clamp(std::floor(v / lsb) + 0.5, -q_max, q_max); }
        double operator()(double v) const { return level(v) * lsb; }
        // Stored integer code: level - 1/2
        std::int16_t code(double v) const { return static_cast<std::int16_t>(std::floor(level(v))); }
        double from_code(std::int16_t c) const { return (static_cast<double>(c) + 0.5) * lsb; }
        bool saturates(double v) const { return std::abs(v) > full_scale; }
    };

    // Impairment-free receiver: no noise, no AGC, no quantization
    inline RxFrontEnd ideal_front_end()
    {
        RxFrontEnd fe;
        fe.noise_figure = -std::numeric_limits<double>::infinity();
        fe.adc_bits.reset();
        return fe;
    }

    // Thermal noise power per tone in mW: kT * tone_spacing * NF
    inline double tone_noise_power_mw(const TonePlan &plan, const RxFrontEnd &fe)
    {
        if (!std::isfinite(fe.noise_figure) && fe.noise_figure < 0.0)
            return 0.0;
        return db_to_power(thermal_noise_dbm_per_hz + 10.0 * std::log10(plan.tone_spacing) + fe.noise_figure);
    }

    struct FrontEndOptions
    {
        std::span<const double> waveform_phases; // transmitted tone phases; empty = all zero
        std::span<const cplx> waveform_phasors;  // exp(j phases), takes precedence when non-empty
        double lo_phase = 0.0;                   // rad, relative TX/RX oscillator phase at this slot
    };

    struct FrontEndOutput
    {
        std::vector<cplx> h;    // tone values after AGC, in sqrt(mW) times the AGC amplitude gain
        double agc_gain = 0.0;  // dB, multiple of 0.01 dB
        bool clipped = false;   // AGC at minimum gain and the ADC still saturated
        std::size_t saturated = 0; // saturated I/Q components over all averaged draws
    };

    // Received tone amplitudes `h` (sqrt(mW), referred to the RX input) through the receiver:
    //   thermal noise -> oscillator phase rotation -> oracle AGC -> ADC (I/Q quantization in the
    //   time domain at `sample_rate`) -> DFT back to the tones, transmitted phases removed.
    // `averaging` independent noise draws are averaged coherently.
    inline FrontEndOutput apply_front_end(std::span<const cplx> h, const RxFrontEnd &fe, const TonePlan &plan,
                                          std::size_t averaging, std::uint64_t seed, const FrontEndOptions &opt = {})
    {
        if (averaging < 1)
            throw InvalidArgument("apply_front_end: averaging must be at least 1");
        if (h.size() != plan.num_tones)
            throw InvalidArgument("apply_front_end: response length does not match the tone plan");
        if (!opt.waveform_phases.empty() && opt.waveform_phases.size() != plan.num_tones)
            throw InvalidArgument("apply_front_end: waveform phase vector does not match the tone plan");

        const std::size_t k_tones = plan.num_tones;
        const double noise_var = tone_noise_power_mw(plan, fe);
        const double sigma = std::sqrt(0.5 * noise_var);
        const cplx lo = std::polar(1.0, opt.lo_phase);
        const bool rotate = opt.lo_phase != 0.0;

        FrontEndOutput out;
        out.h.assign(k_tones, cplx(0.0, 0.0));

        // Oracle AGC from the expected input power
        double g_amp = 1.0;
        if (fe.adc_bits)
        {
            double p_in = noise_var * static_cast<double>(k_tones);
            for (const auto &v : h)
                p_in += std::norm(v);
            double g_db = fe.agc_max;
            if (p_in > 0.0)
                g_db = std::clamp(fe.full_scale_power - fe.agc_backoff - power_to_db(p_in), fe.agc_min, fe.agc_max);
            g_db = std::round(g_db * 100.0) / 100.0;
            out.agc_gain = g_db;
            g_amp = db_to_amplitude(g_db);
        }

        std::vector<std::size_t> bins;
        std::size_t n_fft = 0;
        std::vector<cplx> tx_phase;
        if (fe.adc_bits)
        {
            bins.resize(k_tones);
            std::size_t max_bin = 0;
            for (std::size_t k = 0; k < k_tones; ++k)
            {
                const double b = plan.tone_frequency(k) / plan.tone_spacing;
                if (std::abs(b - std::round(b)) > 1e-6)
                    throw InvalidArgument("apply_front_end: tone frequencies must be multiples of the tone spacing");
                bins[k] = static_cast<std::size_t>(std::llround(b));
                max_bin = std::max(max_bin, bins[k]);
            }
            n_fft = std::max<std::size_t>(static_cast<std::size_t>(std::llround(fe.sample_rate / plan.tone_spacing)),
                                          max_bin + 1);
            if (!opt.waveform_phasors.empty())
            {
                if (opt.waveform_phasors.size() != k_tones)
                    throw InvalidArgument("apply_front_end: waveform phasor vector does not match the tone plan");
                tx_phase.assign(opt.waveform_phasors.begin(), opt.waveform_phasors.end());
            }
            else
            {
                tx_phase.resize(k_tones);
                for (std::size_t k = 0; k < k_tones; ++k)
                    tx_phase[k] = opt.waveform_phases.empty() ? cplx(1.0, 0.0) : std::polar(1.0, opt.waveform_phases[k]);
            }
        }

        std::vector<cplx> y(k_tones), buf(n_fft);
        for (std::size_t a = 0; a < averaging; ++a)
        {
            for (std::size_t k = 0; k < k_tones; ++k)
                y[k] = h[k];
            if (noise_var > 0.0)
            {
                std::mt19937_64 rng(derive_seed(seed, streams::thermal_noise, a));
                std::normal_distribution<double> nd(0.0, sigma);
                for (std::size_t k = 0; k < k_tones; ++k)
                {
                    const double re = nd(rng);
                    const double im = nd(rng);
                    y[k] += cplx(re, im);
                }
            }
            if (rotate)
                for (auto &v : y)
                    v *= lo;

            if (!fe.adc_bits)
            {
                for (std::size_t k = 0; k < k_tones; ++k)
                    out.h[k] += y[k];
                continue;
            }

            // Time-domain ADC over one waveform period
            std::fill(buf.begin(), buf.end(), cplx(0.0, 0.0));
            for (std::size_t k = 0; k < k_tones; ++k)
                buf[bins[k]] = g_amp * y[k] * tx_phase[k];
            fft::backward(buf);

            const MidRiseQuantizer adc(std::sqrt(db_to_power(fe.full_scale_power)), *fe.adc_bits);
            auto quantize = [&](double v) {
                if (adc.saturates(v))
                    ++out.saturated;
                return adc(v);
            };
            for (auto &v : buf)
                v = cplx(quantize(v.real()), quantize(v.imag()));

            fft::forward(buf);
            const double inv_n = 1.0 / static_cast<double>(n_fft);
            for (std::size_t k = 0; k < k_tones; ++k)
                out.h[k] += buf[bins[k]] * inv_n * std::conj(tx_phase[k]);
        }
        if (averaging > 1)
            for (auto &v : out.h)
                v /= static_cast<double>(averaging);
        out.clipped = out.saturated > 0 && fe.adc_bits && out.agc_gain <= fe.agc_min;
        return out;
    }

    // Peak-to-peak quantization step of one I/Q component
    inline double adc_lsb(const RxFrontEnd &fe)
    {
        if (!fe.adc_bits)
            return 0.0;
        return 2.0 * std::sqrt(db_to_power(fe.full_scale_power)) / std::ldexp(1.0, *fe.adc_bits);
    }
}

#endif
