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

#ifndef MMSOUND_WAVEFORM_HPP
#define MMSOUND_WAVEFORM_HPP

// Multitone sounding waveform: tone plan, PAPR evaluation and phase optimization.
//
// PAPR convention: all PAPR values are computed on the complex baseband envelope
//   x(t) = sum_k exp(j (2 pi k df t + phi_k)),  0 <= t < 1/df
// so a single tone is 0 dB. The real passband PAPR of the same signal is ~3 dB higher.
// The reported value is the continuous-time peak: the envelope is sampled at
// `oversampling` samples per tone spacing and the candidate peaks are refined by a
// golden-section search on the exact trigonometric sum.

#include "common.hpp"
#include "fft.hpp"

#include <algorithm>
#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace mmsound
{
    struct TonePlan
    {
        std::size_t num_tones = 801;
        double tone_spacing = 500e3;  // Hz
        double start_freq = 50e6;     // Hz, baseband offset of the first tone
        std::size_t oversampling = 4; // samples per Nyquist interval for PAPR evaluation

        double tone_frequency(std::size_t k) const { return start_freq + static_cast<double>(k) * tone_spacing; }
        double highest_frequency() const { return tone_frequency(num_tones - 1); }
        double center_frequency() const { return start_freq + 0.5 * static_cast<double>(num_tones - 1) * tone_spacing; }
        double bandwidth() const { return static_cast<double>(num_tones) * tone_spacing; }
        double period() const { return 1.0 / tone_spacing; }
        double delay_bin() const { return 1.0 / bandwidth(); }

        bool operator==(const TonePlan &) const = default;
    };

    inline TonePlan make_tone_plan(std::size_t num_tones, double spacing, double start, std::size_t oversampling = 4)
    {
        if (num_tones == 0)
            throw InvalidArgument("make_tone_plan: number of tones must be at least 1");
        if (!(spacing > 0.0) || !std::isfinite(spacing))
            throw InvalidArgument("make_tone_plan: tone spacing must be positive");
        if (!(start >= 0.0) || !std::isfinite(start))
            throw InvalidArgument("make_tone_plan: start frequency must be non-negative");
        if (oversampling < 1)
            throw InvalidArgument("make_tone_plan: oversampling factor must be at least 1");
        return TonePlan{num_tones, spacing, start, oversampling};
    }

    // 801 tones, 500 kHz spacing, 50 MHz ... 450 MHz
    inline TonePlan default_tone_plan() { return TonePlan{}; }

    struct SoundingWaveform
    {
        TonePlan plan;
        std::vector<double> phases; // radians, one per tone
        double duration = 0.0;      // seconds, one period = 1 / tone_spacing
        double papr = 0.0;          // dB, complex-envelope convention

        bool operator==(const SoundingWaveform &) const = default;
    };

    // ----- Classic phase laws ------------------------------------------------------

    inline std::vector<double> newman_phases(std::size_t num_tones)
    {
        std::vector<double> ph(num_tones);
        const double n = static_cast<double>(num_tones);
        for (std::size_t k = 0; k < num_tones; ++k)
        {
            const double kk = static_cast<double>(k);
            ph[k] = std::fmod(pi * kk * kk / n, 2.0 * pi);
        }
        return ph;
    }

    // Frequency-domain Zadoff-Chu phases of the given root
    inline std::vector<double> zadoff_chu_phases(std::size_t num_tones, std::size_t root = 1)
    {
        std::vector<double> ph(num_tones);
        const double n = static_cast<double>(num_tones);
        const double u = static_cast<double>(root);
        for (std::size_t k = 0; k < num_tones; ++k)
        {
            const double kk = static_cast<double>(k);
            const double arg = (num_tones % 2 == 1) ? kk * (kk + 1.0) : kk * kk;
            ph[k] = std::fmod(-pi * u * arg / n, 2.0 * pi);
        }
        return ph;
    }

    // ----- Envelope synthesis ---------------------------------------------------

    // One period of the complex envelope sampled at `num_samples` points (num_samples >= num_tones).
    // Tone k sits at relative frequency k * tone_spacing; the common start offset does not change |x|.
    inline std::vector<cplx> synthesize_envelope(std::span<const double> phases, std::size_t num_samples)
    {
        if (num_samples < phases.size())
            throw InvalidArgument("synthesize_envelope: need at least one sample per tone");
        std::vector<cplx> x(num_samples, cplx(0.0, 0.0));
        for (std::size_t k = 0; k < phases.size(); ++k)
            x[k] = std::polar(1.0, phases[k]);
        fft::backward(x);
        return x;
    }

    namespace detail
    {
        // |x(u)|^2 at normalized time u in [0, 1) by Horner evaluation of sum_k c_k w^k, w = exp(j 2 pi u)
        inline double envelope_power_at(std::span<const cplx> coeffs, double u)
        {
            const cplx w = std::polar(1.0, 2.0 * pi * u);
            cplx acc(0.0, 0.0);
            for (std::size_t k = coeffs.size(); k-- > 0;)
                acc = acc * w + coeffs[k];
            return std::norm(acc);
        }

        inline double refine_peak(std::span<const cplx> coeffs, double center, double half_width)
        {
            constexpr double golden = 0.6180339887498949;
            double a = center - half_width, b = center + half_width;
            double c = b - golden * (b - a), d = a + golden * (b - a);
            double fc = envelope_power_at(coeffs, c), fd = envelope_power_at(coeffs, d);
            for (int it = 0; it < 40; ++it)
            {
                if (fc > fd)
                {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - golden * (b - a);
                    fc = envelope_power_at(coeffs, c);
                }
                else
                {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + golden * (b - a);
                    fd = envelope_power_at(coeffs, d);
                }
            }
            return std::max(fc, fd);
        }
    }

    // Peak-to-average power ratio in dB (complex-envelope convention, continuous-time peak)
    inline double papr_db(std::span<const double> phases, std::size_t oversampling = 4)
    {
        if (phases.empty())
            throw InvalidArgument("papr_db: empty phase vector");
        if (oversampling < 4)
            throw InvalidArgument("papr_db: oversampling factor must be at least 4");

        const std::size_t k_tones = phases.size();
        const std::size_t n = oversampling * k_tones;
        const auto x = synthesize_envelope(phases, n);

        std::vector<double> p(n);
        double mean = 0.0, grid_max = 0.0;
        for (std::size_t i = 0; i < n; ++i)
        {
            p[i] = std::norm(x[i]);
            mean += p[i];
            grid_max = std::max(grid_max, p[i]);
        }
        mean /= static_cast<double>(n);

        // The grid sample nearest the true peak is at most half a step away, so its power is at least
        // cos^2(pi / (2 oversampling)) of the peak.
        const double bound = std::pow(std::cos(pi / (2.0 * static_cast<double>(oversampling))), 2);

        std::vector<std::size_t> cand;
        for (std::size_t i = 0; i < n; ++i)
        {
            const double prev = p[(i + n - 1) % n], next = p[(i + 1) % n];
            if (p[i] >= prev && p[i] >= next && p[i] >= bound * grid_max)
                cand.push_back(i);
        }
        std::sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });

        std::vector<cplx> coeffs(k_tones);
        for (std::size_t k = 0; k < k_tones; ++k)
            coeffs[k] = std::polar(1.0, phases[k]);

        double peak = grid_max;
        const double step = 1.0 / static_cast<double>(n);
        for (std::size_t i : cand)
        {
            if (p[i] < bound * peak)
                break;
            peak = std::max(peak, detail::refine_peak(coeffs, static_cast<double>(i) * step, step));
        }
        return power_to_db(peak / mean);
    }

    inline double papr_db(const SoundingWaveform &wf) { return papr_db(wf.phases, wf.plan.oversampling); }

    inline SoundingWaveform make_waveform(const TonePlan &plan, std::vector<double> phases)
    {
        if (phases.size() != plan.num_tones)
            throw InvalidArgument("make_waveform: phase vector length must equal the number of tones");
        SoundingWaveform wf;
        wf.plan = plan;
        wf.duration = plan.period();
        wf.papr = papr_db(phases, std::max<std::size_t>(plan.oversampling, 4));
        wf.phases = std::move(phases);
        return wf;
    }

    // Transmit back-off below the 1 dB compression point: PAPR plus 3 dB margin
    inline double tx_backoff_db(double papr)
    {
        if (papr < 0.0)
            throw InvalidArgument("tx_backoff_db: PAPR must be non-negative");
        return papr + 3.0;
    }

    // ----- Phase optimization ---------------------------------------------------------
    //
    // Each start runs (1) iterative time-domain clipping with frequency-domain magnitude restoration,
    // then (2) minimization of the Lp norm of the envelope power with L-BFGS for p = 2, 4, ..., 128,
    // which approaches the minimax (peak) objective. Start 0 uses Newman phases; further starts use
    // seeded random phases. Every FFT-pair evaluation counts as one iteration against max_iters.

    struct PhaseOptimizerOptions
    {
        double target_papr = 0.5;          // dB
        std::size_t max_iters = 5000;      // total clipping iterations + objective evaluations
        std::uint64_t seed = 0;
        std::size_t clip_iterations = 200; // per start
        double clip_level_db = 0.3;        // clipping threshold above RMS
        std::size_t lbfgs_iterations = 150; // per Lp stage
        std::size_t max_p = 128;
    };

    struct PhaseOptimizationResult
    {
        SoundingWaveform waveform;
        bool converged = false;
        std::size_t iterations = 0;
        std::size_t starts = 0;
    };

    namespace detail
    {
        class LpObjective
        {
        public:
            LpObjective(std::size_t num_tones, std::size_t grid) : k_(num_tones), n_(grid), x_(grid), v_(grid) {}

            // Returns F = (mean_n a_n^p)^(1/p), a_n = |x_n|^2 / K, and fills grad (d F / d phi)
            double operator()(std::span<const double> phases, double p, std::span<double> grad)
            {
                std::fill(x_.begin(), x_.end(), cplx(0.0, 0.0));
                for (std::size_t k = 0; k < k_; ++k)
                    x_[k] = std::polar(1.0, phases[k]);
                fft::backward(x_);

                const double inv_k = 1.0 / static_cast<double>(k_);
                double m = 0.0;
                for (const auto &v : x_)
                    m = std::max(m, std::norm(v) * inv_k);
                double s = 0.0;
                for (std::size_t i = 0; i < n_; ++i)
                    s += std::pow(std::norm(x_[i]) * inv_k / m, p);
                const double nn = static_cast<double>(n_);
                const double f = m * std::pow(s / nn, 1.0 / p);
                const double scale = std::pow(s / nn, 1.0 / p - 1.0) / nn;

                for (std::size_t i = 0; i < n_; ++i)
                {
                    const double w = scale * std::pow(std::norm(x_[i]) * inv_k / m, p - 1.0);
                    v_[i] = w * std::conj(x_[i]);
                }
                fft::backward(v_);
                for (std::size_t k = 0; k < k_; ++k)
                {
                    const cplx e = std::polar(1.0, phases[k]);
                    grad[k] = 2.0 * inv_k * std::real(cplx(0.0, 1.0) * e * v_[k]);
                }
                return f;
            }

        private:
            std::size_t k_, n_;
            std::vector<cplx> x_, v_;
        };

        // Limited-memory BFGS with Armijo backtracking. Returns evaluations used.
        template <typename Fn>
        std::size_t lbfgs_minimize(Fn &&fn, std::vector<double> &x, std::size_t max_iter, std::size_t max_evals)
        {
            const std::size_t n = x.size();
            constexpr std::size_t history = 8;
            std::vector<std::vector<double>> s_hist, y_hist;
            std::vector<double> rho_hist;

            std::vector<double> g(n), g_new(n), d(n), x_new(n), alpha(history);
            double f = fn(x, g);
            std::size_t evals = 1;

            for (std::size_t iter = 0; iter < max_iter && evals < max_evals; ++iter)
            {
                // Two-loop recursion
                d = g;
                const std::size_t m = s_hist.size();
                for (std::size_t i = m; i-- > 0;)
                {
                    double a = 0.0;
                    for (std::size_t j = 0; j < n; ++j)
                        a += s_hist[i][j] * d[j];
                    a *= rho_hist[i];
                    alpha[i] = a;
                    for (std::size_t j = 0; j < n; ++j)
                        d[j] -= a * y_hist[i][j];
                }
                double gamma = 1.0;
                if (m > 0)
                {
                    double sy = 0.0, yy = 0.0;
                    for (std::size_t j = 0; j < n; ++j)
                    {
                        sy += s_hist[m - 1][j] * y_hist[m - 1][j];
                        yy += y_hist[m - 1][j] * y_hist[m - 1][j];
                    }
                    gamma = sy / yy;
                }
                else
                {
                    double gn = 0.0;
                    for (double v : g)
                        gn = std::max(gn, std::abs(v));
                    if (gn == 0.0)
                        break;
                    gamma = 0.1 / gn;
                }
                for (auto &v : d)
                    v *= gamma;
                for (std::size_t i = 0; i < m; ++i)
                {
                    double b = 0.0;
                    for (std::size_t j = 0; j < n; ++j)
                        b += y_hist[i][j] * d[j];
                    b *= rho_hist[i];
                    for (std::size_t j = 0; j < n; ++j)
                        d[j] += s_hist[i][j] * (alpha[i] - b);
                }

                double slope = 0.0;
                for (std::size_t j = 0; j < n; ++j)
                    slope -= g[j] * d[j];
                if (!(slope < 0.0))
                {
                    // Not a descent direction: reset memory and use steepest descent
                    s_hist.clear();
                    y_hist.clear();
                    rho_hist.clear();
                    continue;
                }

                double step = 1.0, f_new = f;
                bool accepted = false;
                for (int ls = 0; ls < 30 && evals < max_evals; ++ls)
                {
                    for (std::size_t j = 0; j < n; ++j)
                        x_new[j] = x[j] - step * d[j];
                    f_new = fn(x_new, g_new);
                    ++evals;
                    if (f_new <= f + 1e-4 * step * slope)
                    {
                        accepted = true;
                        break;
                    }
                    step *= 0.5;
                }
                if (!accepted)
                    break;

                std::vector<double> s(n), y(n);
                double sy = 0.0;
                for (std::size_t j = 0; j < n; ++j)
                {
                    s[j] = x_new[j] - x[j];
                    y[j] = g_new[j] - g[j];
                    sy += s[j] * y[j];
                }
                const double rel_change = (f - f_new) / std::max(std::abs(f), 1e-300);
                x.swap(x_new);
                g.swap(g_new);
                f = f_new;
                if (sy > 1e-300)
                {
                    if (s_hist.size() == history)
                    {
                        s_hist.erase(s_hist.begin());
                        y_hist.erase(y_hist.begin());
                        rho_hist.erase(rho_hist.begin());
                    }
                    s_hist.push_back(std::move(s));
                    y_hist.push_back(std::move(y));
                    rho_hist.push_back(1.0 / sy);
                }
                if (rel_change < 1e-12)
                    break;
            }
            return evals;
        }
    }

    inline PhaseOptimizationResult optimize_phases(const TonePlan &plan, const PhaseOptimizerOptions &opt)
    {
        if (!(opt.target_papr > 0.0))
            throw InvalidArgument("optimize_phases: target PAPR must be positive");
        if (plan.num_tones == 0)
            throw InvalidArgument("optimize_phases: empty tone plan");

        const std::size_t k_tones = plan.num_tones;
        const std::size_t eval_os = std::max<std::size_t>(plan.oversampling, 4);
        const std::size_t grid = 2 * eval_os * k_tones;

        PhaseOptimizationResult result;
        std::vector<double> best_phases;
        double best_papr = std::numeric_limits<double>::infinity();
        std::size_t used = 0;

        detail::LpObjective objective(k_tones, grid);
        std::vector<cplx> x(grid);

        for (std::size_t start = 0; used < opt.max_iters; ++start)
        {
            std::vector<double> ph;
            if (start == 0)
                ph = newman_phases(k_tones);
            else
            {
                std::mt19937_64 rng(derive_seed(opt.seed, streams::phase_restart, start));
                std::uniform_real_distribution<double> uni(0.0, 2.0 * pi);
                ph.resize(k_tones);
                for (auto &v : ph)
                    v = uni(rng);
            }
            ++result.starts;

            // Stage 1: clipping with magnitude restoration
            const double clip_gain = db_to_amplitude(opt.clip_level_db);
            for (std::size_t it = 0; it < opt.clip_iterations && used < opt.max_iters; ++it, ++used)
            {
                std::fill(x.begin(), x.end(), cplx(0.0, 0.0));
                for (std::size_t k = 0; k < k_tones; ++k)
                    x[k] = std::polar(1.0, ph[k]);
                fft::backward(x);
                double ms = 0.0;
                for (const auto &v : x)
                    ms += std::norm(v);
                const double limit = std::sqrt(ms / static_cast<double>(grid)) * clip_gain;
                for (auto &v : x)
                {
                    const double a = std::abs(v);
                    if (a > limit)
                        v *= limit / a;
                }
                fft::forward(x);
                for (std::size_t k = 0; k < k_tones; ++k)
                    if (std::abs(x[k]) > 0.0)
                        ph[k] = std::arg(x[k]);
            }

            // Stage 2: Lp-norm polishing
            for (double p = 2.0; p <= static_cast<double>(opt.max_p) && used < opt.max_iters; p *= 2.0)
            {
                auto fn = [&](std::span<const double> v, std::span<double> g) { return objective(v, p, g); };
                used += detail::lbfgs_minimize(fn, ph, opt.lbfgs_iterations, opt.max_iters - used);
            }

            const double papr = papr_db(ph, eval_os);
            if (papr < best_papr)
            {
                best_papr = papr;
                best_phases = ph;
            }
            if (best_papr <= opt.target_papr)
            {
                result.converged = true;
                break;
            }
        }

        for (auto &v : best_phases)
        {
            v = std::fmod(v, 2.0 * pi);
            if (v < 0.0)
                v += 2.0 * pi;
        }
        result.iterations = used;
        result.waveform = make_waveform(plan, std::move(best_phases));
        result.converged = result.waveform.papr <= opt.target_papr;
        return result;
    }

    inline PhaseOptimizationResult optimize_phases(const TonePlan &plan, double target_papr, std::size_t max_iters = 5000,
                                                   std::uint64_t seed = 0)
    {
        PhaseOptimizerOptions opt;
        opt.target_papr = target_papr;
        opt.max_iters = max_iters;
        opt.seed = seed;
        return optimize_phases(plan, opt);
    }
}

#endif
