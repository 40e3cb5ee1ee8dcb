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

#ifndef MMSOUND_PROCESSING_HPP
#define MMSOUND_PROCESSING_HPP

// Post-processing of beam-switched captures:
//   clock drift estimation / correction from the anchor slots,
//   calibrated per-pair spectra  X = H ./ H_cal  (AGC unwound, repetitions averaged),
//   directional PDP  P(tx, rx, tau) = |IDFT{X}|^2,
//   angular power spectrum, sector PDP, power angular-delay profiles, 360-degree path loss,
//   and peak-based path extraction.
//
// The IDFT is normalized by 1/K, so sum_tau P = mean_k |X_k|^2 for every pair (rectangular window).
// X is referenced to the transmitted tone power, so P is a dimensionless power gain that still
// contains both beam gains.

#include "capture.hpp"
#include "common.hpp"
#include "fft.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

namespace mmsound
{
    // ----- Clock drift -----------------------------------------------------------------

    struct DriftEstimate
    {
        double slope = 0.0;        // rad/s
        double intercept = 0.0;    // rad at t = 0
        double residual_rms = 0.0; // rad
        std::size_t anchors = 0;
        bool ambiguous = false;    // an adjacent-anchor step exceeded the guard
    };

    inline constexpr double drift_step_guard = pi / 2.0; // rad per adjacent anchor step

    // Weighted least-squares line through the unwrapped anchor phases of one snapshot. The phase of
    // each anchor is taken against the first anchor over all tones (for a static channel this equals
    // the center-tone phase difference, without depending on a single tone's SNR).
    inline DriftEstimate estimate_drift(const CaptureSet &cs, std::size_t snapshot = 0)
    {
        if (snapshot >= cs.metadata.snapshot_ticks.size())
            throw InvalidArgument("estimate_drift: snapshot index out of range");
        std::vector<const CaptureRecord *> anchors;
        for (const auto &r : cs.records)
            if (cs.snapshot_of(r) == snapshot && cs.slot_of(r).anchor)
                anchors.push_back(&r);
        if (anchors.size() < 2)
            throw InvalidArgument("estimate_drift: at least two anchor slots are required");
        std::sort(anchors.begin(), anchors.end(),
                  [](const CaptureRecord *a, const CaptureRecord *b) { return a->slot_index < b->slot_index; });

        const auto ref = cs.input_referred(*anchors.front());
        const std::size_t n = anchors.size();
        std::vector<double> t(n), ph(n), w(n);
        DriftEstimate out;
        out.anchors = n;
        double prev = 0.0;
        for (std::size_t i = 0; i < n; ++i)
        {
            const auto h = cs.input_referred(*anchors[i]);
            cplx c(0.0, 0.0);
            for (std::size_t k = 0; k < h.size(); ++k)
                c += h[k] * std::conj(ref[k]);
            t[i] = cs.record_time(*anchors[i]);
            w[i] = std::abs(c);
            const double raw = std::arg(c);
            if (i == 0)
                ph[i] = raw;
            else
            {
                const double step = wrap_radians(raw - prev);
                if (std::abs(step) > drift_step_guard)
                    out.ambiguous = true;
                ph[i] = ph[i - 1] + step;
            }
            prev = raw;
        }
        const double sw = std::accumulate(w.begin(), w.end(), 0.0);
        if (!(sw > 0.0))
            throw InvalidArgument("estimate_drift: anchor slots carry no signal");
        double mt = 0.0, mp = 0.0;
        for (std::size_t i = 0; i < n; ++i)
        {
            mt += w[i] * t[i];
            mp += w[i] * ph[i];
        }
        mt /= sw;
        mp /= sw;
        double stt = 0.0, stp = 0.0;
        for (std::size_t i = 0; i < n; ++i)
        {
            stt += w[i] * (t[i] - mt) * (t[i] - mt);
            stp += w[i] * (t[i] - mt) * (ph[i] - mp);
        }
        if (!(stt > 0.0))
            throw InvalidArgument("estimate_drift: anchor slots must be at distinct times");
        out.slope = stp / stt;
        out.intercept = mp - out.slope * mt;
        double rss = 0.0;
        for (std::size_t i = 0; i < n; ++i)
        {
            const double r = ph[i] - (out.intercept + out.slope * t[i]);
            rss += w[i] * r * r;
        }
        out.residual_rms = std::sqrt(rss / sw);
        return out;
    }

    // Multiplies every record by exp(-j slope t_record)
    inline CaptureSet correct_drift(const CaptureSet &cs, double slope)
    {
        if (!std::isfinite(slope))
            throw InvalidArgument("correct_drift: slope must be finite");
        CaptureSet out = cs;
        if (slope == 0.0)
            return out;
        for (auto &r : out.records)
        {
            const cplx rot = std::polar(1.0, -slope * cs.record_time(r));
            for (auto &v : r.h)
                v *= rot;
        }
        return out;
    }

    // ----- Calibration -----------------------------------------------------------------

    // Calibration record normalized to the known back-to-back drive level: all ones for an ideal chain
    inline std::vector<cplx> calibration_response(const CaptureSet &cal, const CaptureRecord &r)
    {
        if (cal.metadata.kind != CaptureKind::Calibration)
            throw InvalidArgument("calibration_response: capture is not a calibration capture");
        const double amp = std::sqrt(db_to_power(cal.metadata.tone_power_dbm() - cal.metadata.calibration_attenuation));
        auto h = cal.input_referred(r);
        for (auto &v : h)
            v /= amp;
        return h;
    }

    inline std::vector<cplx> calibration_response(const CaptureSet &cal)
    {
        if (cal.records.empty())
            throw InvalidArgument("calibration_response: calibration capture has no records");
        return calibration_response(cal, cal.records.front());
    }

    // ----- Calibrated spectra and directional PDP ---------------------------------------

    enum class Window
    {
        Rectangular,
        Hann
    };

    inline const char *to_string(Window w) { return w == Window::Rectangular ? "rectangular" : "hann"; }

    enum class DriftCorrection
    {
        Auto, // on unless the capture declares a shared clock
        On,
        Off
    };

    struct ProcessingOptions
    {
        DriftCorrection drift = DriftCorrection::Auto;
        Window window = Window::Rectangular;
        std::size_t snapshot = 0;
        double calibration_floor = 1e-6; // minimum |H_cal| relative to its median
        unsigned threads = 1;
    };

    struct CalibratedSpectra
    {
        std::size_t num_tx = 0, num_rx = 0, num_tones = 0;
        std::vector<BeamId> tx_beams, rx_beams;
        std::vector<double> tx_angles, rx_angles; // steering azimuths, RX in its local frame
        double rx_orientation = 0.0;
        double delay_bin = 0.0;
        std::vector<cplx> x; // [tx][rx][tone]
        std::optional<DriftEstimate> drift; // set when drift correction was applied

        std::span<const cplx> pair(std::size_t t, std::size_t r) const
        {
            return std::span<const cplx>(x).subspan((t * num_rx + r) * num_tones, num_tones);
        }
    };

    // Per-pair calibrated spectra of one snapshot, referenced to the transmitted tone power.
    // Inserted anchor slots are not averaged; every pair must appear exactly `repetitions` times.
    inline CalibratedSpectra calibrated_spectra(const CaptureSet &capture, const CaptureSet &cal,
                                                const ProcessingOptions &opt = {})
    {
        const auto &md = capture.metadata;
        if (md.kind != CaptureKind::Measurement)
            throw InvalidArgument("calibrated_spectra: first argument must be a measurement capture");
        if (!(md.plan == cal.metadata.plan))
            throw InvalidArgument("calibrated_spectra: tone plans of capture and calibration differ");
        if (opt.snapshot >= md.snapshot_ticks.size())
            throw InvalidArgument("calibrated_spectra: snapshot index out of range");

        const CaptureSet *src = &capture;
        CaptureSet corrected;
        std::optional<DriftEstimate> drift;
        const bool correct = opt.drift == DriftCorrection::On ||
                             (opt.drift == DriftCorrection::Auto && md.clock.mode != ClockMode::Shared);
        if (correct)
        {
            drift = estimate_drift(capture, opt.snapshot);
            corrected = correct_drift(capture, drift->slope);
            src = &corrected;
        }

        const auto &sched = md.schedule;
        CalibratedSpectra out;
        out.num_tx = sched.tx_beams.size();
        out.num_rx = sched.rx_beams.size();
        out.num_tones = md.plan.num_tones;
        out.tx_beams = sched.tx_beams;
        out.rx_beams = sched.rx_beams;
        for (const auto &b : sched.tx_beams)
            out.tx_angles.push_back(md.tx_codebook.steering_azimuth(b));
        for (const auto &b : sched.rx_beams)
            out.rx_angles.push_back(md.rx_codebook.steering_azimuth(b));
        out.rx_orientation = md.rx_orientation;
        out.delay_bin = md.plan.delay_bin();
        out.drift = drift;
        out.x.assign(out.num_tx * out.num_rx * out.num_tones, cplx(0.0, 0.0));

        // Coherent repetition average of the AGC-unwound records
        std::vector<std::size_t> count(out.num_tx * out.num_rx, 0);
        for (const auto &r : src->records)
        {
            if (src->snapshot_of(r) != opt.snapshot)
                continue;
            const Slot &sl = src->slot_of(r);
            if (sl.inserted)
                continue;
            if (r.h.size() != out.num_tones)
                throw DataIntegrityError("calibrated_spectra: record length does not match the tone plan");
            const std::size_t p = sched.pair_index(sl.tx, sl.rx);
            const double g = db_to_amplitude(-r.agc_gain);
            cplx *dst = out.x.data() + p * out.num_tones;
            for (std::size_t k = 0; k < out.num_tones; ++k)
                dst[k] += r.h[k] * g;
            ++count[p];
        }
        for (std::size_t p = 0; p < count.size(); ++p)
            if (count[p] != sched.repetitions)
                throw InvalidArgument("calibrated_spectra: beam pair " + std::to_string(p) + " has " +
                                      std::to_string(count[p]) + " repetitions, expected " +
                                      std::to_string(sched.repetitions));

        // Calibration responses: one shared record or one per steered pair
        auto check_cal = [&](const std::vector<cplx> &hc) {
            std::vector<double> mags(hc.size());
            for (std::size_t k = 0; k < hc.size(); ++k)
                mags[k] = std::abs(hc[k]);
            std::nth_element(mags.begin(), mags.begin() + mags.size() / 2, mags.end());
            const double floor = opt.calibration_floor * mags[mags.size() / 2];
            for (std::size_t k = 0; k < hc.size(); ++k)
                if (!(std::abs(hc[k]) > floor))
                    throw InvalidArgument("calibrated_spectra: calibration response is zero at tone " +
                                          std::to_string(k));
        };
        std::vector<cplx> shared_cal;
        std::map<std::pair<double, double>, std::vector<cplx>> pair_cal;
        if (cal.metadata.calibration_mode == CalibrationMode::Shared)
        {
            shared_cal = calibration_response(cal);
            check_cal(shared_cal);
        }
        else
        {
            for (const auto &r : cal.records)
            {
                const Slot &sl = cal.slot_of(r);
                pair_cal[{cal.metadata.tx_codebook.steering_azimuth(sl.tx),
                          cal.metadata.rx_codebook.steering_azimuth(sl.rx)}] = calibration_response(cal, r);
            }
            for (const auto &kv : pair_cal)
                check_cal(kv.second);
        }

        const double ref = std::sqrt(db_to_power(md.tone_power_dbm()));
        for (std::size_t t = 0; t < out.num_tx; ++t)
            for (std::size_t r = 0; r < out.num_rx; ++r)
            {
                const std::size_t p = t * out.num_rx + r;
                const std::vector<cplx> *hc = &shared_cal;
                if (cal.metadata.calibration_mode == CalibrationMode::PerBeamPair)
                {
                    auto it = pair_cal.find({out.tx_angles[t], out.rx_angles[r]});
                    if (it == pair_cal.end())
                        throw InvalidArgument("calibrated_spectra: calibration has no record for beam pair " +
                                              std::to_string(p));
                    hc = &it->second;
                }
                const double scale = 1.0 / (static_cast<double>(sched.repetitions) * ref);
                cplx *dst = out.x.data() + p * out.num_tones;
                for (std::size_t k = 0; k < out.num_tones; ++k)
                    dst[k] = dst[k] * scale / (*hc)[k];
            }
        return out;
    }

    struct DirectionalPdp
    {
        std::size_t num_tx = 0, num_rx = 0, num_delay = 0;
        std::vector<double> tx_angles, rx_angles; // degrees; RX local
        double rx_orientation = 0.0;
        double delay_bin = 0.0;
        Window window = Window::Rectangular;
        std::vector<double> p; // [tx][rx][delay]

        double at(std::size_t t, std::size_t r, std::size_t d) const { return p[(t * num_rx + r) * num_delay + d]; }
        double &at(std::size_t t, std::size_t r, std::size_t d) { return p[(t * num_rx + r) * num_delay + d]; }

        double pair_sum(std::size_t t, std::size_t r) const
        {
            const double *b = p.data() + (t * num_rx + r) * num_delay;
            return std::accumulate(b, b + num_delay, 0.0);
        }

        double total() const
        {
            double s = 0.0;
            for (std::size_t t = 0; t < num_tx; ++t)
                for (std::size_t r = 0; r < num_rx; ++r)
                    s += pair_sum(t, r);
            return s;
        }
    };

    inline std::vector<double> window_coefficients(Window w, std::size_t n)
    {
        std::vector<double> c(n, 1.0);
        if (w == Window::Hann && n > 1)
            for (std::size_t k = 0; k < n; ++k)
                c[k] = 0.5 - 0.5 * std::cos(2.0 * pi * static_cast<double>(k) / static_cast<double>(n - 1));
        return c;
    }

    inline DirectionalPdp directional_pdp(const CalibratedSpectra &s, Window window = Window::Rectangular)
    {
        DirectionalPdp out;
        out.num_tx = s.num_tx;
        out.num_rx = s.num_rx;
        out.num_delay = s.num_tones;
        out.tx_angles = s.tx_angles;
        out.rx_angles = s.rx_angles;
        out.rx_orientation = s.rx_orientation;
        out.delay_bin = s.delay_bin;
        out.window = window;
        out.p.resize(s.num_tx * s.num_rx * s.num_tones);
        const auto w = window_coefficients(window, s.num_tones);
        const double inv_k = 1.0 / static_cast<double>(s.num_tones);
        std::vector<cplx> buf(s.num_tones);
        for (std::size_t t = 0; t < s.num_tx; ++t)
            for (std::size_t r = 0; r < s.num_rx; ++r)
            {
                const auto x = s.pair(t, r);
                for (std::size_t k = 0; k < s.num_tones; ++k)
                    buf[k] = x[k] * w[k];
                fft::backward(buf);
                double *dst = out.p.data() + (t * s.num_rx + r) * s.num_tones;
                for (std::size_t d = 0; d < s.num_tones; ++d)
                    dst[d] = std::norm(buf[d] * inv_k);
            }
        return out;
    }

    inline DirectionalPdp directional_pdp(const CaptureSet &capture, const CaptureSet &cal,
                                          const ProcessingOptions &opt = {})
    {
        return directional_pdp(calibrated_spectra(capture, cal, opt), opt.window);
    }

    // ----- Noise floor ------------------------------------------------------------------

    // Mean noise power per delay bin of one pair, from the median of its bins (exponential statistics)
    inline double pair_noise_floor(const DirectionalPdp &pdp, std::size_t t, std::size_t r)
    {
        std::vector<double> v(pdp.p.begin() + static_cast<std::ptrdiff_t>((t * pdp.num_rx + r) * pdp.num_delay),
                              pdp.p.begin() + static_cast<std::ptrdiff_t>((t * pdp.num_rx + r + 1) * pdp.num_delay));
        std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
        return v[v.size() / 2] / std::log(2.0);
    }

    // Zeroes every bin below (pair noise floor + margin_db)
    inline DirectionalPdp apply_noise_threshold(const DirectionalPdp &pdp, double margin_db = 6.0)
    {
        DirectionalPdp out = pdp;
        for (std::size_t t = 0; t < pdp.num_tx; ++t)
            for (std::size_t r = 0; r < pdp.num_rx; ++r)
            {
                const double thr = pair_noise_floor(pdp, t, r) * db_to_power(margin_db);
                for (std::size_t d = 0; d < pdp.num_delay; ++d)
                    if (out.at(t, r, d) < thr)
                        out.at(t, r, d) = 0.0;
            }
        return out;
    }

    // ----- Angular products -----------------------------------------------------------

    struct AngularPowerSpectrum
    {
        std::vector<double> tx_angles;     // degrees
        std::vector<double> rx_angles;     // global degrees, orientation-major; sector edges repeat
        std::vector<double> orientations;  // orientation of each RX column
        std::vector<double> p;             // [tx][rx column]

        double at(std::size_t t, std::size_t c) const { return p[t * rx_angles.size() + c]; }

        double total() const
        {
            double s = 0.0;
            for (std::size_t t = 0; t < tx_angles.size(); ++t)
                for (std::size_t c = 0; c < rx_angles.size(); ++c)
                    s += at(t, c);
            return s;
        }
    };

    // Delay-summed power of every pair, placed at the global RX angle (local angle + orientation)
    inline AngularPowerSpectrum pas(std::span<const DirectionalPdp> pdps)
    {
        if (pdps.empty())
            throw InvalidArgument("pas: no directional PDPs given");
        for (std::size_t i = 0; i < pdps.size(); ++i)
            for (std::size_t j = i + 1; j < pdps.size(); ++j)
                if (wrap_degrees(pdps[i].rx_orientation - pdps[j].rx_orientation) == 0.0)
                    throw InvalidArgument("pas: duplicate RX orientation " + std::to_string(pdps[i].rx_orientation));
        const auto &first = pdps.front();
        for (const auto &d : pdps)
            if (d.num_tx != first.num_tx || d.tx_angles != first.tx_angles)
                throw InvalidArgument("pas: TX beam sets differ between orientations");

        std::vector<std::size_t> order(pdps.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            auto norm = [](double o) { return std::fmod(std::fmod(o, 360.0) + 360.0, 360.0); };
            return norm(pdps[a].rx_orientation) < norm(pdps[b].rx_orientation);
        });

        AngularPowerSpectrum out;
        out.tx_angles = first.tx_angles;
        for (auto i : order)
            for (double a : pdps[i].rx_angles)
            {
                out.rx_angles.push_back(wrap_degrees(a + pdps[i].rx_orientation));
                out.orientations.push_back(pdps[i].rx_orientation);
            }
        const std::size_t cols = out.rx_angles.size();
        out.p.assign(first.num_tx * cols, 0.0);
        std::size_t c0 = 0;
        for (auto i : order)
        {
            const auto &d = pdps[i];
            for (std::size_t t = 0; t < d.num_tx; ++t)
                for (std::size_t r = 0; r < d.num_rx; ++r)
                    out.p[t * cols + c0 + r] = d.pair_sum(t, r);
            c0 += d.num_rx;
        }
        return out;
    }

    // Per-delay maximum over all beam pairs of one orientation
    inline std::vector<double> sector_pdp(const DirectionalPdp &pdp)
    {
        std::vector<double> out(pdp.num_delay, 0.0);
        for (std::size_t t = 0; t < pdp.num_tx; ++t)
            for (std::size_t r = 0; r < pdp.num_rx; ++r)
                for (std::size_t d = 0; d < pdp.num_delay; ++d)
                    out[d] = std::max(out[d], pdp.at(t, r, d));
        return out;
    }

    struct Padp
    {
        std::vector<double> rx; // [rx beam][delay], maximum over TX beams
        std::vector<double> tx; // [tx beam][delay], maximum over RX beams
        std::size_t num_tx = 0, num_rx = 0, num_delay = 0;

        double rx_at(std::size_t r, std::size_t d) const { return rx[r * num_delay + d]; }
        double tx_at(std::size_t t, std::size_t d) const { return tx[t * num_delay + d]; }
    };

    inline Padp padp(const DirectionalPdp &pdp)
    {
        Padp out;
        out.num_tx = pdp.num_tx;
        out.num_rx = pdp.num_rx;
        out.num_delay = pdp.num_delay;
        out.rx.assign(pdp.num_rx * pdp.num_delay, 0.0);
        out.tx.assign(pdp.num_tx * pdp.num_delay, 0.0);
        for (std::size_t t = 0; t < pdp.num_tx; ++t)
            for (std::size_t r = 0; r < pdp.num_rx; ++r)
                for (std::size_t d = 0; d < pdp.num_delay; ++d)
                {
                    const double v = pdp.at(t, r, d);
                    out.rx[r * pdp.num_delay + d] = std::max(out.rx[r * pdp.num_delay + d], v);
                    out.tx[t * pdp.num_delay + d] = std::max(out.tx[t * pdp.num_delay + d], v);
                }
        return out;
    }

    // ----- Path loss --------------------------------------------------------------------

    // Peak beam gains removed from the received power so the path loss refers to isotropic antennas
    struct SystemGains
    {
        double tx_gain = 20.0; // dBi
        double rx_gain = 20.0; // dBi

        static SystemGains from(const CaptureMetadata &md)
        {
            return SystemGains{md.tx_codebook.prototype.peak_gain, md.rx_codebook.prototype.peak_gain};
        }
    };

    inline double path_loss_360(std::span<const std::vector<double>> sector_pdps, const SystemGains &gains)
    {
        double total = 0.0;
        for (const auto &s : sector_pdps)
            for (double v : s)
                total += v;
        if (!(total > 0.0))
            throw InvalidArgument("path_loss_360: no received power");
        return gains.tx_gain + gains.rx_gain - power_to_db(total);
    }

    // ----- Path extraction --------------------------------------------------------------

    struct ExtractedPath
    {
        std::size_t delay_index = 0;
        double delay = 0.0;   // seconds
        double aod = 0.0;     // degrees
        double aoa = 0.0;     // degrees, global
        std::size_t tx_index = 0, rx_index = 0;
        double power = 0.0;   // beam-gain de-embedded power gain (linear)
        double peak = 0.0;    // raw PDP value at the peak cell
    };

    struct ExtractionOptions
    {
        std::size_t max_paths = 5;
        std::size_t delay_guard = 2;         // bins masked around each extracted delay
        double min_peak_above_floor_db = 10.0;
        double peak_gain_db = 40.0;          // TX + RX peak beam gain, dBi
    };

    namespace detail
    {
        // Vertex of the parabola through (-1, a), (0, b), (1, c) in dB: offset and peak increase
        inline std::pair<double, double> parabolic_peak(double a, double b, double c)
        {
            const double den = a - 2.0 * b + c;
            if (!(den < 0.0))
                return {0.0, 0.0};
            const double off = std::clamp(0.5 * (a - c) / den, -0.5, 0.5);
            return {off, b - 0.25 * (a - c) * off};
        }
    }

    // Greedy peak picking on the directional PDP. Angles and peak power are refined by a parabola in
    // dB over the neighboring beams of each axis (exact for Gaussian main lobes).
    inline std::vector<ExtractedPath> extract_paths(const DirectionalPdp &pdp, const ExtractionOptions &opt = {})
    {
        std::vector<ExtractedPath> out;
        if (pdp.p.empty())
            return out;
        double floor = 0.0;
        for (std::size_t t = 0; t < pdp.num_tx; ++t)
            for (std::size_t r = 0; r < pdp.num_rx; ++r)
                floor = std::max(floor, pair_noise_floor(pdp, t, r));
        const double min_peak = floor * db_to_power(opt.min_peak_above_floor_db);

        std::vector<char> masked(pdp.num_delay, 0);
        const double step_tx = pdp.num_tx > 1 ? pdp.tx_angles[1] - pdp.tx_angles[0] : 0.0;
        const double step_rx = pdp.num_rx > 1 ? pdp.rx_angles[1] - pdp.rx_angles[0] : 0.0;
        while (out.size() < opt.max_paths)
        {
            double best = -1.0;
            std::size_t bt = 0, br = 0, bd = 0;
            for (std::size_t t = 0; t < pdp.num_tx; ++t)
                for (std::size_t r = 0; r < pdp.num_rx; ++r)
                    for (std::size_t d = 0; d < pdp.num_delay; ++d)
                        if (!masked[d] && pdp.at(t, r, d) > best)
                        {
                            best = pdp.at(t, r, d);
                            bt = t;
                            br = r;
                            bd = d;
                        }
            if (best <= 0.0 || best < min_peak)
                break;

            ExtractedPath e;
            e.delay_index = bd;
            e.delay = static_cast<double>(bd) * pdp.delay_bin;
            e.tx_index = bt;
            e.rx_index = br;
            e.peak = best;
            const double b_db = power_to_db(best);
            double peak_db = b_db, aod = pdp.tx_angles[bt], aoa = pdp.rx_angles[br];
            if (bt > 0 && bt + 1 < pdp.num_tx)
            {
                auto [off, pk] = detail::parabolic_peak(power_to_db(pdp.at(bt - 1, br, bd)), b_db,
                                                        power_to_db(pdp.at(bt + 1, br, bd)));
                aod += off * step_tx;
                peak_db += pk - b_db;
            }
            if (br > 0 && br + 1 < pdp.num_rx)
            {
                auto [off, pk] = detail::parabolic_peak(power_to_db(pdp.at(bt, br - 1, bd)), b_db,
                                                        power_to_db(pdp.at(bt, br + 1, bd)));
                aoa += off * step_rx;
                peak_db += pk - b_db;
            }
            e.aod = aod;
            e.aoa = wrap_degrees(aoa + pdp.rx_orientation);
            e.power = db_to_power(peak_db - opt.peak_gain_db);
            out.push_back(e);

            const std::size_t lo = bd >= opt.delay_guard ? bd - opt.delay_guard : 0;
            const std::size_t hi = std::min(pdp.num_delay - 1, bd + opt.delay_guard);
            for (std::size_t d = lo; d <= hi; ++d)
                masked[d] = 1;
        }
        return out;
    }
}

#endif
