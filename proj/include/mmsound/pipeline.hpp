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

#ifndef MMSOUND_PIPELINE_HPP
#define MMSOUND_PIPELINE_HPP

// Builds the pipeline objects from a RunConfig and runs the command-level operations
// (link budget, capture processing) shared by the command-line tool and the tests.

#include "capture.hpp"
#include "config.hpp"
#include "io.hpp"
#include "processing.hpp"

#include <sstream>

namespace mmsound
{
    inline TonePlan plan_from(const RunConfig &c)
    {
        return make_tone_plan(c.tones, c.tone_spacing, c.start_freq, c.oversampling);
    }

    inline BeamCodebook codebook_from(const RunConfig &c, Side side)
    {
        auto cb = default_codebook(side, c.pattern == "array_factor" ? PatternModel::ArrayFactor : PatternModel::Parametric);
        cb.prototype.peak_gain = c.peak_gain;
        cb.prototype.az_hpbw = c.az_hpbw;
        cb.prototype.sidelobe_floor = c.sidelobe;
        if (c.el_hpbw != cb.prototype.el_hpbw)
        {
            cb.prototype.el_hpbw = c.el_hpbw;
            if (cb.model == PatternModel::ArrayFactor)
                cb.prototype.element_el_exponent = fit_element_elevation_exponent(cb.prototype.element_grid, c.el_hpbw);
        }
        return cb;
    }

    inline RxFrontEnd front_end_from(const RunConfig &c)
    {
        RxFrontEnd fe;
        fe.noise_figure = c.thermal_noise ? c.noise_figure : -std::numeric_limits<double>::infinity();
        if (c.adc_bits > 0)
            fe.adc_bits = c.adc_bits;
        else
            fe.adc_bits.reset();
        fe.agc_min = c.agc_min;
        fe.agc_max = c.agc_max;
        return fe;
    }

    inline SweepSchedule schedule_from(const RunConfig &c)
    {
        AnchorPolicy a;
        a.kind = c.anchors == "interleaved" ? AnchorPolicy::Kind::Interleaved
                 : c.anchors == "none"      ? AnchorPolicy::Kind::None
                                            : AnchorPolicy::Kind::Natural;
        a.period = c.anchor_period;
        TriggerModel t;
        t.pps_offset_tx = c.pps_offset_tx;
        t.pps_offset_rx = c.pps_offset_rx;
        return build_schedule(codebook_from(c, Side::Tx).azimuth_sweep(), codebook_from(c, Side::Rx).azimuth_sweep(),
                              c.repetitions, c.waveform_duration, c.guard_time, a, t, c.allow_fast_switching);
    }

    inline ClockModel clock_from(const RunConfig &c)
    {
        const ClockMode m = c.clock == "free" ? ClockMode::FreeRunning
                            : c.clock == "gps" ? ClockMode::GpsDisciplined
                                               : ClockMode::Shared;
        return make_clock_model(m, c.seed);
    }

    inline RippleConfig ripple_from(const RunConfig &c)
    {
        RippleConfig r;
        r.enabled = c.ripple;
        r.peak_db = c.ripple_db;
        r.seed = c.seed;
        return r;
    }

    inline ChannelRealization channel_from(const RunConfig &c, const TonePlan &plan)
    {
        if (c.scenario == "los")
            return los_channel(c.distance, c.carrier);
        if (c.scenario == "planted")
        {
            if (c.mpc_file.empty())
                throw ConfigError("scenario.mpc_file is required for a planted scenario");
            return planted_nlos_channel(parse_planted_spec(read_file(c.mpc_file)), c.seed, plan.period(), c.carrier);
        }
        ScatterOptions so;
        so.count = c.scatter_count;
        return planted_nlos_channel(random_scatter_spec(plan, c.seed, so), c.seed, plan.period(), c.carrier);
    }

    // ----- Waveform descriptor -------------------------------------------------------------

    inline SoundingWaveform parse_waveform_descriptor(const std::string &text)
    {
        namespace pt = boost::property_tree;
        pt::ptree tree;
        std::istringstream is(text);
        try
        {
            pt::read_ini(is, tree);
            const auto plan = make_tone_plan(tree.get<std::size_t>("waveform.num_tones"),
                                             tree.get<double>("waveform.tone_spacing"),
                                             tree.get<double>("waveform.start_freq"),
                                             tree.get<std::size_t>("waveform.oversampling"));
            std::vector<double> phases(plan.num_tones);
            const auto &ph = tree.get_child("phases");
            if (ph.size() != plan.num_tones)
                throw ConfigError("waveform descriptor lists " + std::to_string(ph.size()) + " phases for " +
                                  std::to_string(plan.num_tones) + " tones");
            for (std::size_t k = 0; k < plan.num_tones; ++k)
                phases[k] = ph.get<double>(std::to_string(k));
            return make_waveform(plan, phases);
        }
        catch (const pt::ptree_error &e)
        {
            throw ConfigError(std::string("invalid waveform descriptor: ") + e.what());
        }
    }

    // ----- Link budget ---------------------------------------------------------------------

    struct BudgetReport
    {
        double noise_floor = 0.0;       // dBm over the bandwidth
        double averaging_gain = 0.0;    // dB
        double max_path_loss = 0.0;     // dB
    };

    inline BudgetReport link_budget(const RunConfig &c)
    {
        if (c.budget_averaging < 1)
            throw ConfigError("budget.averaging must be at least 1");
        BudgetReport r;
        r.noise_floor = noise_floor_dbm(c.bandwidth, c.noise_figure);
        r.averaging_gain = 10.0 * std::log10(static_cast<double>(c.budget_averaging));
        r.max_path_loss = link_budget_db(c.eirp, c.rx_gain, c.noise_figure, c.bandwidth, c.required_snr) + r.averaging_gain;
        return r;
    }

    inline std::string format_budget(const RunConfig &c, const BudgetReport &r)
    {
        std::ostringstream os;
        os.setf(std::ios::fixed);
        os.precision(2);
        os << "# link budget\n";
        os << "eirp_dbm = " << c.eirp << "\n";
        os << "rx_gain_dbi = " << c.rx_gain << "\n";
        os << "thermal_noise_dbm_per_hz = " << thermal_noise_dbm_per_hz << "\n";
        os << "bandwidth_db_hz = " << 10.0 * std::log10(c.bandwidth) << "\n";
        os << "noise_figure_db = " << c.noise_figure << "\n";
        os << "noise_floor_dbm = " << r.noise_floor << "\n";
        os << "required_snr_db = " << c.required_snr << "\n";
        os << "averaging_gain_db = " << r.averaging_gain << "\n";
        os << "max_path_loss_db = " << r.max_path_loss << "\n";
        return os.str();
    }

    // ----- Processing ------------------------------------------------------------------------

    struct OrientationProducts
    {
        double rx_orientation = 0.0;
        DirectionalPdp pdp;       // after the noise threshold (if any)
        std::vector<double> sector;
        Padp padp;
        std::optional<DriftEstimate> drift; // estimated on the capture, also when not applied
        bool drift_applied = false;
        std::vector<ExtractedPath> paths;
    };

    struct Products
    {
        std::vector<OrientationProducts> orientations;
        AngularPowerSpectrum pas;
        double path_loss = 0.0;
        std::vector<double> delays_ns;
    };

    inline ProcessingOptions processing_options_from(const RunConfig &c)
    {
        ProcessingOptions o;
        o.window = c.window == "hann" ? Window::Hann : Window::Rectangular;
        o.drift = c.drift == "on" ? DriftCorrection::On : c.drift == "off" ? DriftCorrection::Off : DriftCorrection::Auto;
        return o;
    }

    inline Products process_captures(const std::vector<CaptureSet> &captures, const CaptureSet &cal, const RunConfig &c)
    {
        if (captures.empty())
            throw InvalidArgument("process: no captures given");
        const auto opt = processing_options_from(c);
        Products out;
        std::vector<DirectionalPdp> pdps;
        std::vector<std::vector<double>> sectors;
        for (const auto &cs : captures)
        {
            OrientationProducts op;
            op.rx_orientation = cs.metadata.rx_orientation;
            auto spectra = calibrated_spectra(cs, cal, opt);
            op.drift_applied = spectra.drift.has_value();
            op.drift = spectra.drift;
            if (!op.drift)
            {
                try
                {
                    op.drift = estimate_drift(cs, opt.snapshot);
                }
                catch (const InvalidArgument &)
                {
                }
            }
            auto pdp = directional_pdp(spectra, opt.window);
            op.pdp = c.threshold_db ? apply_noise_threshold(pdp, *c.threshold_db) : pdp;
            op.sector = sector_pdp(op.pdp);
            op.padp = padp(op.pdp);
            ExtractionOptions eo;
            eo.max_paths = c.max_paths;
            eo.peak_gain_db = cs.metadata.tx_codebook.prototype.peak_gain + cs.metadata.rx_codebook.prototype.peak_gain;
            op.paths = extract_paths(pdp, eo);
            pdps.push_back(op.pdp);
            sectors.push_back(op.sector);
            out.orientations.push_back(std::move(op));
        }
        out.pas = pas(pdps);
        out.path_loss = path_loss_360(sectors, SystemGains::from(captures.front().metadata));
        for (std::size_t d = 0; d < pdps.front().num_delay; ++d)
            out.delays_ns.push_back(static_cast<double>(d) * pdps.front().delay_bin * 1e9);
        return out;
    }
}

#endif
