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

// mmsound command-line tool
//
//   mmsound waveform        design the multitone sounding waveform
//   mmsound simulate        simulate captures (one per RX orientation) and the calibration capture
//   mmsound process         directional PDP, PAS, sector PDP, PADP, path loss and paths
//   mmsound budget          link-budget worksheet
//   mmsound sweep describe  timing of the beam-switching schedule
//
// Exit codes: 0 success, 2 configuration error, 3 numerical non-convergence, 4 data integrity.

#include <mmsound/mmsound.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace mmsound;

namespace
{
    constexpr int exit_ok = 0;
    constexpr int exit_config = 2;
    constexpr int exit_nonconvergence = 3;
    constexpr int exit_integrity = 4;

    struct Common
    {
        std::string config_path;
        std::string out;
        std::optional<std::uint64_t> seed;
        std::vector<std::string> set; // section.key=value overrides
    };

    // Flag values are collected as (key, text) and applied over the config file
    using Overrides = std::vector<std::pair<std::string, std::string>>;

    RunConfig resolve(const Common &common, const Overrides &flags)
    {
        RunConfig c;
        if (!common.config_path.empty())
        {
            if (!fs::exists(common.config_path))
                throw ConfigError("configuration file not found: " + common.config_path);
            apply_config_text(c, read_file(common.config_path));
        }
        for (const auto &s : common.set)
        {
            const auto eq = s.find('=');
            if (eq == std::string::npos)
                throw ConfigError("--set expects section.key=value, got '" + s + "'");
            set_config_value(c, s.substr(0, eq), s.substr(eq + 1));
        }
        for (const auto &[k, v] : flags)
            set_config_value(c, k, v);
        if (common.seed)
            c.seed = *common.seed;
        return c;
    }

    void add_common(CLI::App *app, Common &common)
    {
        app->add_option("--config", common.config_path, "configuration file (key = value with [sections])");
        app->add_option("--out", common.out, "output file or directory");
        app->add_option("--seed", common.seed, "random seed");
        app->add_option("--set", common.set, "override a configuration value: section.key=value");
    }

    // Registers a string flag that overrides a configuration key when given
    void add_override(CLI::App *app, Overrides &ov, const std::string &flag, const std::string &key,
                      const std::string &help)
    {
        app->add_option_function<std::string>(
            flag, [&ov, key](const std::string &v) { ov.emplace_back(key, v); }, help);
    }

    std::string orientation_tag(double phi)
    {
        char b[32];
        std::snprintf(b, sizeof b, "%03d", static_cast<int>(std::lround(std::fmod(std::fmod(phi, 360.0) + 360.0, 360.0))));
        return b;
    }

    SoundingWaveform waveform_for(const RunConfig &c, const TonePlan &plan)
    {
        if (!c.waveform_file.empty())
        {
            auto wf = parse_waveform_descriptor(read_file(c.waveform_file));
            if (!(wf.plan == plan))
                throw ConfigError("waveform file does not match the configured tone plan");
            return wf;
        }
        PhaseOptimizerOptions o;
        o.target_papr = c.target_papr;
        o.max_iters = c.max_iters;
        o.seed = c.seed;
        return optimize_phases(plan, o).waveform;
    }

    // ----- waveform ------------------------------------------------------------------------

    int cmd_waveform(const RunConfig &c, const Common &common)
    {
        const auto plan = plan_from(c);
        PhaseOptimizerOptions o;
        o.target_papr = c.target_papr;
        o.max_iters = c.max_iters;
        o.seed = c.seed;
        const auto res = optimize_phases(plan, o);
        const auto &wf = res.waveform;

        std::printf("tones = %zu\n", plan.num_tones);
        std::printf("tone_spacing_hz = %.0f\n", plan.tone_spacing);
        std::printf("bandwidth_mhz = %.3f\n", plan.bandwidth() / 1e6);
        std::printf("duration_us = %.3f\n", wf.duration * 1e6);
        std::printf("papr_db = %.4f\n", wf.papr);
        std::printf("tx_backoff_db = %.4f\n", tx_backoff_db(wf.papr));
        std::printf("target_papr_db = %.4f\n", c.target_papr);
        std::printf("converged = %s\n", res.converged ? "true" : "false");
        std::printf("iterations = %zu\n", res.iterations);
        if (c.compare != "none")
        {
            const auto ref = c.compare == "zadoff-chu" ? zadoff_chu_phases(plan.num_tones, 1) : newman_phases(plan.num_tones);
            const double p = papr_db(ref, plan.oversampling);
            std::printf("compare = %s\n", c.compare.c_str());
            std::printf("compare_papr_db = %.4f\n", p);
            std::printf("advantage_db = %.4f\n", p - wf.papr);
        }
        if (!common.out.empty())
            atomic_write(common.out, waveform_descriptor(wf, res.converged));
        if (!res.converged)
        {
            std::fprintf(stderr, "waveform: PAPR %.4f dB did not reach the target %.4f dB\n", wf.papr, c.target_papr);
            return exit_nonconvergence;
        }
        return exit_ok;
    }

    // ----- simulate -----------------------------------------------------------------------

    int cmd_simulate(const RunConfig &c, const Common &common)
    {
        if (common.out.empty())
            throw ConfigError("simulate: --out <directory> is required");
        fs::create_directories(common.out);
        const auto plan = plan_from(c);
        const auto wf = waveform_for(c, plan);
        const auto tx = codebook_from(c, Side::Tx), rx = codebook_from(c, Side::Rx);
        const auto sched = schedule_from(c);
        const auto clock = clock_from(c);
        const auto fe = front_end_from(c);
        const auto ch = channel_from(c, plan);
        if (c.snapshots < 1)
            throw ConfigError("schedule.snapshots must be at least 1");

        SimulationOptions so;
        so.tx_power = c.tx_power;
        so.ripple = ripple_from(c);
        so.waveform_phases = wf.phases;
        so.snapshot_ticks = snapshot_cadence(sched, c.interval, c.snapshots);
        so.averaging = c.averaging;
        so.threads = c.threads;
        so.channel_label = c.scenario == "los" ? "LOS " + std::to_string(c.distance) + " m" : c.scenario;

        for (double phi : c.orientations)
        {
            so.rx_orientation = phi;
            auto cs = simulate_capture(ch, sched, tx, rx, clock, fe, plan, so, c.seed);
            cs.metadata.extra["resolved_config"] = format_config(c);
            const auto path = fs::path(common.out) / ("capture_phi" + orientation_tag(phi) + ".mmws");
            write_capture(cs, path);
            std::printf("wrote %s (%zu records, orientation %g deg)\n", path.c_str(), cs.records.size(), phi);
        }

        CalibrationOptions co;
        co.mode = c.calibration_mode == "per_beam_pair" ? CalibrationMode::PerBeamPair : CalibrationMode::Shared;
        co.attenuation = c.calibration_attenuation;
        co.tx_power = c.tx_power;
        co.ripple = ripple_from(c);
        co.waveform_phases = wf.phases;
        co.averaging = c.calibration_averaging;
        co.threads = c.threads;
        const auto cal = simulate_calibration(tx, rx, fe, plan, co, c.seed);
        write_capture(cal, fs::path(common.out) / "calibration.mmws");
        atomic_write(fs::path(common.out) / "waveform.txt", waveform_descriptor(wf, wf.papr <= c.target_papr));
        atomic_write(fs::path(common.out) / "config.ini", format_config(c));
        std::printf("wrote %s\n", (fs::path(common.out) / "calibration.mmws").c_str());
        std::printf("# resolved configuration\n%s", format_config(c).c_str());
        return exit_ok;
    }

    // ----- process ------------------------------------------------------------------------

    int cmd_process(const RunConfig &c, const Common &common, const std::vector<std::string> &inputs,
                    const std::string &cal_path)
    {
        if (inputs.empty())
            throw ConfigError("process: at least one capture file is required");
        if (common.out.empty())
            throw ConfigError("process: --out <directory> is required");
        if (cal_path.empty() || !fs::exists(cal_path))
        {
            std::fprintf(stderr, "process: missing calibration file '%s'\n", cal_path.c_str());
            return exit_integrity;
        }
        for (const auto &in : inputs)
            if (!fs::exists(in))
            {
                std::fprintf(stderr, "process: missing capture file '%s'\n", in.c_str());
                return exit_integrity;
            }
        std::vector<CaptureSet> caps;
        for (const auto &in : inputs)
            caps.push_back(read_capture(in));
        const auto cal = read_capture(cal_path);
        const auto prod = process_captures(caps, cal, c);

        fs::create_directories(common.out);
        const fs::path out(common.out);
        std::ostringstream report;
        report.setf(std::ios::fixed);
        report.precision(4);
        report << "# mmsound processing report\n";
        report << "captures = " << caps.size() << "\n";
        report << "calibration = " << cal_path << "\n";
        report << "window = " << c.window << "\n";
        report << "threshold_db = " << (c.threshold_db ? std::to_string(*c.threshold_db) : "none") << "\n";
        report << "path_loss_db = " << prod.path_loss << "\n";
        for (std::size_t i = 0; i < prod.orientations.size(); ++i)
        {
            const auto &op = prod.orientations[i];
            const auto tag = orientation_tag(op.rx_orientation);
            report << "[orientation " << tag << "]\n";
            report << "capture = " << inputs[i] << "\n";
            report << "clock = " << to_string(caps[i].metadata.clock.mode) << "\n";
            if (op.drift)
            {
                const double span = caps[i].metadata.schedule.total_duration();
                const double accumulated = rad_to_deg(op.drift->slope * span);
                const bool residual = !op.drift_applied && std::abs(accumulated) > 1.0;
                report << "drift_slope_deg_per_ms = " << rad_to_deg(op.drift->slope) * 1e-3 << "\n";
                report << "drift_residual_rms_deg = " << rad_to_deg(op.drift->residual_rms) << "\n";
                report << "drift_anchors = " << op.drift->anchors << "\n";
                report << "drift_ambiguous = " << (op.drift->ambiguous ? "true" : "false") << "\n";
                report << "drift_correction_applied = " << (op.drift_applied ? "true" : "false") << "\n";
                report << "residual_drift_flag = " << (residual ? "true" : "false") << "\n";
                if (residual)
                    report << "# warning: uncorrected phase drift of " << accumulated << " deg across the snapshot\n";
            }
            else
                report << "drift = unavailable (fewer than two anchor slots)\n";
            std::size_t clipped = 0;
            for (const auto &r : caps[i].records)
                clipped += r.clipped();
            report << "clipped_records = " << clipped << "\n";
            for (std::size_t p = 0; p < op.paths.size(); ++p)
                report << "path" << p << " = delay_ns " << op.paths[p].delay * 1e9 << " aod_deg " << op.paths[p].aod
                       << " aoa_deg " << op.paths[p].aoa << " power_db " << power_to_db(op.paths[p].power) << "\n";

            atomic_write(out / ("sector_pdp_phi" + tag + ".txt"),
                         format_profile("sector PDP, orientation " + tag + " deg", "delay_ns", prod.delays_ns, op.sector));
            const auto &pdp = op.pdp;
            atomic_write(out / ("padp_rx_phi" + tag + ".txt"),
                         format_grid("PADP (RX), orientation " + tag + " deg", "rx_azimuth_local_deg", pdp.rx_angles,
                                     "delay_ns", prod.delays_ns, op.padp.rx));
            atomic_write(out / ("padp_tx_phi" + tag + ".txt"),
                         format_grid("PADP (TX), orientation " + tag + " deg", "tx_azimuth_deg", pdp.tx_angles,
                                     "delay_ns", prod.delays_ns, op.padp.tx));
        }
        atomic_write(out / "pas.txt", format_grid("angular power spectrum", "tx_azimuth_deg", prod.pas.tx_angles,
                                                  "rx_azimuth_global_deg", prod.pas.rx_angles, prod.pas.p));
        report << "# resolved configuration\n" << format_config(c);
        atomic_write(out / "report.txt", report.str());
        std::printf("path_loss_db = %.4f\n", prod.path_loss);
        std::printf("wrote %s\n", (out / "report.txt").c_str());
        return exit_ok;
    }

    // ----- budget / sweep -------------------------------------------------------------------

    int cmd_budget(const RunConfig &c, const Common &common)
    {
        const auto text = format_budget(c, link_budget(c));
        std::fputs(text.c_str(), stdout);
        if (!common.out.empty())
            atomic_write(common.out, text);
        return exit_ok;
    }

    int cmd_sweep_describe(const RunConfig &c, const Common &common, std::size_t max_slots)
    {
        const auto text = describe(schedule_from(c), max_slots);
        std::fputs(text.c_str(), stdout);
        if (!common.out.empty())
            atomic_write(common.out, text);
        return exit_ok;
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"mmsound: beam-switched mm-wave channel sounder simulation and processing"};
    app.require_subcommand(1);
    app.fallthrough();
    Common common;
    add_common(&app, common);
    Overrides ov;

    auto *wf = app.add_subcommand("waveform", "design the multitone sounding waveform");
    add_common(wf, common);
    add_override(wf, ov, "--tones", "waveform.tones", "number of tones");
    add_override(wf, ov, "--target-papr", "waveform.target_papr_db", "PAPR target in dB");
    add_override(wf, ov, "--max-iters", "waveform.max_iters", "optimizer iteration budget");
    add_override(wf, ov, "--compare", "waveform.compare", "reference phases: zadoff-chu | newman");

    auto *sim = app.add_subcommand("simulate", "simulate captures and the calibration capture");
    add_common(sim, common);
    add_override(sim, ov, "--scenario", "scenario.type", "los | planted | random");
    add_override(sim, ov, "--distance", "scenario.distance", "LOS distance, e.g. 100m");
    add_override(sim, ov, "--mpc-file", "scenario.mpc_file", "planted MPC table");
    add_override(sim, ov, "--clock", "clock.mode", "shared | gps | free");
    add_override(sim, ov, "--orientations", "front_end.orientations", "RX orientations, e.g. 0,90,180,270");
    add_override(sim, ov, "--snapshot-repeat", "schedule.snapshots", "number of snapshots");
    add_override(sim, ov, "--interval", "schedule.interval", "snapshot interval, e.g. 100ms");
    add_override(sim, ov, "--repetitions", "schedule.repetitions", "repetitions per beam pair");
    add_override(sim, ov, "--waveform", "waveform.file", "waveform descriptor to reuse");
    add_override(sim, ov, "--threads", "run.threads", "worker threads (0 = all cores)");

    auto *proc = app.add_subcommand("process", "process captures into channel products");
    add_common(proc, common);
    std::vector<std::string> inputs;
    std::string cal_path;
    bool no_drift = false;
    proc->add_option("captures", inputs, "capture files (one per RX orientation)");
    proc->add_option("--cal", cal_path, "calibration capture");
    proc->add_flag("--no-drift-correction", no_drift, "skip clock drift correction");
    add_override(proc, ov, "--window", "processing.window", "rectangular | hann");
    add_override(proc, ov, "--threshold-db", "processing.threshold_db", "noise threshold above floor, or none");

    auto *bud = app.add_subcommand("budget", "link-budget worksheet");
    add_common(bud, common);
    add_override(bud, ov, "--eirp", "budget.eirp", "EIRP in dBm");
    add_override(bud, ov, "--rx-gain", "budget.rx_gain", "RX antenna gain in dBi");
    add_override(bud, ov, "--nf", "front_end.noise_figure", "noise figure in dB");
    add_override(bud, ov, "--bandwidth", "budget.bandwidth", "bandwidth, e.g. 400MHz");
    add_override(bud, ov, "--snr", "budget.required_snr", "required SNR in dB");
    add_override(bud, ov, "--averaging", "budget.averaging", "coherent averaging factor");

    auto *sweep = app.add_subcommand("sweep", "beam-switching schedule tools");
    sweep->require_subcommand(1);
    auto *desc = sweep->add_subcommand("describe", "print the schedule timing");
    add_common(desc, common);
    std::size_t max_slots = 20;
    desc->add_option("--max-slots", max_slots, "slots listed");
    add_override(desc, ov, "--repetitions", "schedule.repetitions", "repetitions per beam pair");
    add_override(desc, ov, "--guard", "schedule.guard_time", "guard time, e.g. 2us");
    add_override(desc, ov, "--waveform-duration", "schedule.waveform_duration", "waveform duration, e.g. 2us");
    add_override(desc, ov, "--anchors", "schedule.anchors", "natural | interleaved | none");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_config;
    }

    try
    {
        if (no_drift)
            ov.emplace_back("processing.drift", "off");
        const RunConfig cfg = resolve(common, ov);
        if (wf->parsed())
            return cmd_waveform(cfg, common);
        if (sim->parsed())
            return cmd_simulate(cfg, common);
        if (proc->parsed())
            return cmd_process(cfg, common, inputs, cal_path);
        if (bud->parsed())
            return cmd_budget(cfg, common);
        if (desc->parsed())
            return cmd_sweep_describe(cfg, common, max_slots);
        return exit_config;
    }
    catch (const HardwareLimitWarning &e)
    {
        std::fprintf(stderr, "configuration error: %s (set schedule.allow_fast_switching = true to override)\n", e.what());
        return exit_config;
    }
    catch (const InvalidArgument &e)
    {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return exit_config;
    }
    catch (const DataIntegrityError &e)
    {
        std::fprintf(stderr, "data integrity error: %s\n", e.what());
        return exit_integrity;
    }
    catch (const std::exception &e)
    {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
