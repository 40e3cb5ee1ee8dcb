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

#ifndef MMSOUND_CONFIG_HPP
#define MMSOUND_CONFIG_HPP

// Run configuration: line-oriented "key = value" text with [section] headers ('#' or ';' comments).
// Defaults reproduce the reference sounder setup (801 tones at 500 kHz, 2 us waveform, 2 us guard,
// 10 repetitions, 19 x 19 azimuth beams). Values given as overrides take precedence over the file,
// and format_config() prints the fully resolved configuration.

#include "common.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace mmsound
{
    struct RunConfig
    {
        // [run]
        std::uint64_t seed = 1;
        unsigned threads = 1;
        // [waveform]
        std::size_t tones = 801;
        double tone_spacing = 500e3; // Hz
        double start_freq = 50e6;    // Hz
        std::size_t oversampling = 4;
        double target_papr = 0.5; // dB
        std::size_t max_iters = 5000;
        std::string compare = "none"; // none | zadoff-chu | newman
        std::string waveform_file;    // reuse the phases of a descriptor
        // [scenario]
        std::string scenario = "los"; // los | planted | random
        double distance = 100.0;      // m
        std::string mpc_file;
        std::size_t scatter_count = 5;
        double carrier = 27.85e9; // Hz
        // [schedule]
        std::size_t repetitions = 10;
        double waveform_duration = 2e-6; // s
        double guard_time = 2e-6;        // s
        std::string anchors = "natural"; // natural | interleaved | none
        std::size_t anchor_period = 50;
        bool allow_fast_switching = false;
        std::size_t snapshots = 1;
        double interval = 0.1; // s
        double pps_offset_tx = 0.0, pps_offset_rx = 0.0; // s
        // [beams]
        std::string pattern = "parametric"; // parametric | array_factor
        double peak_gain = 20.0;            // dBi
        double az_hpbw = 12.0, el_hpbw = 22.0;
        double sidelobe = -10.0; // dB
        // [clock]
        std::string clock = "shared"; // shared | gps | free
        // [front_end]
        double tx_power = 37.0; // dBm conducted
        double noise_figure = 5.0;
        bool thermal_noise = true;
        int adc_bits = 10; // 0 bypasses AGC and quantization
        double agc_min = -20.0, agc_max = 80.0;
        std::size_t averaging = 1;
        std::vector<double> orientations{0.0, 90.0, 180.0, 270.0};
        // [impairments]
        bool ripple = true;
        double ripple_db = 1.0;
        // [calibration]
        std::string calibration_mode = "shared"; // shared | per_beam_pair
        double calibration_attenuation = 60.0;   // dB
        std::size_t calibration_averaging = 10;
        // [processing]
        std::string window = "rectangular"; // rectangular | hann
        std::string drift = "auto";         // auto | on | off
        std::optional<double> threshold_db = 6.0;
        std::size_t max_paths = 5;
        // [budget]
        double eirp = 57.0;      // dBm
        double rx_gain = 20.0;   // dBi
        double bandwidth = 400e6; // Hz
        double required_snr = 1.0; // dB
        std::size_t budget_averaging = 1;
    };

    class ConfigError : public InvalidArgument
    {
    public:
        using InvalidArgument::InvalidArgument;
    };

    // Parses a number with an optional unit suffix into SI units, e.g. "4MHz", "100ms", "2us"
    inline double parse_quantity(const std::string &text)
    {
        std::size_t pos = 0;
        double v;
        try
        {
            v = std::stod(text, &pos);
        }
        catch (const std::exception &)
        {
            throw ConfigError("not a number: '" + text + "'");
        }
        std::string unit = text.substr(pos);
        unit.erase(0, unit.find_first_not_of(' '));
        static const std::pair<const char *, double> units[] = {
            {"", 1.0},      {"Hz", 1.0},   {"kHz", 1e3},  {"MHz", 1e6}, {"GHz", 1e9}, {"s", 1.0},
            {"ms", 1e-3},   {"us", 1e-6},  {"ns", 1e-9},  {"m", 1.0},   {"km", 1e3},  {"dB", 1.0},
            {"dBm", 1.0},   {"dBi", 1.0},  {"deg", 1.0}};
        for (const auto &[name, scale] : units)
            if (unit == name)
                return v * scale;
        throw ConfigError("unknown unit '" + unit + "' in '" + text + "'");
    }

    namespace detail
    {
        struct ConfigField
        {
            const char *section;
            const char *key;
            std::function<void(RunConfig &, const std::string &)> set;
            std::function<std::string(const RunConfig &)> get;
        };

        inline std::string num(double v)
        {
            std::ostringstream os;
            os.precision(12);
            os << v;
            return os.str();
        }

        inline bool parse_bool(const std::string &s)
        {
            if (s == "true" || s == "on" || s == "yes" || s == "1")
                return true;
            if (s == "false" || s == "off" || s == "no" || s == "0")
                return false;
            throw ConfigError("not a boolean: '" + s + "'");
        }

        inline std::size_t parse_count(const std::string &s)
        {
            const double v = parse_quantity(s);
            if (v < 0.0 || v != std::floor(v))
                throw ConfigError("not a non-negative integer: '" + s + "'");
            return static_cast<std::size_t>(v);
        }

        inline std::string parse_choice(const std::string &s, std::initializer_list<const char *> allowed)
        {
            for (const char *a : allowed)
                if (s == a)
                    return s;
            std::string list;
            for (const char *a : allowed)
                list += std::string(list.empty() ? "" : ", ") + a;
            throw ConfigError("invalid value '" + s + "' (allowed: " + list + ")");
        }

        inline std::vector<double> parse_list(const std::string &s)
        {
            std::vector<double> out;
            std::stringstream ss(s);
            std::string item;
            while (std::getline(ss, item, ','))
                out.push_back(parse_quantity(item));
            if (out.empty())
                throw ConfigError("empty list");
            return out;
        }

#define MMSOUND_NUM(sec, key, member)                                                                              \
    ConfigField { sec, key, [](RunConfig &c, const std::string &v) { c.member = parse_quantity(v); },               \
                  [](const RunConfig &c) { return num(c.member); } }
#define MMSOUND_CNT(sec, key, member)                                                                              \
    ConfigField { sec, key, [](RunConfig &c, const std::string &v) { c.member = parse_count(v); },                  \
                  [](const RunConfig &c) { return std::to_string(c.member); } }
#define MMSOUND_BOOL(sec, key, member)                                                                             \
    ConfigField { sec, key, [](RunConfig &c, const std::string &v) { c.member = parse_bool(v); },                   \
                  [](const RunConfig &c) { return std::string(c.member ? "true" : "false"); } }
#define MMSOUND_STR(sec, key, member)                                                                              \
    ConfigField { sec, key, [](RunConfig &c, const std::string &v) { c.member = v; },                              \
                  [](const RunConfig &c) { return c.member; } }
#define MMSOUND_CHOICE(sec, key, member, ...)                                                                      \
    ConfigField { sec, key, [](RunConfig &c, const std::string &v) { c.member = parse_choice(v, {__VA_ARGS__}); }, \
                  [](const RunConfig &c) { return c.member; } }

        inline const std::vector<ConfigField> &config_fields()
        {
            static const std::vector<ConfigField> fields = {
                ConfigField{"run", "seed",
                            [](RunConfig &c, const std::string &v) {
                                try
                                {
                                    c.seed = std::stoull(v);
                                }
                                catch (const std::exception &)
                                {
                                    throw ConfigError("invalid seed '" + v + "'");
                                }
                            },
                            [](const RunConfig &c) { return std::to_string(c.seed); }},
                MMSOUND_CNT("run", "threads", threads),
                MMSOUND_CNT("waveform", "tones", tones),
                MMSOUND_NUM("waveform", "tone_spacing", tone_spacing),
                MMSOUND_NUM("waveform", "start_freq", start_freq),
                MMSOUND_CNT("waveform", "oversampling", oversampling),
                MMSOUND_NUM("waveform", "target_papr_db", target_papr),
                MMSOUND_CNT("waveform", "max_iters", max_iters),
                MMSOUND_CHOICE("waveform", "compare", compare, "none", "zadoff-chu", "newman"),
                MMSOUND_STR("waveform", "file", waveform_file),
                MMSOUND_CHOICE("scenario", "type", scenario, "los", "planted", "random"),
                MMSOUND_NUM("scenario", "distance", distance),
                MMSOUND_STR("scenario", "mpc_file", mpc_file),
                MMSOUND_CNT("scenario", "scatter_count", scatter_count),
                MMSOUND_NUM("scenario", "carrier", carrier),
                MMSOUND_CNT("schedule", "repetitions", repetitions),
                MMSOUND_NUM("schedule", "waveform_duration", waveform_duration),
                MMSOUND_NUM("schedule", "guard_time", guard_time),
                MMSOUND_CHOICE("schedule", "anchors", anchors, "natural", "interleaved", "none"),
                MMSOUND_CNT("schedule", "anchor_period", anchor_period),
                MMSOUND_BOOL("schedule", "allow_fast_switching", allow_fast_switching),
                MMSOUND_CNT("schedule", "snapshots", snapshots),
                MMSOUND_NUM("schedule", "interval", interval),
                MMSOUND_NUM("schedule", "pps_offset_tx", pps_offset_tx),
                MMSOUND_NUM("schedule", "pps_offset_rx", pps_offset_rx),
                MMSOUND_CHOICE("beams", "pattern", pattern, "parametric", "array_factor"),
                MMSOUND_NUM("beams", "peak_gain", peak_gain),
                MMSOUND_NUM("beams", "az_hpbw", az_hpbw),
                MMSOUND_NUM("beams", "el_hpbw", el_hpbw),
                MMSOUND_NUM("beams", "sidelobe", sidelobe),
                MMSOUND_CHOICE("clock", "mode", clock, "shared", "gps", "free"),
                MMSOUND_NUM("front_end", "tx_power", tx_power),
                MMSOUND_NUM("front_end", "noise_figure", noise_figure),
                MMSOUND_BOOL("front_end", "thermal_noise", thermal_noise),
                ConfigField{"front_end", "adc_bits",
                            [](RunConfig &c, const std::string &v) {
                                const auto b = parse_count(v);
                                if (b > 16)
                                    throw ConfigError("adc_bits must be at most 16");
                                c.adc_bits = static_cast<int>(b);
                            },
                            [](const RunConfig &c) { return std::to_string(c.adc_bits); }},
                MMSOUND_NUM("front_end", "agc_min", agc_min),
                MMSOUND_NUM("front_end", "agc_max", agc_max),
                MMSOUND_CNT("front_end", "averaging", averaging),
                ConfigField{"front_end", "orientations",
                            [](RunConfig &c, const std::string &v) { c.orientations = parse_list(v); },
                            [](const RunConfig &c) {
                                std::string s;
                                for (double o : c.orientations)
                                    s += (s.empty() ? "" : ",") + num(o);
                                return s;
                            }},
                MMSOUND_BOOL("impairments", "ripple", ripple),
                MMSOUND_NUM("impairments", "ripple_db", ripple_db),
                MMSOUND_CHOICE("calibration", "mode", calibration_mode, "shared", "per_beam_pair"),
                MMSOUND_NUM("calibration", "attenuation", calibration_attenuation),
                MMSOUND_CNT("calibration", "averaging", calibration_averaging),
                MMSOUND_CHOICE("processing", "window", window, "rectangular", "hann"),
                MMSOUND_CHOICE("processing", "drift", drift, "auto", "on", "off"),
                ConfigField{"processing", "threshold_db",
                            [](RunConfig &c, const std::string &v) {
                                if (v == "none")
                                    c.threshold_db.reset();
                                else
                                    c.threshold_db = parse_quantity(v);
                            },
                            [](const RunConfig &c) { return c.threshold_db ? num(*c.threshold_db) : std::string("none"); }},
                MMSOUND_CNT("processing", "max_paths", max_paths),
                MMSOUND_NUM("budget", "eirp", eirp),
                MMSOUND_NUM("budget", "rx_gain", rx_gain),
                MMSOUND_NUM("budget", "bandwidth", bandwidth),
                MMSOUND_NUM("budget", "required_snr", required_snr),
                MMSOUND_CNT("budget", "averaging", budget_averaging),
            };
            return fields;
        }

#undef MMSOUND_NUM
#undef MMSOUND_CNT
#undef MMSOUND_BOOL
#undef MMSOUND_STR
#undef MMSOUND_CHOICE
    }

    // Sets "section.key" to a textual value
    inline void set_config_value(RunConfig &c, const std::string &dotted, const std::string &value)
    {
        const auto dot = dotted.find('.');
        if (dot == std::string::npos)
            throw ConfigError("configuration key '" + dotted + "' must be of the form section.key");
        const std::string sec = dotted.substr(0, dot), key = dotted.substr(dot + 1);
        for (const auto &f : detail::config_fields())
            if (sec == f.section && key == f.key)
            {
                try
                {
                    f.set(c, value);
                }
                catch (const ConfigError &e)
                {
                    throw ConfigError(dotted + ": " + e.what());
                }
                return;
            }
        throw ConfigError("unknown configuration key '" + dotted + "'");
    }

    inline void apply_config_text(RunConfig &c, const std::string &text)
    {
        namespace pt = boost::property_tree;
        pt::ptree tree;
        std::istringstream is(text);
        try
        {
            pt::read_ini(is, tree);
        }
        catch (const pt::ini_parser_error &e)
        {
            throw ConfigError(std::string("configuration syntax error: ") + e.what());
        }
        for (const auto &[sec, body] : tree)
        {
            if (body.empty())
                throw ConfigError("configuration key '" + sec + "' outside a [section]");
            for (const auto &[key, val] : body)
                set_config_value(c, sec + "." + key, val.get_value<std::string>());
        }
    }

    inline std::string format_config(const RunConfig &c)
    {
        std::ostringstream os;
        std::string sec;
        for (const auto &f : detail::config_fields())
        {
            if (sec != f.section)
            {
                sec = f.section;
                os << "[" << sec << "]\n";
            }
            os << f.key << " = " << f.get(c) << "\n";
        }
        return os.str();
    }
}

#endif
