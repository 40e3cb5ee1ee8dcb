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

#ifndef MMSOUND_IO_HPP
#define MMSOUND_IO_HPP

// Persistence: the binary capture container, the raw-sample sidecar, waveform descriptors,
// planted-channel tables and product tables.
//
// Capture container (all integers little-endian):
//   offset      size  field
//   0           4     magic "MMWS"
//   4           2     version (1)
//   6           2     reserved (0)
//   8           4     metadata length L
//   12          L     metadata, UTF-8 JSON
//   12+L        4     number of tones K
//   16+L        4     number of records R
//   20+L        R*S   records, stride S = 16 + 16 K:
//                       u32 slot index, i16 AGC gain (0.01 dB), u16 flags, 8 reserved bytes,
//                       K x (f64 I, f64 Q)
//   20+L+R*S    4     CRC-32 (zlib polynomial) of all preceding bytes

#include "capture.hpp"
#include "common.hpp"
#include "waveform.hpp"

#include <nlohmann/json.hpp>
#include <zlib.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace mmsound
{
    static_assert(std::endian::native == std::endian::little, "mmsound io assumes a little-endian host");

    inline constexpr char capture_magic[4] = {'M', 'M', 'W', 'S'};
    inline constexpr char raw_magic[4] = {'M', 'M', 'W', 'R'};
    inline constexpr std::uint16_t capture_version = 1;
    inline constexpr std::size_t record_header_size = 16;

    class FormatError : public DataIntegrityError
    {
    public:
        enum class Kind
        {
            BadMagic,
            UnsupportedVersion,
            Truncated,
            CrcMismatch,
            Malformed,
            Io
        };

        FormatError(Kind kind, const std::string &msg, std::size_t offset = 0)
            : DataIntegrityError(msg), kind_(kind), offset_(offset)
        {
        }

        Kind kind() const { return kind_; }
        std::size_t offset() const { return offset_; }

    private:
        Kind kind_;
        std::size_t offset_;
    };

    inline std::uint32_t crc32_of(const std::uint8_t *data, std::size_t n)
    {
        uLong crc = crc32(0L, Z_NULL, 0);
        while (n > 0)
        {
            const uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
            crc = crc32(crc, data, chunk);
            data += chunk;
            n -= chunk;
        }
        return static_cast<std::uint32_t>(crc);
    }

    // ----- Files ------------------------------------------------------------------------

    // Writes via a temporary file in the same directory and renames it over the target
    inline void atomic_write(const std::filesystem::path &path, const std::string &bytes)
    {
        auto tmp = path;
        tmp += ".tmp" + std::to_string(std::random_device{}());
        {
            std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
            if (!f)
                throw FormatError(FormatError::Kind::Io, "cannot open " + tmp.string() + " for writing");
            f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
            f.flush();
            if (!f)
            {
                std::error_code ec;
                std::filesystem::remove(tmp, ec);
                throw FormatError(FormatError::Kind::Io, "write failed for " + tmp.string());
            }
        }
        std::error_code ec;
        std::filesystem::rename(tmp, path, ec);
        if (ec)
        {
            std::filesystem::remove(tmp, ec);
            throw FormatError(FormatError::Kind::Io, "cannot rename onto " + path.string());
        }
    }

    inline std::string read_file(const std::filesystem::path &path)
    {
        std::ifstream f(path, std::ios::binary);
        if (!f)
            throw FormatError(FormatError::Kind::Io, "cannot open " + path.string());
        std::ostringstream ss;
        ss << f.rdbuf();
        return ss.str();
    }

    namespace detail
    {
        template <typename T>
        void put(std::string &out, T v)
        {
            char b[sizeof(T)];
            std::memcpy(b, &v, sizeof(T));
            out.append(b, sizeof(T));
        }

        template <typename T>
        T get(const std::string &in, std::size_t off)
        {
            T v;
            std::memcpy(&v, in.data() + off, sizeof(T));
            return v;
        }
    }

    // ----- Metadata JSON -----------------------------------------------------------------

    namespace detail
    {
        using nlohmann::json;

        inline json plan_to_json(const TonePlan &p)
        {
            return {{"num_tones", p.num_tones},
                    {"tone_spacing", p.tone_spacing},
                    {"start_freq", p.start_freq},
                    {"oversampling", p.oversampling}};
        }

        inline TonePlan plan_from_json(const json &j)
        {
            return make_tone_plan(j.at("num_tones").get<std::size_t>(), j.at("tone_spacing").get<double>(),
                                  j.at("start_freq").get<double>(), j.at("oversampling").get<std::size_t>());
        }

        inline json pattern_to_json(const BeamPattern &p)
        {
            return {{"model", to_string(p.model)},
                    {"peak_gain", p.peak_gain},
                    {"az_hpbw", p.az_hpbw},
                    {"el_hpbw", p.el_hpbw},
                    {"sidelobe_floor", p.sidelobe_floor},
                    {"back_lobe", p.back_lobe},
                    {"element_rows", p.element_grid.rows},
                    {"element_cols", p.element_grid.cols},
                    {"element_spacing", p.element_grid.spacing},
                    {"element_az_exponent", p.element_az_exponent},
                    {"element_el_exponent", p.element_el_exponent},
                    {"steer_az", p.steer_az},
                    {"steer_el", p.steer_el}};
        }

        inline PatternModel model_from_string(const std::string &s)
        {
            if (s == "PARAMETRIC")
                return PatternModel::Parametric;
            if (s == "ARRAY_FACTOR")
                return PatternModel::ArrayFactor;
            throw InvalidArgument("unknown pattern model '" + s + "'");
        }

        inline BeamPattern pattern_from_json(const json &j)
        {
            BeamPattern p;
            p.model = model_from_string(j.at("model").get<std::string>());
            p.peak_gain = j.at("peak_gain");
            p.az_hpbw = j.at("az_hpbw");
            p.el_hpbw = j.at("el_hpbw");
            p.sidelobe_floor = j.at("sidelobe_floor");
            p.back_lobe = j.at("back_lobe");
            p.element_grid.rows = j.at("element_rows");
            p.element_grid.cols = j.at("element_cols");
            p.element_grid.spacing = j.at("element_spacing");
            p.element_az_exponent = j.at("element_az_exponent");
            p.element_el_exponent = j.at("element_el_exponent");
            p.steer_az = j.at("steer_az");
            p.steer_el = j.at("steer_el");
            return p;
        }

        inline json codebook_to_json(const BeamCodebook &c)
        {
            return {{"side", to_string(c.side)},
                    {"model", to_string(c.model)},
                    {"num_azimuth", c.grid.num_azimuth},
                    {"num_elevation", c.grid.num_elevation},
                    {"azimuth_start", c.grid.azimuth_start},
                    {"elevation_start", c.grid.elevation_start},
                    {"step", c.grid.step},
                    {"orientation", c.orientation},
                    {"prototype", pattern_to_json(c.prototype)}};
        }

        inline Side side_from_string(const std::string &s)
        {
            if (s == "TX")
                return Side::Tx;
            if (s == "RX")
                return Side::Rx;
            throw InvalidArgument("unknown side '" + s + "'");
        }

        inline BeamCodebook codebook_from_json(const json &j)
        {
            BeamCodebook c;
            c.side = side_from_string(j.at("side").get<std::string>());
            c.model = model_from_string(j.at("model").get<std::string>());
            c.grid.num_azimuth = j.at("num_azimuth");
            c.grid.num_elevation = j.at("num_elevation");
            c.grid.azimuth_start = j.at("azimuth_start");
            c.grid.elevation_start = j.at("elevation_start");
            c.grid.step = j.at("step");
            c.orientation = j.at("orientation");
            c.prototype = pattern_from_json(j.at("prototype"));
            return c;
        }

        inline json beams_to_json(const std::vector<BeamId> &beams)
        {
            json a = json::array();
            for (const auto &b : beams)
                a.push_back({b.azimuth_index, b.elevation_index, to_string(b.side)});
            return a;
        }

        inline std::vector<BeamId> beams_from_json(const json &j)
        {
            std::vector<BeamId> out;
            for (const auto &e : j)
                out.push_back(BeamId{e.at(0).get<int>(), e.at(1).get<int>(), side_from_string(e.at(2).get<std::string>())});
            return out;
        }

        inline AnchorPolicy::Kind anchor_kind_from_string(const std::string &s)
        {
            if (s == "natural")
                return AnchorPolicy::Kind::Natural;
            if (s == "interleaved")
                return AnchorPolicy::Kind::Interleaved;
            if (s == "none")
                return AnchorPolicy::Kind::None;
            throw InvalidArgument("unknown anchor policy '" + s + "'");
        }

        inline json schedule_to_json(const SweepSchedule &s)
        {
            return {{"tx_beams", beams_to_json(s.tx_beams)},
                    {"rx_beams", beams_to_json(s.rx_beams)},
                    {"repetitions", s.repetitions},
                    {"waveform_duration", s.waveform_duration},
                    {"guard_time", s.guard_time},
                    {"anchor_policy",
                     {{"kind", to_string(s.anchor_policy.kind)},
                      {"period", s.anchor_policy.period},
                      {"tx_azimuth_index", s.anchor_policy.tx_azimuth_index},
                      {"rx_azimuth_index", s.anchor_policy.rx_azimuth_index}}},
                    {"trigger",
                     {{"ref_clock", s.trigger.ref_clock},
                      {"pps_offset_tx", s.trigger.pps_offset_tx},
                      {"pps_offset_rx", s.trigger.pps_offset_rx},
                      {"counter_start", s.trigger.counter_start}}},
                    {"slots", s.slots.size()}};
        }

        // The slot list is rebuilt from its parameters and checked against the stored slot count
        inline SweepSchedule schedule_from_json(const json &j)
        {
            AnchorPolicy a;
            const auto &ja = j.at("anchor_policy");
            a.kind = anchor_kind_from_string(ja.at("kind").get<std::string>());
            a.period = ja.at("period");
            a.tx_azimuth_index = ja.at("tx_azimuth_index");
            a.rx_azimuth_index = ja.at("rx_azimuth_index");
            TriggerModel t;
            const auto &jt = j.at("trigger");
            t.ref_clock = jt.at("ref_clock");
            t.pps_offset_tx = jt.at("pps_offset_tx");
            t.pps_offset_rx = jt.at("pps_offset_rx");
            t.counter_start = jt.at("counter_start");
            auto s = build_schedule(beams_from_json(j.at("tx_beams")), beams_from_json(j.at("rx_beams")),
                                    j.at("repetitions").get<std::size_t>(), j.at("waveform_duration").get<double>(),
                                    j.at("guard_time").get<double>(), a, t, true);
            if (s.slots.size() != j.at("slots").get<std::size_t>())
                throw InvalidArgument("schedule slot count does not match its parameters");
            return s;
        }

        inline ClockMode clock_mode_from_string(const std::string &s)
        {
            if (s == "SHARED")
                return ClockMode::Shared;
            if (s == "GPS_DISCIPLINED")
                return ClockMode::GpsDisciplined;
            if (s == "FREE_RUNNING")
                return ClockMode::FreeRunning;
            throw InvalidArgument("unknown clock mode '" + s + "'");
        }

        // Non-finite values have no JSON representation; -inf (thermal noise disabled) maps to null
        inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
        inline double null_to_neg_inf(const json &j)
        {
            return j.is_null() ? -std::numeric_limits<double>::infinity() : j.get<double>();
        }

        inline const char *const known_metadata_keys[] = {
            "format", "kind", "plan", "waveform_phases", "carrier_freq", "tx_codebook", "rx_codebook",
            "schedule", "snapshot_ticks", "clock", "front_end", "averaging", "rx_orientation", "tx_power",
            "ripple", "channel", "geo", "seed", "calibration"};
    }

    inline nlohmann::json metadata_to_json(const CaptureMetadata &m)
    {
        using nlohmann::json;
        json j = json::object();
        for (auto it = m.extra.begin(); it != m.extra.end(); ++it)
            j[it.key()] = it.value();
        j["format"] = "mmsound capture";
        j["kind"] = to_string(m.kind);
        j["plan"] = detail::plan_to_json(m.plan);
        j["waveform_phases"] = m.waveform_phases;
        j["carrier_freq"] = m.carrier_freq;
        j["tx_codebook"] = detail::codebook_to_json(m.tx_codebook);
        j["rx_codebook"] = detail::codebook_to_json(m.rx_codebook);
        j["schedule"] = detail::schedule_to_json(m.schedule);
        j["snapshot_ticks"] = m.snapshot_ticks;
        j["clock"] = {{"mode", to_string(m.clock.mode)},
                      {"initial_phase", m.clock.initial_phase},
                      {"drift_rate", m.clock.drift_rate},
                      {"drift_noise_rms", m.clock.drift_noise_rms},
                      {"seed", m.clock.seed}};
        j["front_end"] = {{"noise_figure", detail::finite_or_null(m.front_end.noise_figure)},
                          {"adc_bits", m.front_end.adc_bits ? json(*m.front_end.adc_bits) : json(nullptr)},
                          {"awg_bits", m.front_end.awg_bits},
                          {"agc_min", m.front_end.agc_min},
                          {"agc_max", m.front_end.agc_max},
                          {"full_scale_power", m.front_end.full_scale_power},
                          {"agc_backoff", m.front_end.agc_backoff},
                          {"sample_rate", m.front_end.sample_rate}};
        j["averaging"] = m.averaging;
        j["rx_orientation"] = m.rx_orientation;
        j["tx_power"] = m.tx_power;
        j["ripple"] = {{"enabled", m.ripple.enabled},
                       {"peak_db", m.ripple.peak_db},
                       {"peak_phase_deg", m.ripple.peak_phase_deg},
                       {"seed", m.ripple.seed}};
        j["channel"] = m.channel_label;
        j["geo"] = m.geo ? json{{"latitude", m.geo->latitude}, {"longitude", m.geo->longitude}} : json(nullptr);
        j["seed"] = m.seed;
        j["calibration"] = {{"mode", to_string(m.calibration_mode)}, {"attenuation", m.calibration_attenuation}};
        return j;
    }

    inline CaptureMetadata metadata_from_json(const nlohmann::json &j)
    {
        CaptureMetadata m;
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "measurement")
            m.kind = CaptureKind::Measurement;
        else if (kind == "calibration")
            m.kind = CaptureKind::Calibration;
        else
            throw InvalidArgument("unknown capture kind '" + kind + "'");
        m.plan = detail::plan_from_json(j.at("plan"));
        m.waveform_phases = j.at("waveform_phases").get<std::vector<double>>();
        m.carrier_freq = j.at("carrier_freq");
        m.tx_codebook = detail::codebook_from_json(j.at("tx_codebook"));
        m.rx_codebook = detail::codebook_from_json(j.at("rx_codebook"));
        m.schedule = detail::schedule_from_json(j.at("schedule"));
        m.snapshot_ticks = j.at("snapshot_ticks").get<std::vector<std::int64_t>>();
        const auto &jc = j.at("clock");
        m.clock.mode = detail::clock_mode_from_string(jc.at("mode").get<std::string>());
        m.clock.initial_phase = jc.at("initial_phase");
        m.clock.drift_rate = jc.at("drift_rate");
        m.clock.drift_noise_rms = jc.at("drift_noise_rms");
        m.clock.seed = jc.at("seed");
        const auto &jf = j.at("front_end");
        m.front_end.noise_figure = detail::null_to_neg_inf(jf.at("noise_figure"));
        if (jf.at("adc_bits").is_null())
            m.front_end.adc_bits.reset();
        else
            m.front_end.adc_bits = jf.at("adc_bits").get<int>();
        m.front_end.awg_bits = jf.at("awg_bits");
        m.front_end.agc_min = jf.at("agc_min");
        m.front_end.agc_max = jf.at("agc_max");
        m.front_end.full_scale_power = jf.at("full_scale_power");
        m.front_end.agc_backoff = jf.at("agc_backoff");
        m.front_end.sample_rate = jf.at("sample_rate");
        m.averaging = j.at("averaging");
        m.rx_orientation = j.at("rx_orientation");
        m.tx_power = j.at("tx_power");
        const auto &jr = j.at("ripple");
        m.ripple.enabled = jr.at("enabled");
        m.ripple.peak_db = jr.at("peak_db");
        m.ripple.peak_phase_deg = jr.at("peak_phase_deg");
        m.ripple.seed = jr.at("seed");
        m.channel_label = j.at("channel");
        if (!j.at("geo").is_null())
            m.geo = GeoPosition{j.at("geo").at("latitude"), j.at("geo").at("longitude")};
        m.seed = j.at("seed");
        const auto &jk = j.at("calibration");
        const auto mode = jk.at("mode").get<std::string>();
        if (mode == "shared")
            m.calibration_mode = CalibrationMode::Shared;
        else if (mode == "per_beam_pair")
            m.calibration_mode = CalibrationMode::PerBeamPair;
        else
            throw InvalidArgument("unknown calibration mode '" + mode + "'");
        m.calibration_attenuation = jk.at("attenuation");
        if (!m.waveform_phases.empty() && m.waveform_phases.size() != m.plan.num_tones)
            throw InvalidArgument("waveform phase count does not match the tone plan");
        if (m.snapshot_ticks.empty())
            throw InvalidArgument("metadata lists no snapshots");

        m.extra = nlohmann::json::object();
        for (auto it = j.begin(); it != j.end(); ++it)
        {
            bool known = false;
            for (const char *k : detail::known_metadata_keys)
                known = known || it.key() == k;
            if (!known)
                m.extra[it.key()] = it.value();
        }
        return m;
    }

    // ----- Capture container --------------------------------------------------------------

    inline std::string serialize_capture(const CaptureSet &cs)
    {
        const auto &md = cs.metadata;
        const std::size_t k_tones = md.plan.num_tones;
        for (const auto &r : cs.records)
        {
            if (r.h.size() != k_tones)
                throw InvalidArgument("write_capture: record length does not match the tone plan");
            if (!(std::abs(r.agc_gain) <= 327.67))
                throw InvalidArgument("write_capture: AGC gain outside the representable range");
        }
        if (cs.records.size() > std::numeric_limits<std::uint32_t>::max())
            throw InvalidArgument("write_capture: too many records");
        const std::string meta = metadata_to_json(md).dump();

        std::string out;
        out.reserve(24 + meta.size() + cs.records.size() * (record_header_size + 16 * k_tones));
        out.append(capture_magic, 4);
        detail::put<std::uint16_t>(out, capture_version);
        detail::put<std::uint16_t>(out, 0);
        detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(meta.size()));
        out += meta;
        detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(k_tones));
        detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(cs.records.size()));
        for (const auto &r : cs.records)
        {
            detail::put<std::uint32_t>(out, r.slot_index);
            detail::put<std::int16_t>(out, static_cast<std::int16_t>(std::lround(r.agc_gain * 100.0)));
            detail::put<std::uint16_t>(out, r.flags);
            detail::put<std::uint64_t>(out, 0);
            for (const auto &v : r.h)
            {
                detail::put<double>(out, v.real());
                detail::put<double>(out, v.imag());
            }
        }
        detail::put<std::uint32_t>(out, crc32_of(reinterpret_cast<const std::uint8_t *>(out.data()), out.size()));
        return out;
    }

    inline CaptureSet parse_capture(const std::string &in)
    {
        using K = FormatError::Kind;
        if (in.size() < 4 || std::memcmp(in.data(), capture_magic, 4) != 0)
            throw FormatError(K::BadMagic, "not an mmsound capture (bad magic)", 0);
        if (in.size() < 12)
            throw FormatError(K::Truncated, "capture truncated inside the header", in.size());
        const auto version = detail::get<std::uint16_t>(in, 4);
        if (version != capture_version)
            throw FormatError(K::UnsupportedVersion, "unsupported capture version " + std::to_string(version), 4);
        const std::size_t meta_len = detail::get<std::uint32_t>(in, 8);
        const std::size_t counts_off = 12 + meta_len;
        if (in.size() < counts_off + 8 + 4)
            throw FormatError(K::Truncated, "capture truncated before the record section", in.size());
        const std::size_t k_tones = detail::get<std::uint32_t>(in, counts_off);
        const std::size_t n_rec = detail::get<std::uint32_t>(in, counts_off + 4);
        const std::size_t stride = record_header_size + 16 * k_tones;
        const std::size_t expected = counts_off + 8 + n_rec * stride + 4;
        if (in.size() < expected)
            throw FormatError(K::Truncated,
                              "capture truncated: " + std::to_string(in.size()) + " bytes, expected " +
                                  std::to_string(expected),
                              in.size());
        if (in.size() > expected)
            throw FormatError(K::Malformed, "trailing bytes after the capture CRC", expected);
        const std::size_t crc_off = expected - 4;
        const auto stored = detail::get<std::uint32_t>(in, crc_off);
        const auto computed = crc32_of(reinterpret_cast<const std::uint8_t *>(in.data()), crc_off);
        if (stored != computed)
        {
            std::ostringstream msg;
            msg << "capture CRC mismatch: stored 0x" << std::hex << stored << ", computed 0x" << computed
                << std::dec << " over bytes [0, " << crc_off << "), CRC at offset " << crc_off;
            throw FormatError(K::CrcMismatch, msg.str(), crc_off);
        }

        // Metadata is validated before any record is decoded
        CaptureSet cs;
        try
        {
            cs.metadata = metadata_from_json(nlohmann::json::parse(in.begin() + 12, in.begin() + counts_off));
        }
        catch (const std::exception &e)
        {
            throw FormatError(K::Malformed, std::string("invalid capture metadata: ") + e.what(), 12);
        }
        if (cs.metadata.plan.num_tones != k_tones)
            throw FormatError(K::Malformed, "record tone count does not match the metadata tone plan", counts_off);
        const std::size_t total_slots = cs.metadata.schedule.slots.size() * cs.metadata.snapshot_ticks.size();
        if (n_rec != 0 && n_rec != total_slots)
            throw FormatError(K::Malformed, "record count does not match the schedule", counts_off + 4);

        cs.records.resize(n_rec);
        std::size_t off = counts_off + 8;
        for (std::size_t i = 0; i < n_rec; ++i)
        {
            auto &r = cs.records[i];
            r.slot_index = detail::get<std::uint32_t>(in, off);
            if (r.slot_index >= total_slots)
                throw FormatError(K::Malformed, "record slot index outside the schedule", off);
            r.agc_gain = detail::get<std::int16_t>(in, off + 4) / 100.0;
            r.flags = detail::get<std::uint16_t>(in, off + 6);
            r.h.resize(k_tones);
            const std::size_t data = off + record_header_size;
            for (std::size_t k = 0; k < k_tones; ++k)
                r.h[k] = cplx(detail::get<double>(in, data + 16 * k), detail::get<double>(in, data + 16 * k + 8));
            off += stride;
        }
        return cs;
    }

    inline void write_capture(const CaptureSet &cs, const std::filesystem::path &path)
    {
        atomic_write(path, serialize_capture(cs));
    }

    inline CaptureSet read_capture(const std::filesystem::path &path) { return parse_capture(read_file(path)); }

    inline std::size_t capture_file_size(std::size_t metadata_bytes, std::size_t num_tones, std::size_t records)
    {
        return 12 + metadata_bytes + 8 + records * (record_header_size + 16 * num_tones) + 4;
    }

    // ----- Raw-sample sidecar --------------------------------------------------------------
    //
    //   "MMWR", u16 version (1), u16 ADC bits, u32 samples per record N, u32 record count R,
    //   f64 full-scale amplitude, R x (u32 slot index, N x (i16 I, i16 Q)), u32 CRC-32.

    struct RawSamples
    {
        int bits = 10;
        double full_scale = 1.0;
        std::size_t samples_per_record = 0;
        std::vector<std::uint32_t> slot_index;
        std::vector<std::int16_t> iq; // interleaved I, Q; record-major

        bool operator==(const RawSamples &) const = default;
    };

    // ADC codes of each record: the recorded tones (AGC applied) synthesized over one period and
    // re-quantized on the front end's grid. Requires a quantizing front end.
    inline RawSamples raw_samples(const CaptureSet &cs)
    {
        const auto &md = cs.metadata;
        if (!md.front_end.adc_bits)
            throw InvalidArgument("raw_samples: the capture front end has no ADC");
        const std::size_t k_tones = md.plan.num_tones;
        std::vector<std::size_t> bins(k_tones);
        std::size_t max_bin = 0;
        for (std::size_t k = 0; k < k_tones; ++k)
        {
            bins[k] = static_cast<std::size_t>(std::llround(md.plan.tone_frequency(k) / md.plan.tone_spacing));
            max_bin = std::max(max_bin, bins[k]);
        }
        RawSamples raw;
        raw.bits = *md.front_end.adc_bits;
        raw.full_scale = std::sqrt(db_to_power(md.front_end.full_scale_power));
        raw.samples_per_record = std::max<std::size_t>(
            static_cast<std::size_t>(std::llround(md.front_end.sample_rate / md.plan.tone_spacing)), max_bin + 1);
        const MidRiseQuantizer adc(raw.full_scale, raw.bits);
        const auto phasors = waveform_phasors(md.waveform_phases);
        std::vector<cplx> buf(raw.samples_per_record);
        for (const auto &r : cs.records)
        {
            std::fill(buf.begin(), buf.end(), cplx(0.0, 0.0));
            for (std::size_t k = 0; k < k_tones; ++k)
                buf[bins[k]] = r.h[k] * (phasors.empty() ? cplx(1.0, 0.0) : phasors[k]);
            fft::backward(buf);
            raw.slot_index.push_back(r.slot_index);
            for (const auto &v : buf)
                for (double c : {v.real(), v.imag()})
                    raw.iq.push_back(adc.code(c));
        }
        return raw;
    }

    // Level of a stored code: (code + 0.5) LSB
    inline double raw_level(const RawSamples &raw, std::int16_t code)
    {
        return (static_cast<double>(code) + 0.5) * 2.0 * raw.full_scale / std::ldexp(1.0, raw.bits);
    }

    inline std::string serialize_raw(const RawSamples &raw)
    {
        std::string out;
        out.append(raw_magic, 4);
        detail::put<std::uint16_t>(out, 1);
        detail::put<std::uint16_t>(out, static_cast<std::uint16_t>(raw.bits));
        detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(raw.samples_per_record));
        detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(raw.slot_index.size()));
        detail::put<double>(out, raw.full_scale);
        const std::size_t per = 2 * raw.samples_per_record;
        if (raw.iq.size() != per * raw.slot_index.size())
            throw InvalidArgument("serialize_raw: sample count does not match the record count");
        for (std::size_t i = 0; i < raw.slot_index.size(); ++i)
        {
            detail::put<std::uint32_t>(out, raw.slot_index[i]);
            out.append(reinterpret_cast<const char *>(raw.iq.data() + i * per), per * sizeof(std::int16_t));
        }
        detail::put<std::uint32_t>(out, crc32_of(reinterpret_cast<const std::uint8_t *>(out.data()), out.size()));
        return out;
    }

    inline RawSamples parse_raw(const std::string &in)
    {
        using K = FormatError::Kind;
        if (in.size() < 4 || std::memcmp(in.data(), raw_magic, 4) != 0)
            throw FormatError(K::BadMagic, "not an mmsound raw-sample file (bad magic)", 0);
        if (in.size() < 24 + 4)
            throw FormatError(K::Truncated, "raw-sample file truncated inside the header", in.size());
        if (detail::get<std::uint16_t>(in, 4) != 1)
            throw FormatError(K::UnsupportedVersion, "unsupported raw-sample version", 4);
        RawSamples raw;
        raw.bits = detail::get<std::uint16_t>(in, 6);
        raw.samples_per_record = detail::get<std::uint32_t>(in, 8);
        const std::size_t n = detail::get<std::uint32_t>(in, 12);
        raw.full_scale = detail::get<double>(in, 16);
        const std::size_t per = 2 * raw.samples_per_record;
        const std::size_t expected = 24 + n * (4 + per * 2) + 4;
        if (in.size() != expected)
            throw FormatError(in.size() < expected ? K::Truncated : K::Malformed, "raw-sample file size mismatch",
                              in.size());
        if (detail::get<std::uint32_t>(in, expected - 4) !=
            crc32_of(reinterpret_cast<const std::uint8_t *>(in.data()), expected - 4))
            throw FormatError(K::CrcMismatch, "raw-sample CRC mismatch", expected - 4);
        raw.iq.resize(n * per);
        std::size_t off = 24;
        for (std::size_t i = 0; i < n; ++i)
        {
            raw.slot_index.push_back(detail::get<std::uint32_t>(in, off));
            std::memcpy(raw.iq.data() + i * per, in.data() + off + 4, per * 2);
            off += 4 + per * 2;
        }
        return raw;
    }

    // ----- Waveform descriptor ---------------------------------------------------------------

    inline std::string format_double(double v)
    {
        char b[40];
        std::snprintf(b, sizeof b, "%.17g", v);
        return b;
    }

    inline std::string waveform_descriptor(const SoundingWaveform &wf, bool converged)
    {
        std::ostringstream os;
        os << "# mmsound sounding waveform\n[waveform]\n";
        os << "num_tones = " << wf.plan.num_tones << "\n";
        os << "tone_spacing = " << format_double(wf.plan.tone_spacing) << "\n";
        os << "start_freq = " << format_double(wf.plan.start_freq) << "\n";
        os << "oversampling = " << wf.plan.oversampling << "\n";
        os << "duration = " << format_double(wf.duration) << "\n";
        os << "papr_db = " << format_double(wf.papr) << "\n";
        os << "backoff_db = " << format_double(tx_backoff_db(wf.papr)) << "\n";
        os << "converged = " << (converged ? "true" : "false") << "\n";
        os << "[phases]\n";
        for (std::size_t k = 0; k < wf.phases.size(); ++k)
            os << k << " = " << format_double(wf.phases[k]) << "\n";
        return os.str();
    }

    // ----- Planted channel table -----------------------------------------------------------
    //
    // One MPC per line: delay_ns gain_db aod_az aoa_az [aod_el aoa_el [phase_rad]]; '#' starts a comment.

    inline std::vector<PlantedMpc> parse_planted_spec(const std::string &text)
    {
        std::vector<PlantedMpc> out;
        std::istringstream is(text);
        std::string line;
        for (std::size_t ln = 1; std::getline(is, line); ++ln)
        {
            if (auto c = line.find('#'); c != std::string::npos)
                line.resize(c);
            std::istringstream ls(line);
            std::vector<double> v;
            double x;
            while (ls >> x)
                v.push_back(x);
            if (!ls.eof())
                throw InvalidArgument("channel spec line " + std::to_string(ln) + ": not a number");
            if (v.empty())
                continue;
            if (v.size() != 4 && v.size() != 6 && v.size() != 7)
                throw InvalidArgument("channel spec line " + std::to_string(ln) + ": expected 4, 6 or 7 columns");
            PlantedMpc m;
            m.delay = v[0] * 1e-9;
            m.gain_db = v[1];
            m.aod_az = v[2];
            m.aoa_az = v[3];
            if (v.size() >= 6)
            {
                m.aod_el = v[4];
                m.aoa_el = v[5];
            }
            if (v.size() == 7)
                m.phase = v[6];
            out.push_back(m);
        }
        if (out.empty())
            throw InvalidArgument("channel spec contains no MPC");
        return out;
    }

    inline std::string format_planted_spec(const std::vector<PlantedMpc> &spec)
    {
        std::ostringstream os;
        os << "# delay_ns gain_db aod_az aoa_az aod_el aoa_el phase_rad\n";
        for (const auto &m : spec)
        {
            os << format_double(m.delay * 1e9) << " " << format_double(m.gain_db) << " " << format_double(m.aod_az)
               << " " << format_double(m.aoa_az) << " " << format_double(m.aod_el) << " " << format_double(m.aoa_el);
            if (m.phase)
                os << " " << format_double(*m.phase);
            os << "\n";
        }
        return os.str();
    }

    // ----- Product tables ---------------------------------------------------------------------

    // Whitespace-separated grid: header comments, a column-axis line, then one row per row-axis value.
    // Values are written in dB; zero power is written as -inf.
    inline std::string format_grid(const std::string &title, const std::string &row_axis,
                                   const std::vector<double> &rows, const std::string &col_axis,
                                   const std::vector<double> &cols, const std::vector<double> &linear)
    {
        if (linear.size() != rows.size() * cols.size())
            throw InvalidArgument("format_grid: value count does not match the axes");
        std::ostringstream os;
        os << "# " << title << "\n# rows: " << row_axis << "\n# columns: " << col_axis << "\n# values: dB\n";
        os << std::setprecision(10) << "axis";
        for (double c : cols)
            os << " " << c;
        os << "\n";
        for (std::size_t i = 0; i < rows.size(); ++i)
        {
            os << rows[i];
            for (std::size_t j = 0; j < cols.size(); ++j)
            {
                const double v = linear[i * cols.size() + j];
                os << " ";
                if (v > 0.0)
                    os << std::setprecision(6) << std::fixed << power_to_db(v) << std::defaultfloat
                       << std::setprecision(10);
                else
                    os << "-inf";
            }
            os << "\n";
        }
        return os.str();
    }

    inline std::string format_profile(const std::string &title, const std::string &axis,
                                      const std::vector<double> &x, const std::vector<double> &linear)
    {
        if (x.size() != linear.size())
            throw InvalidArgument("format_profile: value count does not match the axis");
        std::ostringstream os;
        os << "# " << title << "\n# " << axis << " power_db\n";
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            os << std::setprecision(10) << x[i] << " ";
            if (linear[i] > 0.0)
                os << std::fixed << std::setprecision(6) << power_to_db(linear[i]) << std::defaultfloat;
            else
                os << "-inf";
            os << "\n";
        }
        return os.str();
    }
}

#endif
