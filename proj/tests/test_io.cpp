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

#include "generators.hpp"
#include "oracles.hpp"

#include <mmsound/io.hpp>
#include <mmsound/pipeline.hpp>
#include <mmsound/processing.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>

using namespace mmsound;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace
{
    namespace fs = std::filesystem;

    struct TempDir
    {
        fs::path path;
        TempDir()
        {
            std::random_device rd;
            path = fs::temp_directory_path() / ("mmsound_io_" + std::to_string(rd()));
            fs::create_directories(path);
        }
        ~TempDir() { fs::remove_all(path); }
    };

    // Independent little-endian reader for the header fields
    std::uint32_t le32(const std::string &b, std::size_t off)
    {
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i)
            v = (v << 8) | static_cast<unsigned char>(b[off + static_cast<std::size_t>(i)]);
        return v;
    }

    CaptureSet small_capture()
    {
        std::mt19937_64 rng(11);
        auto cs = gen::random_capture(rng);
        cs.metadata.schedule = build_schedule({cs.metadata.tx_codebook.azimuth_sweep()[9]},
                                              {cs.metadata.rx_codebook.azimuth_sweep()[4],
                                               cs.metadata.rx_codebook.azimuth_sweep()[5]},
                                              1, 2e-6, 2e-6);
        cs.metadata.snapshot_ticks = {0};
        cs.records.resize(2);
        for (std::uint32_t i = 0; i < 2; ++i)
        {
            cs.records[i].slot_index = i;
            cs.records[i].agc_gain = -12.34 + i;
            cs.records[i].flags = record_flag_anchor;
            cs.records[i].h.assign(cs.metadata.plan.num_tones, cplx(0.25 + i, -1.5));
        }
        return cs;
    }
}

TEST_CASE("randomized write/read round trips are exact", "[io][property]")
{
    std::mt19937_64 rng(2026);
    TempDir dir;
    for (int i = 0; i < 500; ++i)
    {
        auto cs = gen::random_capture(rng);
        if (i % 7 == 0)
            cs.records.clear();
        const auto bytes = serialize_capture(cs);
        CHECK(bytes.size() == capture_file_size(le32(bytes, 8), cs.metadata.plan.num_tones, cs.records.size()));
        if (i % 50 == 0)
        {
            const auto path = dir.path / ("rt" + std::to_string(i) + ".mmws");
            write_capture(cs, path);
            CHECK(fs::file_size(path) == bytes.size());
            CHECK(read_capture(path) == cs);
        }
        const auto back = parse_capture(bytes);
        REQUIRE(back == cs);
        CHECK(serialize_capture(back) == bytes);
    }
}

TEST_CASE("header layout", "[io]")
{
    const auto cs = small_capture();
    const auto b = serialize_capture(cs);
    CHECK(b.substr(0, 4) == "MMWS");
    CHECK(static_cast<unsigned char>(b[4]) == 1);
    CHECK(b[5] == 0);
    CHECK(b[6] == 0);
    CHECK(b[7] == 0);
    const std::size_t meta = le32(b, 8);
    CHECK(b[12] == '{');
    CHECK(b[12 + meta - 1] == '}');
    CHECK(le32(b, 12 + meta) == cs.metadata.plan.num_tones);
    CHECK(le32(b, 16 + meta) == 2);
    // first record: slot index, centi-dB AGC gain, flags, reserved
    const std::size_t r0 = 20 + meta;
    CHECK(le32(b, r0) == 0);
    const auto agc = static_cast<std::int16_t>(static_cast<unsigned char>(b[r0 + 4]) |
                                               (static_cast<unsigned char>(b[r0 + 5]) << 8));
    CHECK(agc == std::lround(cs.records[0].agc_gain * 100.0));
    for (std::size_t i = 8; i < 16; ++i)
        CHECK(b[r0 + i] == 0);
    double re = 0.0;
    std::memcpy(&re, b.data() + r0 + 16, 8);
    CHECK(re == cs.records[0].h[0].real());
    // trailing CRC over everything before it
    const auto crc = crc32_of(reinterpret_cast<const std::uint8_t *>(b.data()), b.size() - 4);
    CHECK(le32(b, b.size() - 4) == crc);
    CHECK(crc32_of(reinterpret_cast<const std::uint8_t *>("123456789"), 9) == 0xCBF43926u);
}

TEST_CASE("every single-byte corruption is detected", "[io][property]")
{
    const auto b = serialize_capture(small_capture());
    std::mt19937_64 rng(5);
    std::size_t detected = 0;
    for (std::size_t i = 0; i < b.size(); ++i)
        for (int rep = 0; rep < 2; ++rep)
        {
            auto c = b;
            const auto delta = rep == 0 ? 0xFF : static_cast<int>(1 + rng() % 255);
            c[i] = static_cast<char>(c[i] ^ delta);
            try
            {
                (void)parse_capture(c);
            }
            catch (const FormatError &)
            {
                ++detected;
            }
        }
    CHECK(detected == 2 * b.size());
}

TEST_CASE("format errors are distinguishable", "[io]")
{
    const auto b = serialize_capture(small_capture());
    auto kind_of = [](const std::string &bytes) {
        try
        {
            (void)parse_capture(bytes);
        }
        catch (const FormatError &e)
        {
            return e.kind();
        }
        FAIL("no error");
        return FormatError::Kind::Io;
    };
    using K = FormatError::Kind;
    auto bad = b;
    bad[0] = 'X';
    CHECK(kind_of(bad) == K::BadMagic);
    bad = b;
    bad[4] = 99;
    CHECK(kind_of(bad) == K::UnsupportedVersion);
    CHECK(kind_of(b.substr(0, b.size() - 1)) == K::Truncated);
    CHECK(kind_of(b.substr(0, 10)) == K::Truncated);
    CHECK(kind_of(b + "x") == K::Malformed);
    bad = b;
    bad[b.size() - 20] ^= 0x01;
    CHECK(kind_of(bad) == K::CrcMismatch);
    try
    {
        (void)parse_capture(bad);
    }
    catch (const FormatError &e)
    {
        CHECK(e.offset() == b.size() - 4);
        CHECK_THAT(e.what(), ContainsSubstring("CRC"));
    }
    CHECK_THROWS_AS(read_capture("/nonexistent/dir/capture.mmws"), DataIntegrityError);
}

TEST_CASE("metadata round trip details", "[io]")
{
    auto cs = small_capture();
    cs.records.clear();
    cs.metadata.extra = {{"future_field", {1, 2, 3}}, {"site", "roof"}};
    const auto back = parse_capture(serialize_capture(cs));
    CHECK(back.records.empty());
    CHECK(back.metadata.extra == cs.metadata.extra);
    CHECK(back == cs);
    // unknown keys cannot shadow known ones
    cs.metadata.extra["seed"] = 99;
    CHECK(parse_capture(serialize_capture(cs)).metadata.seed == cs.metadata.seed);

    auto big = small_capture();
    big.records[0].agc_gain = 400.0;
    CHECK_THROWS_AS(serialize_capture(big), InvalidArgument);
    big = small_capture();
    big.records[0].h.pop_back();
    CHECK_THROWS_AS(serialize_capture(big), InvalidArgument);
}

TEST_CASE("re-simulating from stored metadata reproduces the records", "[io]")
{
    SimulationOptions o;
    o.waveform_phases = default_waveform_phases(default_tone_plan(), 3);
    o.ripple.seed = 8;
    o.rx_orientation = 180.0;
    const auto sched = default_schedule(1);
    const auto ch = planted_nlos_channel(random_scatter_spec(default_tone_plan(), 4), 4);
    const auto cs = simulate_capture(ch, sched, default_codebook(Side::Tx), default_codebook(Side::Rx),
                                     make_clock_model(ClockMode::FreeRunning, 4), RxFrontEnd{}, default_tone_plan(), o,
                                     17);
    const auto md = parse_capture(serialize_capture(cs)).metadata;
    SimulationOptions r;
    r.waveform_phases = md.waveform_phases;
    r.ripple = md.ripple;
    r.rx_orientation = md.rx_orientation;
    r.tx_power = md.tx_power;
    r.snapshot_ticks = md.snapshot_ticks;
    r.averaging = md.averaging;
    r.channel_label = md.channel_label;
    const auto again = simulate_capture(ch, md.schedule, md.tx_codebook, md.rx_codebook, md.clock, md.front_end,
                                        md.plan, r, md.seed);
    CHECK(again == cs);
}

TEST_CASE("processing a capture read from disk matches the in-memory result", "[io][processing]")
{
    TempDir dir;
    SimulationOptions o;
    o.waveform_phases = default_waveform_phases(default_tone_plan(), 1);
    const auto cs = simulate_capture(los_channel(30.0), default_schedule(2), default_codebook(Side::Tx),
                                     default_codebook(Side::Rx), make_clock_model(ClockMode::FreeRunning, 2),
                                     RxFrontEnd{}, default_tone_plan(), o, 2);
    CalibrationOptions co;
    co.waveform_phases = o.waveform_phases;
    const auto cal = simulate_calibration(default_codebook(Side::Tx), default_codebook(Side::Rx), RxFrontEnd{},
                                          default_tone_plan(), co, 3);
    write_capture(cs, dir.path / "m.mmws");
    write_capture(cal, dir.path / "c.mmws");
    const auto a = directional_pdp(cs, cal);
    const auto b = directional_pdp(read_capture(dir.path / "m.mmws"), read_capture(dir.path / "c.mmws"));
    CHECK(a.p == b.p);
}

TEST_CASE("raw-sample sidecar", "[io][raw]")
{
    const auto tx = default_codebook(Side::Tx), rx = default_codebook(Side::Rx);
    SimulationOptions o;
    o.waveform_phases = default_waveform_phases(default_tone_plan(), 1);
    const auto cs = simulate_capture(los_channel(40.0), build_schedule({tx.azimuth_sweep()[9]}, {rx.azimuth_sweep()[9]}, 1, 2e-6, 2e-6),
                                     tx, rx, ClockModel{}, RxFrontEnd{}, default_tone_plan(), o, 1);
    const auto raw = raw_samples(cs);
    CHECK(raw.bits == 10);
    CHECK(raw.samples_per_record == 2500);
    REQUIRE(raw.iq.size() == 5000);

    // codes lie within half an LSB of a direct synthesis of the recorded tones
    const auto &md = cs.metadata;
    const double lsb = 2.0 * raw.full_scale / 1024.0;
    const auto &h = cs.records[0].h;
    std::size_t checked = 0;
    for (std::size_t n = 0; n < 2500; n += 7)
    {
        oracle::cplx v(0.0, 0.0);
        for (std::size_t k = 0; k < h.size(); ++k)
        {
            const double bin = std::round(md.plan.tone_frequency(k) / md.plan.tone_spacing);
            const double arg = 2.0 * oracle::pi * std::fmod(bin * static_cast<double>(n), 2500.0) / 2500.0;
            v += h[k] * std::polar(1.0, md.waveform_phases[k]) * oracle::cplx(std::cos(arg), std::sin(arg));
        }
        const double iv = raw_level(raw, raw.iq[2 * n]), qv = raw_level(raw, raw.iq[2 * n + 1]);
        if (std::abs(v.real()) < raw.full_scale && std::abs(v.imag()) < raw.full_scale)
        {
            CHECK(std::abs(iv - v.real()) <= 0.5 * lsb + 1e-9 * raw.full_scale);
            CHECK(std::abs(qv - v.imag()) <= 0.5 * lsb + 1e-9 * raw.full_scale);
            ++checked;
        }
    }
    CHECK(checked > 300);

    const auto bytes = serialize_raw(raw);
    CHECK(bytes.size() == 24 + (4 + 4 * 2500) + 4);
    CHECK(parse_raw(bytes) == raw);
    std::size_t detected = 0;
    for (std::size_t i = 0; i < bytes.size(); i += 3)
    {
        auto c = bytes;
        c[i] = static_cast<char>(c[i] ^ 0x10);
        try
        {
            (void)parse_raw(c);
        }
        catch (const FormatError &)
        {
            ++detected;
        }
    }
    CHECK(detected == (bytes.size() + 2) / 3);

    auto ideal = cs;
    ideal.metadata.front_end.adc_bits.reset();
    CHECK_THROWS_AS(raw_samples(ideal), InvalidArgument);
}

TEST_CASE("waveform descriptor and planted channel tables", "[io]")
{
    const auto res = optimize_phases(make_tone_plan(16, 500e3, 50e6), PhaseOptimizerOptions{});
    const auto text = waveform_descriptor(res.waveform, res.converged);
    CHECK_THAT(text, ContainsSubstring("num_tones = 16"));
    const auto back = parse_waveform_descriptor(text);
    CHECK(back.phases == res.waveform.phases);
    CHECK(back.plan == res.waveform.plan);
    CHECK_THROWS_AS(parse_waveform_descriptor("[waveform]\nnum_tones = 3\n[phases]\n0 = 1\n"), InvalidArgument);

    const std::vector<PlantedMpc> spec = {{100e-9, -110.0, -5.0, 20.0, 0.0, 0.0, 0.4},
                                          {250e-9, -120.0, 30.0, -40.0, 3.0, -2.0, std::nullopt}};
    const auto parsed = parse_planted_spec(format_planted_spec(spec));
    REQUIRE(parsed.size() == 2);
    CHECK_THAT(parsed[0].delay, WithinAbs(100e-9, 1e-21));
    CHECK(parsed[0].phase == 0.4);
    CHECK_FALSE(parsed[1].phase.has_value());
    CHECK(parsed[1].aod_el == 3.0);

    const auto short_form = parse_planted_spec("# comment\n\n100 -110 -5 20\n");
    CHECK(short_form.size() == 1);
    CHECK(short_form[0].aoa_el == 0.0);
    CHECK_THROWS_AS(parse_planted_spec("100 -110 -5\n"), InvalidArgument);
    CHECK_THROWS_AS(parse_planted_spec("100 -110 abc 20\n"), InvalidArgument);
    CHECK_THROWS_AS(parse_planted_spec("# nothing\n"), InvalidArgument);
}
