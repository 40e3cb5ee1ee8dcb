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

#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>
#include <string>

using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace
{
    namespace fs = std::filesystem;

    struct Result
    {
        int code = -1;
        std::string out;
    };

    std::string slurp(const fs::path &p)
    {
        std::ifstream f(p, std::ios::binary);
        std::ostringstream os;
        os << f.rdbuf();
        return os.str();
    }

    struct Workspace
    {
        fs::path dir;
        Workspace()
        {
            std::random_device rd;
            dir = fs::temp_directory_path() / ("mmsound_cli_" + std::to_string(rd()));
            fs::create_directories(dir);
        }
        ~Workspace() { fs::remove_all(dir); }

        Result run(const std::string &args) const
        {
            const auto log = dir / "last.log";
            const std::string cmd = "cd '" + dir.string() + "' && '" MMSOUND_CLI_PATH "' " + args + " > '" +
                                    log.string() + "' 2>&1";
            const int status = std::system(cmd.c_str());
            Result r;
            r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
            r.out = slurp(log);
            return r;
        }
    };

    double value_of(const std::string &text, const std::string &key)
    {
        std::smatch m;
        const std::regex re("(^|\\n)" + key + " = ([-+0-9.eE]+)");
        if (!std::regex_search(text, m, re))
            FAIL("key " << key << " not found in:\n" << text);
        return std::stod(m[2]);
    }

    // one optimized waveform shared by the simulation cases
    const Workspace &shared()
    {
        static const Workspace w = [] {
            Workspace x;
            const auto r = x.run("waveform --out wf.txt");
            REQUIRE(r.code == 0);
            return x;
        }();
        return w;
    }
}

TEST_CASE("budget command", "[cli]")
{
    Workspace w;
    auto r = w.run("budget");
    REQUIRE(r.code == 0);
    const double base = value_of(r.out, "max_path_loss_db");
    CHECK_THAT(base, WithinAbs(159.0, 1.5));
    r = w.run("budget --bandwidth 4MHz");
    CHECK_THAT(value_of(r.out, "max_path_loss_db") - base, WithinAbs(20.0, 0.011));
    r = w.run("budget --averaging 10");
    CHECK_THAT(value_of(r.out, "max_path_loss_db") - base, WithinAbs(10.0, 0.011));
    r = w.run("budget --eirp 60 --rx-gain 25 --nf 7");
    CHECK_THAT(value_of(r.out, "max_path_loss_db") - base, WithinAbs(3.0 + 5.0 - 2.0, 0.011));
    r = w.run("budget --bandwidth 4 parsecs");
    CHECK(r.code == 2);
}

TEST_CASE("waveform command", "[cli]")
{
    Workspace w;
    auto r = w.run("waveform --tones 2");
    CHECK(r.code == 3);
    CHECK_THAT(value_of(r.out, "papr_db"), WithinAbs(3.0103, 1e-4));
    r = w.run("waveform --tones 64 --target-papr 1.5 --compare zadoff-chu --out wf64.txt");
    REQUIRE(r.code == 0);
    CHECK(value_of(r.out, "papr_db") <= 1.5);
    CHECK(value_of(r.out, "advantage_db") > 0.0);
    CHECK_THAT(slurp(w.dir / "wf64.txt"), ContainsSubstring("num_tones = 64"));
    CHECK(w.run("waveform --tones 0").code == 2);
}

TEST_CASE("sweep describe command", "[cli]")
{
    Workspace w;
    auto r = w.run("sweep describe --repetitions 10");
    REQUIRE(r.code == 0);
    CHECK_THAT(value_of(r.out, "total_duration_ms"), WithinAbs(14.44, 1e-9));
    r = w.run("sweep describe --repetitions 1");
    CHECK_THAT(value_of(r.out, "total_duration_ms"), WithinAbs(1.444, 1e-9));
    CHECK(value_of(r.out, "slots") == 361);
    CHECK(w.run("sweep describe --guard 1us").code == 2);
    CHECK(w.run("sweep describe --guard 1us --set schedule.allow_fast_switching=true").code == 0);
}

TEST_CASE("configuration errors exit with code 2", "[cli]")
{
    Workspace w;
    std::ofstream(w.dir / "bad.ini") << "[run\nseed = 1\n";
    std::ofstream(w.dir / "unknown.ini") << "[run]\nspeed = 1\n";
    CHECK(w.run("budget --config bad.ini").code == 2);
    CHECK(w.run("budget --config unknown.ini").code == 2);
    CHECK(w.run("budget --config missing.ini").code == 2);
    CHECK(w.run("budget --set budget.eirp=loud").code == 2);
    CHECK(w.run("frobnicate").code == 2);
    CHECK(w.run("--help").code == 0);
}

TEST_CASE("simulate then process a LOS link", "[cli][pipeline]")
{
    const auto &w = shared();
    const std::string sim = "simulate --scenario los --distance 100 --repetitions 2 --waveform wf.txt --seed 3 ";
    REQUIRE(w.run(sim + "--out a").code == 0);
    REQUIRE(w.run(sim + "--out b").code == 0);
    for (const char *f : {"capture_phi000.mmws", "capture_phi090.mmws", "capture_phi180.mmws",
                          "capture_phi270.mmws", "calibration.mmws", "config.ini", "waveform.txt"})
    {
        REQUIRE(fs::exists(w.dir / "a" / f));
        CHECK(slurp(w.dir / "a" / f) == slurp(w.dir / "b" / f));
    }

    auto r = w.run("process a/capture_phi000.mmws a/capture_phi090.mmws a/capture_phi180.mmws "
                   "a/capture_phi270.mmws --cal a/calibration.mmws --out pa");
    REQUIRE(r.code == 0);
    const auto report = slurp(w.dir / "pa" / "report.txt");
    CHECK_THAT(value_of(report, "path_loss_db"), WithinAbs(101.3, 1.0));
    for (const char *f : {"pas.txt", "sector_pdp_phi000.txt", "padp_rx_phi090.txt", "padp_tx_phi270.txt"})
        CHECK(fs::exists(w.dir / "pa" / f));

    // a different seed gives different bytes
    REQUIRE(w.run("simulate --scenario los --distance 100 --repetitions 2 --waveform wf.txt --seed 4 "
                  "--orientations 0 --out c")
                .code == 0);
    CHECK(slurp(w.dir / "a" / "capture_phi000.mmws") != slurp(w.dir / "c" / "capture_phi000.mmws"));
}

TEST_CASE("data integrity failures exit with code 4", "[cli][pipeline]")
{
    const auto &w = shared();
    REQUIRE(w.run("simulate --scenario los --distance 50 --repetitions 1 --waveform wf.txt --orientations 0 "
                  "--out d")
                .code == 0);
    CHECK(w.run("process d/capture_phi000.mmws --out pd").code == 4);
    CHECK(w.run("process d/capture_phi000.mmws --cal d/nonexistent.mmws --out pd").code == 4);

    auto bytes = slurp(w.dir / "d" / "capture_phi000.mmws");
    bytes[bytes.size() / 2] = static_cast<char>(bytes[bytes.size() / 2] ^ 0x01);
    std::ofstream(w.dir / "d" / "corrupt.mmws", std::ios::binary) << bytes;
    const auto r = w.run("process d/corrupt.mmws --cal d/calibration.mmws --out pd");
    CHECK(r.code == 4);
    CHECK_THAT(r.out, ContainsSubstring("CRC"));
}

TEST_CASE("free-running capture without drift correction is flagged", "[cli][pipeline]")
{
    const auto &w = shared();
    REQUIRE(w.run("simulate --scenario los --distance 40 --repetitions 10 --clock free --waveform wf.txt "
                  "--orientations 0 --out f")
                .code == 0);
    REQUIRE(w.run("process f/capture_phi000.mmws --cal f/calibration.mmws --no-drift-correction --out pf").code == 0);
    const auto off = slurp(w.dir / "pf" / "report.txt");
    CHECK_THAT(off, ContainsSubstring("residual_drift_flag = true"));
    CHECK_THAT(off, ContainsSubstring("drift_correction_applied = false"));

    REQUIRE(w.run("process f/capture_phi000.mmws --cal f/calibration.mmws --out pg").code == 0);
    const auto on = slurp(w.dir / "pg" / "report.txt");
    CHECK_THAT(on, ContainsSubstring("drift_correction_applied = true"));
    CHECK_THAT(on, ContainsSubstring("residual_drift_flag = false"));
    CHECK_THAT(value_of(on, "drift_slope_deg_per_ms"), WithinAbs(4.0 / 1.444, 0.05 * 4.0 / 1.444));
}

TEST_CASE("planted scenario from a table", "[cli][pipeline]")
{
    const auto &w = shared();
    std::ofstream(w.dir / "mpc.txt") << "# delay_ns gain_db aod aoa\n100.0 -100 -5 20\n250.0 -110 30 -40\n";
    REQUIRE(w.run("simulate --scenario planted --mpc-file mpc.txt --repetitions 1 --waveform wf.txt "
                  "--orientations 0 --set front_end.adc_bits=0 --out g")
                .code == 0);
    REQUIRE(w.run("process g/capture_phi000.mmws --cal g/calibration.mmws --out pgp").code == 0);
    const auto report = slurp(w.dir / "pgp" / "report.txt");
    CHECK_THAT(report, ContainsSubstring("path0 = delay_ns 99."));
    std::ofstream(w.dir / "badmpc.txt") << "100.0 -100\n";
    CHECK(w.run("simulate --scenario planted --mpc-file badmpc.txt --waveform wf.txt --out h").code == 2);
}
