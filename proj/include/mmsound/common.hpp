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

#ifndef MMSOUND_COMMON_HPP
#define MMSOUND_COMMON_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mmsound
{
    using cplx = std::complex<double>;

    inline constexpr double pi = std::numbers::pi;
    inline constexpr double speed_of_light = 299792458.0;  // m/s
    inline constexpr double thermal_noise_dbm_per_hz = -174.0;

    // ----- Errors -------------------------------------------------------------

    // Base class for all library errors
    class Error : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // Precondition violation on user-supplied input
    class InvalidArgument : public Error
    {
    public:
        using Error::Error;
    };

    // Input that is well-formed but below a documented hardware limit (e.g. beam switching floor).
    // Callers may opt in to such configurations explicitly.
    class HardwareLimitWarning : public InvalidArgument
    {
    public:
        using InvalidArgument::InvalidArgument;
    };

    // Inconsistent or corrupted data (captures, calibrations, files)
    class DataIntegrityError : public Error
    {
    public:
        using Error::Error;
    };

    // ----- Unit helpers --------------------------------------------------------

    inline double db_to_power(double db) { return std::pow(10.0, db / 10.0); }
    inline double db_to_amplitude(double db) { return std::pow(10.0, db / 20.0); }
    inline double power_to_db(double p) { return 10.0 * std::log10(p); }
    inline double deg_to_rad(double deg) { return deg * (pi / 180.0); }
    inline double rad_to_deg(double rad) { return rad * (180.0 / pi); }

    // Wraps an angle in degrees to (-180, 180]
    inline double wrap_degrees(double deg)
    {
        double w = std::fmod(deg, 360.0);
        if (w <= -180.0)
            w += 360.0;
        else if (w > 180.0)
            w -= 360.0;
        return w;
    }

    // Wraps an angle in radians to (-pi, pi]
    inline double wrap_radians(double rad)
    {
        double w = std::remainder(rad, 2.0 * pi);
        if (w <= -pi)
            w += 2.0 * pi;
        return w;
    }

    // ----- Deterministic counter-based randomness ----------------------------------
    //
    // Per-slot and per-tick random draws are derived by hashing (seed, stream, counter), so results do
    // not depend on evaluation order or thread count.

    inline std::uint64_t splitmix64(std::uint64_t x)
    {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter = 0)
    {
        return splitmix64(splitmix64(seed ^ splitmix64(stream)) ^ counter);
    }

    // Uniform in (0, 1)
    inline double hash_uniform(std::uint64_t h)
    {
        return (static_cast<double>(h >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    // Standard normal via Box-Muller on two hashed uniforms
    inline double hash_gaussian(std::uint64_t h)
    {
        double u1 = hash_uniform(splitmix64(h));
        double u2 = hash_uniform(splitmix64(h ^ 0xD1B54A32D192ED03ULL));
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * pi * u2);
    }

    // Stream identifiers for derive_seed
    namespace streams
    {
        inline constexpr std::uint64_t thermal_noise = 1;
        inline constexpr std::uint64_t clock_initial_phase = 2;
        inline constexpr std::uint64_t clock_drift_noise = 3;
        inline constexpr std::uint64_t clock_rate = 4;
        inline constexpr std::uint64_t ripple = 5;
        inline constexpr std::uint64_t mpc_phase = 6;
        inline constexpr std::uint64_t phase_restart = 7;
        inline constexpr std::uint64_t scene = 8;
    }
}

#endif
