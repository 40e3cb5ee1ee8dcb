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

#ifndef MMSOUND_BEAMS_HPP
#define MMSOUND_BEAMS_HPP

// Steerable beam codebooks and complex beam gain versus direction.
//
// Two pattern models:
//  - PARAMETRIC: Gaussian main lobe matched to the half-power beam widths, floored at a sidelobe level.
//    The floor follows a cos(az) cos(el) element roll-off and never drops below the back-lobe level,
//    so directions behind the array are attenuated by the front-to-back ratio.
//  - ARRAY_FACTOR: uniform rectangular array (8 columns x 2 rows, 0.5 wavelength spacing, uniform taper,
//    ideal phase shifters) times a cosine-power element pattern whose elevation exponent is fitted to
//    the target elevation beam width. The array geometry is a reconstruction, not a published design.
//
// Angles are in degrees; azimuth is measured in the array's local frame (0 = broadside).
// Gains are referenced to the aperture center, so PARAMETRIC gains are real and positive.

#include "common.hpp"

#include <algorithm>
#include <compare>
#include <vector>

namespace mmsound
{
    enum class Side
    {
        Tx,
        Rx
    };

    enum class PatternModel
    {
        Parametric,
        ArrayFactor
    };

    inline const char *to_string(Side s) { return s == Side::Tx ? "TX" : "RX"; }
    inline const char *to_string(PatternModel m) { return m == PatternModel::Parametric ? "PARAMETRIC" : "ARRAY_FACTOR"; }

    struct CodebookGrid
    {
        int num_azimuth = 19;
        int num_elevation = 13;
        double azimuth_start = -45.0;
        double elevation_start = -30.0;
        double step = 5.0;

        double azimuth_of(int idx) const { return azimuth_start + step * idx; }
        double elevation_of(int idx) const { return elevation_start + step * idx; }

        // Elevation index closest to 0 degrees, used by azimuth-only sweeps
        int horizon_index() const
        {
            return std::clamp(static_cast<int>(std::lround(-elevation_start / step)), 0, num_elevation - 1);
        }

        bool operator==(const CodebookGrid &) const = default;
    };

    struct BeamId
    {
        int azimuth_index = 0;
        int elevation_index = 0;
        Side side = Side::Tx;

        // Steering angles for the default grid
        double azimuth_deg() const { return CodebookGrid{}.azimuth_of(azimuth_index); }
        double elevation_deg() const { return CodebookGrid{}.elevation_of(elevation_index); }

        auto operator<=>(const BeamId &) const = default;
    };

    struct ElementGrid
    {
        int rows = 2;
        int cols = 8;
        double spacing = 0.5; // wavelengths

        bool operator==(const ElementGrid &) const = default;
    };

    struct BeamPattern
    {
        PatternModel model = PatternModel::Parametric;
        double peak_gain = 20.0;      // dBi
        double az_hpbw = 12.0;        // degrees
        double el_hpbw = 22.0;        // degrees
        double sidelobe_floor = -10.0; // dB relative to peak
        double back_lobe = -30.0;     // dB relative to peak, behind the aperture
        ElementGrid element_grid{};
        double element_az_exponent = 1.0;
        double element_el_exponent = 0.0; // fitted for ARRAY_FACTOR
        double steer_az = 0.0;        // degrees
        double steer_el = 0.0;        // degrees

        bool operator==(const BeamPattern &) const = default;

        // Complex amplitude gain; |gain|^2 is the linear power gain (dBi when converted)
        cplx gain(double azimuth, double elevation) const
        {
            return model == PatternModel::Parametric ? parametric_gain(azimuth, elevation)
                                                     : array_factor_gain(azimuth, elevation);
        }

        double gain_dbi(double azimuth, double elevation) const { return power_to_db(std::norm(gain(azimuth, elevation))); }

        // Element power pattern cos^qa(az) cos^qe(el) in the front hemisphere, zero behind
        double element_power(double azimuth, double elevation) const
        {
            const double ca = std::cos(deg_to_rad(wrap_degrees(azimuth)));
            const double ce = std::cos(deg_to_rad(elevation));
            if (ca <= 0.0 || ce <= 0.0)
                return 0.0;
            return std::pow(ca, element_az_exponent) * std::pow(ce, element_el_exponent);
        }

        // Normalized complex array factor (1 at the steering direction)
        cplx array_factor(double azimuth, double elevation) const
        {
            const double az = deg_to_rad(azimuth), el = deg_to_rad(elevation);
            const double saz = deg_to_rad(steer_az), sel = deg_to_rad(steer_el);
            const double dy = std::cos(el) * std::sin(az) - std::cos(sel) * std::sin(saz);
            const double dz = std::sin(el) - std::sin(sel);
            cplx sum(0.0, 0.0);
            const double cy = 0.5 * (element_grid.cols - 1), cz = 0.5 * (element_grid.rows - 1);
            for (int r = 0; r < element_grid.rows; ++r)
                for (int c = 0; c < element_grid.cols; ++c)
                {
                    const double y = (c - cy) * element_grid.spacing;
                    const double z = (r - cz) * element_grid.spacing;
                    sum += std::polar(1.0, 2.0 * pi * (y * dy + z * dz));
                }
            return sum / static_cast<double>(element_grid.rows * element_grid.cols);
        }

    private:
        cplx parametric_gain(double azimuth, double elevation) const
        {
            const double daz = wrap_degrees(azimuth - steer_az);
            const double del = elevation - steer_el;
            // -3 dB exactly at half the beam width in each plane
            const double main_db = -12.0 * ((daz / az_hpbw) * (daz / az_hpbw) + (del / el_hpbw) * (del / el_hpbw));
            const double ca = std::cos(deg_to_rad(wrap_degrees(azimuth)));
            const double ce = std::cos(deg_to_rad(elevation));
            double floor_db = back_lobe;
            if (ca > 0.0 && ce > 0.0)
                floor_db = std::max(back_lobe, sidelobe_floor + power_to_db(ca * ce));
            const double rel_db = std::max(main_db, floor_db);
            return cplx(db_to_amplitude(peak_gain + rel_db), 0.0);
        }

        cplx array_factor_gain(double azimuth, double elevation) const
        {
            const double elem = element_power(azimuth, elevation);
            if (elem <= 0.0)
                return cplx(0.0, 0.0);
            return db_to_amplitude(peak_gain) * std::sqrt(elem) * array_factor(azimuth, elevation);
        }
    };

    // Elevation exponent of the cosine-power element pattern that gives the requested elevation HPBW
    // at boresight. Bisection on the half-power point of |AF|^2 * element.
    inline double fit_element_elevation_exponent(const ElementGrid &grid, double target_el_hpbw)
    {
        BeamPattern probe;
        probe.model = PatternModel::ArrayFactor;
        probe.element_grid = grid;
        probe.element_az_exponent = 0.0;
        auto hpbw = [&](double q) {
            probe.element_el_exponent = q;
            // half-power point by bisection on elevation in (0, 90)
            double lo = 0.0, hi = 90.0;
            for (int i = 0; i < 60; ++i)
            {
                const double mid = 0.5 * (lo + hi);
                const double g = std::norm(probe.array_factor(0.0, mid)) * probe.element_power(0.0, mid);
                (g > 0.5 ? lo : hi) = mid;
            }
            return 2.0 * lo;
        };
        if (hpbw(0.0) <= target_el_hpbw)
            return 0.0;
        double lo = 0.0, hi = 1.0;
        while (hpbw(hi) > target_el_hpbw)
            hi *= 2.0;
        for (int i = 0; i < 60; ++i)
        {
            const double mid = 0.5 * (lo + hi);
            (hpbw(mid) > target_el_hpbw ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

    inline BeamPattern default_pattern(PatternModel model)
    {
        BeamPattern p;
        p.model = model;
        if (model == PatternModel::ArrayFactor)
        {
            static const double q = fit_element_elevation_exponent(ElementGrid{}, 22.0);
            p.element_el_exponent = q;
        }
        return p;
    }

    struct BeamCodebook
    {
        Side side = Side::Tx;
        PatternModel model = PatternModel::Parametric;
        CodebookGrid grid{};
        BeamPattern prototype{}; // steering fields ignored
        double orientation = 0.0; // degrees, mechanical rotation of the array (RX: 0, 90, 180, 270)

        bool operator==(const BeamCodebook &) const = default;

        std::size_t size() const { return static_cast<std::size_t>(grid.num_azimuth * grid.num_elevation); }

        bool contains(const BeamId &id) const
        {
            return id.azimuth_index >= 0 && id.azimuth_index < grid.num_azimuth && id.elevation_index >= 0 &&
                   id.elevation_index < grid.num_elevation;
        }

        BeamPattern pattern(const BeamId &id) const
        {
            if (!contains(id))
                throw InvalidArgument("BeamCodebook: beam index out of range");
            BeamPattern p = prototype;
            p.steer_az = grid.azimuth_of(id.azimuth_index);
            p.steer_el = grid.elevation_of(id.elevation_index);
            return p;
        }

        double steering_azimuth(const BeamId &id) const { return grid.azimuth_of(id.azimuth_index); }
        double steering_elevation(const BeamId &id) const { return grid.elevation_of(id.elevation_index); }

        // Beams of the horizontal sweep at 0 degrees elevation, ordered by azimuth
        std::vector<BeamId> azimuth_sweep() const
        {
            std::vector<BeamId> out;
            const int el = grid.horizon_index();
            for (int a = 0; a < grid.num_azimuth; ++a)
                out.push_back(BeamId{a, el, side});
            return out;
        }

        std::vector<BeamId> all_beams() const
        {
            std::vector<BeamId> out;
            for (int e = 0; e < grid.num_elevation; ++e)
                for (int a = 0; a < grid.num_azimuth; ++a)
                    out.push_back(BeamId{a, e, side});
            return out;
        }

        BeamId boresight() const { return BeamId{grid.num_azimuth / 2, grid.horizon_index(), side}; }
    };

    inline BeamCodebook default_codebook(Side side, PatternModel model = PatternModel::Parametric)
    {
        BeamCodebook cb;
        cb.side = side;
        cb.model = model;
        cb.prototype = default_pattern(model);
        return cb;
    }

    // Composes a global azimuth with the array's mechanical orientation
    inline double local_azimuth(double global_azimuth, double orientation)
    {
        return wrap_degrees(global_azimuth - orientation);
    }

    // ----- Link budget -------------------------------------------------------------

    inline double noise_floor_dbm(double bandwidth, double noise_figure)
    {
        if (!(bandwidth > 0.0))
            throw InvalidArgument("noise_floor_dbm: bandwidth must be positive");
        return thermal_noise_dbm_per_hz + 10.0 * std::log10(bandwidth) + noise_figure;
    }

    // Maximum measurable path loss in dB
    inline double link_budget_db(double eirp, double rx_peak_gain, double noise_figure, double bandwidth,
                                 double required_snr)
    {
        return eirp + rx_peak_gain - (noise_floor_dbm(bandwidth, noise_figure) + required_snr);
    }
}

#endif
