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

#ifndef MMSOUND_FFT_HPP
#define MMSOUND_FFT_HPP

#include "common.hpp"

#include <fftw3.h>

#include <atomic>
#include <map>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

// Thin wrapper around FFTW. Both directions are unnormalized:
//   forward:  X[k] = sum_n x[n] exp(-j 2 pi k n / N)
//   backward: x[n] = sum_k X[k] exp(+j 2 pi k n / N)
// Planning is serialized; execution on distinct buffers is thread-safe. Plans are estimated by
// default; measured plans cost planning time up front and pay off for long simulations.

namespace mmsound::fft
{
    enum class Planning
    {
        Estimate,
        Measure
    };

    namespace detail
    {
        inline std::atomic<Planning> &planning_mode()
        {
            static std::atomic<Planning> mode{Planning::Estimate};
            return mode;
        }

        class PlanCache
        {
        public:
            static PlanCache &instance()
            {
                static PlanCache cache;
                return cache;
            }

            fftw_plan get(std::size_t n, int sign)
            {
                std::lock_guard<std::mutex> lock(mutex_);
                auto key = std::make_pair(n, sign);
                auto it = plans_.find(key);
                if (it != plans_.end())
                    return it->second;
                fftw_complex *buf = fftw_alloc_complex(n);
                const unsigned effort = planning_mode() == Planning::Measure ? FFTW_MEASURE : FFTW_ESTIMATE;
                fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, sign, effort | FFTW_UNALIGNED);
                fftw_free(buf);
                plans_.emplace(key, p);
                return p;
            }

            PlanCache(const PlanCache &) = delete;
            PlanCache &operator=(const PlanCache &) = delete;

        private:
            PlanCache() = default;
            ~PlanCache()
            {
                for (auto &kv : plans_)
                    fftw_destroy_plan(kv.second);
            }

            std::mutex mutex_;
            std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
        };

        inline void execute(std::span<cplx> data, int sign)
        {
            if (data.empty())
                return;
            fftw_plan p = PlanCache::instance().get(data.size(), sign);
            auto *ptr = reinterpret_cast<fftw_complex *>(data.data());
            fftw_execute_dft(p, ptr, ptr);
        }
    }

    // Affects plans created after the call
    inline void set_planning(Planning p) { detail::planning_mode() = p; }

    inline void forward(std::span<cplx> data) { detail::execute(data, FFTW_FORWARD); }
    inline void backward(std::span<cplx> data) { detail::execute(data, FFTW_BACKWARD); }
}

#endif
