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

#ifndef MMSOUND_HPP
#define MMSOUND_HPP

#include "beams.hpp"
#include "capture.hpp"
#include "channel.hpp"
#include "common.hpp"
#include "config.hpp"
#include "fft.hpp"
#include "impairments.hpp"
#include "io.hpp"
#include "pipeline.hpp"
#include "processing.hpp"
#include "sweep.hpp"
#include "waveform.hpp"

#endif
