// Copyright (c) 2026, dvdlens contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "dvdlens/ablation.hpp"
#include "dvdlens/attention_metrics.hpp"
#include "dvdlens/detector.hpp"
#include "dvdlens/dvd_scoring.hpp"
#include "dvdlens/error.hpp"
#include "dvdlens/report.hpp"
#include "dvdlens/synth.hpp"
#include "dvdlens/trace.hpp"
#include "dvdlens/trace_io.hpp"
