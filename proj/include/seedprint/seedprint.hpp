// Copyright 2026 The SeedPrint Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "seedprint/checkpoint.hpp"
#include "seedprint/experiments.hpp"
#include "seedprint/fingerprint.hpp"
#include "seedprint/numerics.hpp"
#include "seedprint/parallel.hpp"
#include "seedprint/probes.hpp"
#include "seedprint/report.hpp"
#include "seedprint/sink.hpp"
#include "seedprint/stats.hpp"
#include "seedprint/theory.hpp"
#include "seedprint/transformer.hpp"
