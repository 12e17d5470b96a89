#pragma once

// Umbrella header: paired-comparison rating toolkit for AFL-style match data.

#include "btkit/btcore.hpp"
#include "btkit/csv.hpp"
#include "btkit/data.hpp"
#include "btkit/error.hpp"
#include "btkit/evaluate.hpp"
#include "btkit/experiments.hpp"
#include "btkit/features.hpp"
#include "btkit/linalg.hpp"
#include "btkit/report.hpp"
#include "btkit/rng.hpp"
#include "btkit/synth.hpp"
