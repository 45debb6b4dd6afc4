#pragma once

// Core library
#include "pra/channel.hpp"
#include "pra/prediction.hpp"
#include "pra/special_functions.hpp"

// Planning and execution
#include "pra/lp.hpp"
#include "pra/planner.hpp"
#include "pra/scheduler.hpp"
#include "pra/simulator.hpp"

// Utilities
#include "pra/config.hpp"
#include "pra/csv.hpp"
#include "pra/manifest.hpp"
#include "pra/rng.hpp"
#include "pra/stats.hpp"
