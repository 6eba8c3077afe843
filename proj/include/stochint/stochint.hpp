#pragma once

// Umbrella header: the numerical library plus the scenario runner.
#include "stochint/error.hpp"
#include "stochint/parallel.hpp"
#include "stochint/rng.hpp"
#include "stochint/prob_core.hpp"
#include "stochint/field.hpp"
#include "stochint/drivers.hpp"
#include "stochint/riemann.hpp"
#include "stochint/interchange.hpp"
#include "stochint/parabolic.hpp"
#include "stochint/fd_oracle.hpp"
#include "stochint/spde.hpp"
#include "stochint/io.hpp"
#include "stochint/catalog.hpp"
#include "stochint/config.hpp"
#include "stochint/scenario.hpp"
