#pragma once

#include "corl/chance_projection.hpp"
#include "corl/dynamics.hpp"
#include "corl/experiment.hpp"
#include "corl/mppi.hpp"
#include "corl/normal.hpp"
#include "corl/orca.hpp"
#include "corl/orca_dd.hpp"
#include "corl/parallel.hpp"
#include "corl/planner.hpp"
#include "corl/policy.hpp"
#include "corl/rng.hpp"
#include "corl/scenarios.hpp"
#include "corl/sim.hpp"
#include "corl/simplex.hpp"
#include "corl/vec2.hpp"
