#pragma once

#include "ramify/config.hpp"
#include "ramify/diagnostics.hpp"
#include "ramify/errors.hpp"
#include "ramify/exact_cost.hpp"
#include "ramify/experiments.hpp"
#include "ramify/geometry.hpp"
#include "ramify/json_io.hpp"
#include "ramify/kernels.hpp"
#include "ramify/mollified_cost.hpp"
#include "ramify/objective.hpp"
#include "ramify/optimizer.hpp"
#include "ramify/parallel.hpp"
#include "ramify/plan.hpp"
#include "ramify/svg.hpp"
#include "ramify/topology.hpp"
