#pragma once

#include "energy.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "scenario_io.hpp"
#include "objective.hpp"
#include "exact.hpp"
#include "simplex.hpp"
#include "relax.hpp"
#include "faa.hpp"
#include "random.hpp"
#include "sim.hpp"
