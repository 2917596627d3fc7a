#pragma once

#include "snimpa/errors.hpp"
#include "snimpa/units.hpp"
#include "snimpa/snake_model.hpp"
#include "snimpa/taper_network.hpp"
#include "snimpa/environment.hpp"
#include "snimpa/resonator.hpp"
#include "snimpa/paramp_sim.hpp"
#include "snimpa/readout_metrics.hpp"
