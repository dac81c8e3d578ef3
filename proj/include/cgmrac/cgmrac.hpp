#pragma once

#include "cgmrac/baseline.hpp"
#include "cgmrac/commands.hpp"
#include "cgmrac/config.hpp"
#include "cgmrac/error.hpp"
#include "cgmrac/mrac.hpp"
#include "cgmrac/numerics.hpp"
#include "cgmrac/plant.hpp"
#include "cgmrac/sim.hpp"
