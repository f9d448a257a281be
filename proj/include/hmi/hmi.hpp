#pragma once

#include "hmi/bounds.hpp"
#include "hmi/csv.hpp"
#include "hmi/impact.hpp"
#include "hmi/params.hpp"
#include "hmi/reaction.hpp"
#include "hmi/rng.hpp"
#include "hmi/schedule.hpp"
#include "hmi/sim.hpp"
#include "hmi/special.hpp"
#include "hmi/version.hpp"
#include "hmi/volterra.hpp"
