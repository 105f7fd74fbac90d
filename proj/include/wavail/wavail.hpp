#pragma once

#include "wavail/config.hpp"
#include "wavail/ctmc.hpp"
#include "wavail/error.hpp"
#include "wavail/experiments.hpp"
#include "wavail/geometry.hpp"
#include "wavail/parallel.hpp"
#include "wavail/radio.hpp"
#include "wavail/rng.hpp"
#include "wavail/spatial.hpp"
