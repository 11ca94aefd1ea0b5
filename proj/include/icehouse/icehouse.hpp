#pragma once

#include "icehouse/error.hpp"
#include "icehouse/estimator.hpp"
#include "icehouse/exact.hpp"
#include "icehouse/plane.hpp"
#include "icehouse/quadgraph.hpp"
#include "icehouse/rng.hpp"
#include "icehouse/signature_grid.hpp"
#include "icehouse/tutte.hpp"
#include "icehouse/weights.hpp"
#include "icehouse/worm.hpp"
