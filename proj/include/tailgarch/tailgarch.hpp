#pragma once

// Umbrella header: heavy-tail-robust estimation for GARCH(1,1).

#include "tailgarch/common.hpp"
#include "tailgarch/error_dist.hpp"
#include "tailgarch/estimators.hpp"
#include "tailgarch/inference.hpp"
#include "tailgarch/io.hpp"
#include "tailgarch/linalg.hpp"
#include "tailgarch/model.hpp"
#include "tailgarch/montecarlo.hpp"
#include "tailgarch/optimize.hpp"
#include "tailgarch/params.hpp"
#include "tailgarch/redescender.hpp"
#include "tailgarch/rng.hpp"
#include "tailgarch/special.hpp"
#include "tailgarch/trimming.hpp"
