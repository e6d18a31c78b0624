#pragma once

namespace solar {
inline constexpr const char* kVersion = "0.1.0";
}

#include "solar/config.hpp"
#include "solar/errors.hpp"
#include "solar/first_passage.hpp"
#include "solar/general_model.hpp"
#include "solar/household.hpp"
#include "solar/income_distribution.hpp"
#include "solar/montecarlo.hpp"
#include "solar/numerics.hpp"
#include "solar/parallel.hpp"
#include "solar/philox.hpp"
#include "solar/planner.hpp"
#include "solar/population.hpp"
