#pragma once
// Convenience umbrella for the whole library.

#include "fsk/errors.hpp"
#include "fsk/json_io.hpp"
#include "fsk/matalg.hpp"
#include "fsk/model.hpp"
#include "fsk/predictors.hpp"
#include "fsk/rng.hpp"
#include "fsk/simulate.hpp"
#include "fsk/transform.hpp"
