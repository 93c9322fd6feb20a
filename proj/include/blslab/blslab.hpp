#pragma once

#include "bls.hpp"
#include "datakit.hpp"
#include "errors.hpp"
#include "estimation.hpp"
#include "generators.hpp"
#include "montecarlo.hpp"
#include "radial.hpp"
#include "rng.hpp"
#include "specfun.hpp"
#include "version.hpp"
