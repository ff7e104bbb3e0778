#pragma once

// Umbrella header for the fractional-kernel optimal control library.

#include "fkoc/config.hpp"
#include "fkoc/errors.hpp"
#include "fkoc/expr.hpp"
#include "fkoc/grid.hpp"
#include "fkoc/identities.hpp"
#include "fkoc/io.hpp"
#include "fkoc/kernel.hpp"
#include "fkoc/ocp.hpp"
#include "fkoc/operators.hpp"
#include "fkoc/quadrature.hpp"
#include "fkoc/rng.hpp"
#include "fkoc/special.hpp"
