#pragma once

#include "freeconv/chebyshev.hpp"
#include "freeconv/density.hpp"
#include "freeconv/errors.hpp"
#include "freeconv/io.hpp"
#include "freeconv/measure.hpp"
#include "freeconv/oracles.hpp"
#include "freeconv/quadrature.hpp"
#include "freeconv/subordination.hpp"
#include "freeconv/support.hpp"
#include "freeconv/validation.hpp"
