#pragma once

#include "roughfio/vec.hpp"
#include "roughfio/fft.hpp"
#include "roughfio/grid.hpp"
#include "roughfio/inputs.hpp"
#include "roughfio/symbols.hpp"
#include "roughfio/decomposition.hpp"
#include "roughfio/sparse.hpp"
#include "roughfio/engine.hpp"
#include "roughfio/maximal.hpp"
#include "roughfio/fit.hpp"
#include "roughfio/exponents.hpp"
#include "roughfio/experiments.hpp"
