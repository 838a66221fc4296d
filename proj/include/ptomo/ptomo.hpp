#pragma once

#include "ptomo/beam.hpp"
#include "ptomo/errors.hpp"
#include "ptomo/grid.hpp"
#include "ptomo/inversion.hpp"
#include "ptomo/io.hpp"
#include "ptomo/parallel.hpp"
#include "ptomo/paraxial.hpp"
#include "ptomo/phantom.hpp"
#include "ptomo/sinogram.hpp"
#include "ptomo/tridiag.hpp"
#include "ptomo/westervelt.hpp"
