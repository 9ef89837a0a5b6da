// Umbrella header.
#pragma once

#include "cantor/box.hpp"
#include "cantor/calibration.hpp"
#include "cantor/construction.hpp"
#include "cantor/errors.hpp"
#include "cantor/geometry.hpp"
#include "cantor/io.hpp"
#include "cantor/measure.hpp"
#include "cantor/net.hpp"
#include "cantor/parallel.hpp"
#include "cantor/rng.hpp"
#include "cantor/statistics.hpp"
