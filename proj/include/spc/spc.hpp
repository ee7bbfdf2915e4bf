#pragma once
// Umbrella header.

#include "spc/codes.hpp"
#include "spc/common.hpp"
#include "spc/core.hpp"
#include "spc/decode.hpp"
#include "spc/evalharness.hpp"
#include "spc/io.hpp"
#include "spc/optimizer.hpp"
#include "spc/quantize.hpp"
#include "spc/rng.hpp"
#include "spc/scenes.hpp"
#include "spc/signal.hpp"
#include "spc/svgplot.hpp"
#include "spc/tape.hpp"
#include "spc/threadpool.hpp"
