#pragma once

#include "aggdist/approx.hpp"
#include "aggdist/discretise.hpp"
#include "aggdist/distributions.hpp"
#include "aggdist/dni.hpp"
#include "aggdist/engine.hpp"
#include "aggdist/fft.hpp"
#include "aggdist/grid.hpp"
#include "aggdist/moments.hpp"
#include "aggdist/montecarlo.hpp"
#include "aggdist/numeric.hpp"
#include "aggdist/panjer.hpp"
#include "aggdist/quadrature.hpp"
#include "aggdist/riskmeasures.hpp"
