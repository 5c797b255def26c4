#pragma once
// Umbrella header.

#include "airy.hpp"
#include "contour.hpp"
#include "diagnostics.hpp"
#include "experiments.hpp"
#include "quadrature.hpp"
#include "regimes.hpp"
#include "rng.hpp"
#include "saddle.hpp"
#include "semicircle.hpp"
#include "special.hpp"
#include "spectral.hpp"
#include "tridiag.hpp"
