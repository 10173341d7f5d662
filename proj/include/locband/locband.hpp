#pragma once

#include "band.hpp"
#include "calibration.hpp"
#include "convolution.hpp"
#include "densities.hpp"
#include "density_tools.hpp"
#include "error.hpp"
#include "estimator.hpp"
#include "kernel.hpp"
#include "piecewise.hpp"
#include "quadrature.hpp"
#include "rng.hpp"
#include "selector.hpp"
#include "harness.hpp"
