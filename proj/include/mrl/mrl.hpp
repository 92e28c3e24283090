#pragma once

// Umbrella header: nonparametric survival and mean-residual-life estimation
// from right-censored data, Poisson (Hille) smoothing, plug-in inference,
// and the Monte Carlo harness.

#include "mrl/distributions.hpp"
#include "mrl/errors.hpp"
#include "mrl/inference.hpp"
#include "mrl/io.hpp"
#include "mrl/mrl_estimator.hpp"
#include "mrl/poisson_smoother.hpp"
#include "mrl/quadrature.hpp"
#include "mrl/random_stream.hpp"
#include "mrl/sample.hpp"
#include "mrl/simulate.hpp"
#include "mrl/stats.hpp"
#include "mrl/step_survival.hpp"
#include "mrl/version.hpp"
