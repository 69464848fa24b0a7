#pragma once

// Umbrella header.

#include "ampdet/amp.hpp"
#include "ampdet/denoiser.hpp"
#include "ampdet/errors.hpp"
#include "ampdet/experiment.hpp"
#include "ampdet/gst.hpp"
#include "ampdet/ht.hpp"
#include "ampdet/keyval.hpp"
#include "ampdet/metrics.hpp"
#include "ampdet/parallel.hpp"
#include "ampdet/rng.hpp"
#include "ampdet/scenario.hpp"
#include "ampdet/sr.hpp"
#include "ampdet/state_evolution.hpp"
#include "ampdet/types.hpp"
