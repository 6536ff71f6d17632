#pragma once

// Umbrella header.

#include "stablemv/core.hpp"
#include "stablemv/rng.hpp"
#include "stablemv/points.hpp"
#include "stablemv/statistics.hpp"
#include "stablemv/stable_noise.hpp"
#include "stablemv/stable_density.hpp"
#include "stablemv/transport.hpp"
#include "stablemv/measures.hpp"
#include "stablemv/coefficients.hpp"
#include "stablemv/models.hpp"
#include "stablemv/sde_engine.hpp"
#include "stablemv/picard.hpp"
#include "stablemv/regularity_probe.hpp"
#include "stablemv/counterexample.hpp"
#include "stablemv/io.hpp"
#include "stablemv/experiments.hpp"
#include "stablemv/recipes.hpp"
