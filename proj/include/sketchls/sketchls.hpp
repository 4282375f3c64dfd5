#pragma once

// Umbrella header: sketched solvers for L2-regularized least squares.

#include "sketchls/closed_form.hpp"
#include "sketchls/data_io.hpp"
#include "sketchls/errors.hpp"
#include "sketchls/linalg.hpp"
#include "sketchls/pcg.hpp"
#include "sketchls/rng.hpp"
#include "sketchls/sketch.hpp"
#include "sketchls/solvers.hpp"
#include "sketchls/theory.hpp"
