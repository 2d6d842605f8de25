#pragma once

// Single include for the whole library: radial chemotaxis parameters, the
// mass-accumulation transform, the regularized IMEX solver, barrier and
// comparison certification, blow-up thresholds, and the config/CLI plumbing.

#include "ksflow/barrier.hpp"
#include "ksflow/blowup.hpp"
#include "ksflow/cli.hpp"
#include "ksflow/comparison.hpp"
#include "ksflow/config.hpp"
#include "ksflow/grid.hpp"
#include "ksflow/initial_data.hpp"
#include "ksflow/io.hpp"
#include "ksflow/params.hpp"
#include "ksflow/pipeline.hpp"
#include "ksflow/solver.hpp"
#include "ksflow/sweep.hpp"
#include "ksflow/transform.hpp"
#include "ksflow/verify.hpp"
