#pragma once

#include "icollapse/errors.hpp"
#include "icollapse/grid.hpp"
#include "icollapse/state.hpp"
#include "icollapse/fourier.hpp"
#include "icollapse/operators.hpp"
#include "icollapse/branches.hpp"
#include "icollapse/collapse.hpp"
#include "icollapse/wiener.hpp"
#include "icollapse/dynamics.hpp"
#include "icollapse/integrator.hpp"
#include "icollapse/walk.hpp"
#include "icollapse/diagnostics.hpp"
#include "icollapse/experiments.hpp"
