#pragma once

#include "mapereg/csv.hpp"
#include "mapereg/error.hpp"
#include "mapereg/finiteness.hpp"
#include "mapereg/kernel.hpp"
#include "mapereg/loss.hpp"
#include "mapereg/model_io.hpp"
#include "mapereg/pointwise.hpp"
#include "mapereg/qp_solver.hpp"
#include "mapereg/quantile.hpp"
#include "mapereg/random.hpp"
#include "mapereg/regressor.hpp"
#include "mapereg/simulation.hpp"
