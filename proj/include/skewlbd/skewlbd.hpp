#pragma once

#include "skewlbd/bidiagonal.hpp"
#include "skewlbd/generators.hpp"
#include "skewlbd/matrix_market.hpp"
#include "skewlbd/oracle.hpp"
#include "skewlbd/pencil.hpp"
#include "skewlbd/process.hpp"
#include "skewlbd/restart.hpp"
#include "skewlbd/ritz.hpp"
#include "skewlbd/solver.hpp"
