#pragma once

#include "sublim/clt.hpp"
#include "sublim/commands.hpp"
#include "sublim/config.hpp"
#include "sublim/errors.hpp"
#include "sublim/expr.hpp"
#include "sublim/grid.hpp"
#include "sublim/measures.hpp"
#include "sublim/parallel.hpp"
#include "sublim/pde.hpp"
