#pragma once

#include "calculus.hpp"
#include "cg.hpp"
#include "core.hpp"
#include "field.hpp"
#include "grid.hpp"
#include "hodge.hpp"
#include "inequalities.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "spectral.hpp"
#include "sym2.hpp"
#include "test_functions.hpp"
#include "weights.hpp"
