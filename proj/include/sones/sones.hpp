#pragma once

#include "sones/csv.hpp"
#include "sones/dynamics.hpp"
#include "sones/eigen.hpp"
#include "sones/error.hpp"
#include "sones/estimation.hpp"
#include "sones/filters.hpp"
#include "sones/integrator.hpp"
#include "sones/levelset.hpp"
#include "sones/polynomial.hpp"
#include "sones/probing.hpp"
#include "sones/rational.hpp"
#include "sones/runner.hpp"
#include "sones/scenario.hpp"
#include "sones/toml_lite.hpp"
