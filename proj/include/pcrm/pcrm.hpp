#pragma once

#include "pcrm/affine.hpp"
#include "pcrm/analysis.hpp"
#include "pcrm/bench.hpp"
#include "pcrm/circumcenter.hpp"
#include "pcrm/errors.hpp"
#include "pcrm/io.hpp"
#include "pcrm/problem_gen.hpp"
#include "pcrm/solvers.hpp"
#include "pcrm/types.hpp"
