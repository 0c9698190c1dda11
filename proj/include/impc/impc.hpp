#pragma once

#include "impc/batch.hpp"
#include "impc/deadlock.hpp"
#include "impc/engine.hpp"
#include "impc/geometry.hpp"
#include "impc/io.hpp"
#include "impc/model.hpp"
#include "impc/params.hpp"
#include "impc/problem.hpp"
#include "impc/rng.hpp"
#include "impc/scenario.hpp"
#include "impc/separation.hpp"
#include "impc/solver.hpp"
#include "impc/types.hpp"
#include "impc/verify.hpp"
