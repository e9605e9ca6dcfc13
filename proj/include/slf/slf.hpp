#pragma once

#include "slf/errors.hpp"
#include "slf/linalg.hpp"
#include "slf/parallel.hpp"
#include "slf/expr.hpp"
#include "slf/sde_model.hpp"
#include "slf/generator.hpp"
#include "slf/candidates.hpp"
#include "slf/checker.hpp"
#include "slf/connector.hpp"
#include "slf/lqg.hpp"
#include "slf/montecarlo.hpp"
#include "slf/io.hpp"
#include "slf/scenario.hpp"
