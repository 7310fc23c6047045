#pragma once

#include "cirl/linalg.hpp"
#include "cirl/mdp.hpp"
#include "cirl/rng.hpp"
#include "cirl/parallel.hpp"
#include "cirl/dynamic_programming.hpp"
#include "cirl/reward_geometry.hpp"
#include "cirl/centroids.hpp"
#include "cirl/estimators.hpp"
#include "cirl/simplex.hpp"
#include "cirl/planning.hpp"
#include "cirl/geometry_lab.hpp"
#include "cirl/json_io.hpp"
#include "cirl/gridworld.hpp"
#include "cirl/scenario.hpp"
