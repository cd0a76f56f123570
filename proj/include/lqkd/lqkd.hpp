#pragma once

#include "lqkd/analysis.hpp"
#include "lqkd/attacks.hpp"
#include "lqkd/error.hpp"
#include "lqkd/harness.hpp"
#include "lqkd/key_material.hpp"
#include "lqkd/nettop.hpp"
#include "lqkd/qkd_engine.hpp"
#include "lqkd/qmath.hpp"
#include "lqkd/resgen.hpp"
#include "lqkd/rng.hpp"
#include "lqkd/sqkd_engine.hpp"
