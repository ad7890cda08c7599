#pragma once

#include "asymptotics.hpp"
#include "baseline_mimo.hpp"
#include "channel.hpp"
#include "core.hpp"
#include "experiments.hpp"
#include "geometry.hpp"
#include "mc_engine.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "validation.hpp"
