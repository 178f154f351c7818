#pragma once

#include "aoisched/channel.hpp"
#include "aoisched/config.hpp"
#include "aoisched/control.hpp"
#include "aoisched/experiment.hpp"
#include "aoisched/hopdist.hpp"
#include "aoisched/penalty.hpp"
#include "aoisched/rng.hpp"
#include "aoisched/scheduler.hpp"
#include "aoisched/sim.hpp"
#include "aoisched/timing.hpp"
