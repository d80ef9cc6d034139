#pragma once

// Umbrella header for the fault-tolerant dynamic-positioning stack.

#include "ftc/angles.hpp"
#include "ftc/controller.hpp"
#include "ftc/error.hpp"
#include "ftc/fdi.hpp"
#include "ftc/linalg.hpp"
#include "ftc/plant.hpp"
#include "ftc/rng.hpp"
#include "ftc/scenario.hpp"
#include "ftc/simulation.hpp"
#include "ftc/thrusters.hpp"
