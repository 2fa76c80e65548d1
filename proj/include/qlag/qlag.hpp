// qlag.hpp: umbrella header for the whole library.

#pragma once

#include "qlag/errors.hpp"
#include "qlag/spin_algebra.hpp"
#include "qlag/trajectory.hpp"
#include "qlag/lagrangian.hpp"
#include "qlag/dynamics.hpp"
#include "qlag/histories.hpp"
#include "qlag/rng.hpp"
#include "qlag/config.hpp"
#include "qlag/born.hpp"
#include "qlag/entangle.hpp"
#include "qlag/io.hpp"
