#pragma once

#include "magnonlink/errors.hpp"
#include "magnonlink/units.hpp"
#include "magnonlink/model.hpp"
#include "magnonlink/sync_solver.hpp"
#include "magnonlink/dynamics.hpp"
#include "magnonlink/experiments.hpp"
#include "magnonlink/fitting.hpp"
#include "magnonlink/io.hpp"
