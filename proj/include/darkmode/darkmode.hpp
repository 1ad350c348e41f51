#pragma once

#include "darkmode/common.hpp"
#include "darkmode/model.hpp"
#include "darkmode/effective.hpp"
#include "darkmode/steady_state.hpp"
#include "darkmode/spectra.hpp"
#include "darkmode/trajectory.hpp"
#include "darkmode/scenario.hpp"
#include "darkmode/config.hpp"
#include "darkmode/sweep.hpp"
#include "darkmode/emit.hpp"
