#ifndef ETM_ETM_HPP
#define ETM_ETM_HPP

// Umbrella header for the elapsed-time model solver library.

#include "etm/ddm.hpp"
#include "etm/fixed_point.hpp"
#include "etm/grid.hpp"
#include "etm/hazard.hpp"
#include "etm/itm.hpp"
#include "etm/kernel.hpp"
#include "etm/oracles.hpp"
#include "etm/quadrature.hpp"
#include "etm/scenario.hpp"
#include "etm/steady_state.hpp"
#include "etm/trajectory.hpp"

#endif  // ETM_ETM_HPP
