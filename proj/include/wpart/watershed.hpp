#pragma once

#include <vector>

#include "wpart/grid.hpp"

namespace wpart {

/**
 * Steepest-descent watershed of -w over the in-domain cells.
 *
 * Every cell points to its neighbour with the largest strictly higher w; cells
 * without one are basin roots. Adjacent basins are then merged in order of
 * increasing pass height max(-w_c, -w_d) until at most max_regions remain.
 * Returns labels 1..k, numbered by the smallest cell of each region, and 0 for
 * out-of-domain cells. Regions that cannot be merged (disconnected masks)
 * beyond max_regions share the last label.
 */
std::vector<int> watershed_minus_w(const ScalarField& w, int max_regions);

}  // namespace wpart
