#pragma once

#include <vector>

#include "cracklab/geometry.hpp"

namespace cracklab {

/// Indices of the points that are vertices of the 3D convex hull.
/// Degenerate inputs (all coplanar/collinear) conservatively report every
/// point as a vertex. Quickhull, O(n log n) expected.
std::vector<std::size_t> convex_hull_vertices(const std::vector<Vec3>& points);

}  // namespace cracklab
