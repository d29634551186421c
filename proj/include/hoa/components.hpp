#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace hoa {

/// 4-connected components of a 2D grid (row-major, `width` fastest).
/// Component ids are assigned in raster order of each component's first pixel.
struct Components2D {
    int width = 0;
    int height = 0;
    int count = 0;
    std::vector<int> id; // -1 for pixels outside the predicate

    int at(int u, int v) const { return id[std::size_t(v) * std::size_t(width) + std::size_t(u)]; }
};

Components2D label_components_2d(int width, int height, const std::function<bool(int u, int v)>& inside);

/// Same, but only pixels with equal non-negative keys connect; negative keys are outside.
Components2D label_components_2d_keyed(int width, int height, const std::function<int(int u, int v)>& key);

/// Runs fn(begin, end) over [0, n) split into `threads` contiguous chunks. Runs inline when threads <= 1.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t, std::size_t)>& fn);

} // namespace hoa
