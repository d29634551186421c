#include "hoa/components.hpp"

#include <algorithm>
#include <thread>

namespace hoa {

Components2D label_components_2d(int width, int height, const std::function<bool(int, int)>& inside)
{
    return label_components_2d_keyed(width, height, [&](int u, int v) { return inside(u, v) ? 0 : -1; });
}

Components2D label_components_2d_keyed(int width, int height, const std::function<int(int, int)>& key)
{
    Components2D out;
    out.width = width;
    out.height = height;
    out.id.assign(std::size_t(width) * std::size_t(height), -1);

    std::vector<int> mask(out.id.size());
    for (int v = 0; v < height; ++v)
        for (int u = 0; u < width; ++u) mask[std::size_t(v) * std::size_t(width) + std::size_t(u)] = key(u, v);

    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < mask.size(); ++start) {
        if (mask[start] < 0 || out.id[start] >= 0) continue;
        const int comp = out.count++;
        out.id[start] = comp;
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            const int u = int(p % std::size_t(width));
            const int v = int(p / std::size_t(width));
            auto visit = [&](int uu, int vv) {
                if (uu < 0 || vv < 0 || uu >= width || vv >= height) return;
                const std::size_t q = std::size_t(vv) * std::size_t(width) + std::size_t(uu);
                if (mask[q] == mask[p] && out.id[q] < 0) {
                    out.id[q] = comp;
                    stack.push_back(q);
                }
            };
            visit(u - 1, v);
            visit(u + 1, v);
            visit(u, v - 1);
            visit(u, v + 1);
        }
    }
    return out;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t, std::size_t)>& fn)
{
    const std::size_t workers = std::min<std::size_t>(n, threads > 1 ? std::size_t(threads) : 1);
    if (workers <= 1) {
        if (n > 0) fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back(fn, begin, end);
    }
    for (auto& t : pool) t.join();
}

} // namespace hoa
