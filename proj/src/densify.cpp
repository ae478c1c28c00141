#include "ods/densify.hpp"

#include <algorithm>
#include <array>
#include <deque>

#include "ods/error.hpp"

namespace ods {

namespace {

using Binary = Raster<uint8_t>;

constexpr std::array<std::array<int, 2>, 8> kCross = {{{1, 0}, {2, 0}, {-1, 0}, {-2, 0},
                                                        {0, 1}, {0, 2}, {0, -1}, {0, -2}}};

struct FillSample {
    bool filled = false;
    float depth = 0.f;
    float alpha = 0.f;
};

FillSample cross_mean(const DepthMap& in, int x, int y) {
    double sum = 0.0;
    double alpha = 0.0;
    int count = 0;
    for (const auto& o : kCross) {
        const int nx = x + o[0];
        const int ny = y + o[1];
        if (nx < 0 || ny < 0 || nx >= in.width() || ny >= in.height() || !in.valid(nx, ny)) continue;
        sum += in.depth(nx, ny);
        alpha += in.alpha(nx, ny);
        ++count;
    }
    if (count == 0) return {};
    return {true, static_cast<float>(sum / count), static_cast<float>(alpha / count)};
}

// Per-row distance to the nearest pixel equal to `value`, capped at `cap`.
// Pixels beyond the row ends never match.
Binary row_distance(const Binary& in, uint8_t value, int cap) {
    const int w = in.width();
    Binary out(w, in.height());
    const auto c = static_cast<uint8_t>(cap);
    for (int y = 0; y < in.height(); ++y) {
        const auto src = in.row(y);
        auto dst = out.row(y);
        uint8_t d = c;
        for (int x = 0; x < w; ++x) {
            d = src[static_cast<size_t>(x)] == value ? 0 : static_cast<uint8_t>(std::min<int>(d + 1, c));
            dst[static_cast<size_t>(x)] = d;
        }
        d = c;
        for (int x = w - 1; x >= 0; --x) {
            d = src[static_cast<size_t>(x)] == value ? 0 : static_cast<uint8_t>(std::min<int>(d + 1, c));
            dst[static_cast<size_t>(x)] = std::min(dst[static_cast<size_t>(x)], d);
        }
    }
    return out;
}

std::vector<int> disk_half_widths(int r) {
    std::vector<int> half(static_cast<size_t>(r) + 1);
    for (int dy = 0; dy <= r; ++dy) {
        int w = 0;
        while ((w + 1) * (w + 1) + dy * dy <= r * r) ++w;
        half[static_cast<size_t>(dy)] = w;
    }
    return half;
}

// Disk dilation; pixels outside the raster count as unset.
Binary dilate_disk(const Binary& in, int r) {
    const std::vector<int> half = disk_half_widths(r);
    const Binary dist = row_distance(in, 1, r + 1);
    Binary out(in.width(), in.height(), 0);
    for (int y = 0; y < in.height(); ++y) {
        auto dst = out.row(y);
        for (int dy = -r; dy <= r; ++dy) {
            const int sy = y + dy;
            if (sy < 0 || sy >= in.height()) continue;
            const auto hw = static_cast<uint8_t>(half[static_cast<size_t>(std::abs(dy))]);
            const auto src = dist.row(sy);
            for (size_t x = 0; x < dst.size(); ++x) dst[x] |= src[x] <= hw;
        }
    }
    return out;
}

// Disk erosion; pixels outside the raster count as set.
Binary erode_disk(const Binary& in, int r) {
    const std::vector<int> half = disk_half_widths(r);
    const Binary dist = row_distance(in, 0, r + 1);
    Binary out(in.width(), in.height(), 1);
    for (int y = 0; y < in.height(); ++y) {
        auto dst = out.row(y);
        for (int dy = -r; dy <= r; ++dy) {
            const int sy = y + dy;
            if (sy < 0 || sy >= in.height()) continue;
            const auto hw = static_cast<uint8_t>(half[static_cast<size_t>(std::abs(dy))]);
            const auto src = dist.row(sy);
            for (size_t x = 0; x < dst.size(); ++x) dst[x] &= src[x] > hw;
        }
    }
    return out;
}

// Closing never shrinks the set since erosion treats the outside as set.
Binary close_disk(const Binary& in, int r) { return erode_disk(dilate_disk(in, r), r); }

Binary fill_holes(const Binary& in) {
    const int w = in.width();
    const int h = in.height();
    Binary outside(w, h, 0);
    std::deque<std::pair<int, int>> queue;
    auto seed = [&](int x, int y) {
        if (!in(x, y) && !outside(x, y)) {
            outside(x, y) = 1;
            queue.emplace_back(x, y);
        }
    };
    for (int x = 0; x < w; ++x) {
        seed(x, 0);
        seed(x, h - 1);
    }
    for (int y = 0; y < h; ++y) {
        seed(0, y);
        seed(w - 1, y);
    }
    while (!queue.empty()) {
        const auto [x, y] = queue.front();
        queue.pop_front();
        if (x > 0) seed(x - 1, y);
        if (x + 1 < w) seed(x + 1, y);
        if (y > 0) seed(x, y - 1);
        if (y + 1 < h) seed(x, y + 1);
    }
    Binary out(w, h);
    for (size_t i = 0; i < in.size(); ++i) out[i] = outside[i] ? 0 : 1;
    return out;
}

Binary mask_support(const DepthMap& sparse) {
    Binary support = sparse.validity();
    if (support.empty()) return support;
    for (int round = 0; round < 8; ++round) {
        Binary next = fill_holes(close_disk(support, kMaskCloseRadius));
        if (next == support) break;
        support = std::move(next);
    }
    return support;
}

Mask soften_inside(const Binary& support) {
    const int w = support.width();
    const int h = support.height();
    Mask out(w, h, 0.f);
    constexpr float kWeights[3] = {0.25f, 0.5f, 0.25f};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!support(x, y)) continue;
            float acc = 0.f;
            for (int dy = -1; dy <= 1; ++dy) {
                const int sy = std::clamp(y + dy, 0, h - 1);
                for (int dx = -1; dx <= 1; ++dx) {
                    const int sx = std::clamp(x + dx, 0, w - 1);
                    acc += kWeights[dx + 1] * kWeights[dy + 1] * support(sx, sy);
                }
            }
            out(x, y) = acc;
        }
    }
    return out;
}

// Multi-source BFS: each still-invalid support pixel copies its nearest valid neighbour.
void fill_unreached(DepthMap& depth, const Binary& support) {
    const int w = depth.width();
    const int h = depth.height();
    Raster<int32_t> source(w, h, -1);
    std::deque<int32_t> queue;
    for (size_t i = 0; i < depth.size(); ++i) {
        if (depth.valid(i)) {
            source[i] = static_cast<int32_t>(i);
            queue.push_back(static_cast<int32_t>(i));
        }
    }
    while (!queue.empty()) {
        const int32_t i = queue.front();
        queue.pop_front();
        const int x = i % w;
        const int y = i / w;
        const int nbrs[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
        for (const auto& n : nbrs) {
            if (n[0] < 0 || n[1] < 0 || n[0] >= w || n[1] >= h) continue;
            const size_t j = depth.depths().index(n[0], n[1]);
            if (source[j] >= 0) continue;
            source[j] = source[static_cast<size_t>(i)];
            queue.push_back(static_cast<int32_t>(j));
        }
    }
    for (size_t i = 0; i < depth.size(); ++i) {
        if (support[i] && !depth.valid(i) && source[i] >= 0) {
            const auto s = static_cast<size_t>(source[i]);
            depth.set(i, depth.depth(s), depth.alpha(s));
        }
    }
}

}  // namespace

DepthMap cross_kernel_fill(const DepthMap& depth) {
    DepthMap out = depth;
    for (int y = 0; y < depth.height(); ++y) {
        for (int x = 0; x < depth.width(); ++x) {
            if (depth.valid(x, y)) continue;
            const FillSample s = cross_mean(depth, x, y);
            if (s.filled) out.set(x, y, s.depth, s.alpha);
        }
    }
    return out;
}

Mask estimate_mask(const DepthMap& sparse) { return soften_inside(mask_support(sparse)); }

DenseResult densify(const DepthMap& sparse, int max_iters) {
    if (sparse.valid_count() == 0) throw Error(ErrorCode::EmptyInput, "densify needs at least one valid depth");
    const Binary support = mask_support(sparse);

    DepthMap current = sparse;
    std::vector<size_t> pending;
    for (size_t i = 0; i < current.size(); ++i) {
        if (support[i] && !current.valid(i)) pending.push_back(i);
    }
    const int w = current.width();
    const int h = current.height();
    // After the first pass only pixels on the cross of a newly filled pixel can
    // change, so each pass looks at that frontier instead of every hole.
    std::vector<int> stamp(current.size(), -1);
    std::vector<std::pair<size_t, FillSample>> updates;
    for (int iter = 0; iter < max_iters && !pending.empty(); ++iter) {
        updates.clear();
        for (const size_t i : pending) {
            const FillSample s = cross_mean(current, static_cast<int>(i % static_cast<size_t>(w)),
                                            static_cast<int>(i / static_cast<size_t>(w)));
            if (s.filled) updates.emplace_back(i, s);
        }
        if (updates.empty()) break;
        for (const auto& [i, s] : updates) current.set(i, s.depth, s.alpha);
        pending.clear();
        for (const auto& [i, s] : updates) {
            const int x = static_cast<int>(i % static_cast<size_t>(w));
            const int y = static_cast<int>(i / static_cast<size_t>(w));
            for (const auto& o : kCross) {
                const int nx = x + o[0];
                const int ny = y + o[1];
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                const size_t j = current.depths().index(nx, ny);
                if (!support[j] || current.valid(j) || stamp[j] == iter) continue;
                stamp[j] = iter;
                pending.push_back(j);
            }
        }
    }
    for (size_t i = 0; i < current.size(); ++i) {
        if (support[i] && !current.valid(i)) {
            fill_unreached(current, support);
            break;
        }
    }

    DenseResult result;
    result.mask = soften_inside(support);
    result.depth = std::move(current);
    for (size_t i = 0; i < result.depth.size(); ++i) {
        if (!support[i] && result.depth.valid(i)) result.depth.invalidate(i);
    }
    return result;
}

}  // namespace ods
