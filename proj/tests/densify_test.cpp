#include <gtest/gtest.h>

#include "ods/densify.hpp"
#include "ods/error.hpp"
#include "support.hpp"

namespace ods {
namespace {

bool in_disk(int x, int y, double cx, double cy, double r) {
    const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
    return dx * dx + dy * dy <= r * r;
}

DepthMap disk_map(int size, double r, double keep, float depth, test::Gen& g) {
    DepthMap m(size, size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            if (in_disk(x, y, size / 2.0, size / 2.0, r) && g.coin(keep)) m.set(x, y, depth);
        }
    }
    return m;
}

// Naive single pass written from the definition.
DepthMap naive_cross_fill(const DepthMap& in) {
    DepthMap out = in;
    for (int y = 0; y < in.height(); ++y) {
        for (int x = 0; x < in.width(); ++x) {
            if (in.valid(x, y)) continue;
            double s = 0, a = 0;
            int n = 0;
            for (int k = 1; k <= 2; ++k) {
                const int xs[4] = {x + k, x - k, x, x};
                const int ys[4] = {y, y, y + k, y - k};
                for (int j = 0; j < 4; ++j) {
                    if (xs[j] < 0 || ys[j] < 0 || xs[j] >= in.width() || ys[j] >= in.height()) continue;
                    if (!in.valid(xs[j], ys[j])) continue;
                    s += in.depth(xs[j], ys[j]);
                    a += in.alpha(xs[j], ys[j]);
                    ++n;
                }
            }
            if (n > 0) out.set(x, y, static_cast<float>(s / n), static_cast<float>(a / n));
        }
    }
    return out;
}

TEST(CrossKernelFill, HoleTakesMeanOfNeighbours) {
    DepthMap m(5, 5);
    m.set(3, 2, 1.f);
    m.set(1, 2, 2.f);
    m.set(2, 3, 3.f);
    m.set(2, 1, 4.f);
    const DepthMap out = cross_kernel_fill(m);
    ASSERT_TRUE(out.valid(2, 2));
    EXPECT_FLOAT_EQ(out.depth(2, 2), 2.5f);
}

TEST(CrossKernelFill, ArmsReachTwoPixels) {
    DepthMap m(7, 7);
    m.set(5, 3, 6.f);
    const DepthMap out = cross_kernel_fill(m);
    EXPECT_TRUE(out.valid(3, 3));
    EXPECT_FALSE(out.valid(2, 3));
    EXPECT_FALSE(out.valid(4, 4));  // diagonal is not on the cross
}

TEST(CrossKernelFill, IsolatedHoleStaysInvalid) {
    DepthMap m(9, 9);
    m.set(0, 0, 1.f);
    const DepthMap out = cross_kernel_fill(m);
    EXPECT_FALSE(out.valid(6, 6));
}

TEST(CrossKernelFill, AllInvalidUnchanged) {
    const DepthMap m(12, 7);
    EXPECT_EQ(cross_kernel_fill(m), m);
}

TEST(CrossKernelFill, MatchesNaivePassProperty) {
    test::Gen g(51);
    for (int trial = 0; trial < 50; ++trial) {
        const int w = g.integer(1, 40), h = g.integer(1, 40);
        DepthMap m(w, h);
        const double keep = g.uniform(0, 0.6);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if (g.coin(keep)) m.set(x, y, static_cast<float>(g.uniform(0.1, 10)), static_cast<float>(g.uniform(0, 1)));
            }
        }
        const DepthMap got = cross_kernel_fill(m);
        const DepthMap want = naive_cross_fill(m);
        for (size_t i = 0; i < m.size(); ++i) {
            ASSERT_EQ(got.valid(i), want.valid(i));
            if (got.valid(i)) {
                ASSERT_NEAR(got.depth(i), want.depth(i), 1e-6f * want.depth(i));
                ASSERT_NEAR(got.alpha(i), want.alpha(i), 1e-6f);
            }
        }
    }
}

TEST(EstimateMask, EmptyInputGivesZeroMask) {
    const Mask m = estimate_mask(DepthMap(30, 20));
    for (size_t i = 0; i < m.size(); ++i) ASSERT_EQ(m[i], 0.f);
}

TEST(EstimateMask, DenseDiskKeepsItsSupportWithSoftRim) {
    test::Gen g(52);
    const DepthMap disk = disk_map(64, 20, 1.0, 2.f, g);
    const Mask m = estimate_mask(disk);
    int rim = 0;
    for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 64; ++x) {
            const bool inside = disk.valid(x, y);
            if (!inside) {
                ASSERT_EQ(m(x, y), 0.f) << x << "," << y;
                continue;
            }
            ASSERT_GT(m(x, y), 0.f);
            ASSERT_LE(m(x, y), 1.f);
            if (m(x, y) < 1.f) ++rim;
            if (in_disk(x, y, 32, 32, 17)) { ASSERT_EQ(m(x, y), 1.f); }
        }
    }
    EXPECT_GT(rim, 0);
}

TEST(EstimateMask, DropoutDiskIouAgainstAnalyticDisk) {
    test::Gen g(53);
    const int size = 256;
    const double r = 100;
    const DepthMap sparse = disk_map(size, r, 0.4, 3.f, g);
    const Mask m = estimate_mask(sparse);
    size_t inter = 0, uni = 0;
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const bool a = m(x, y) > 0.f;
            const bool b = in_disk(x, y, size / 2.0, size / 2.0, r);
            inter += a && b;
            uni += a || b;
        }
    }
    EXPECT_GE(static_cast<double>(inter) / static_cast<double>(uni), 0.95);
}

TEST(EstimateMask, SupportContainsInputProperty) {
    test::Gen g(54);
    for (int trial = 0; trial < 30; ++trial) {
        const int w = g.integer(1, 60), h = g.integer(1, 60);
        DepthMap m(w, h);
        for (size_t i = 0; i < m.size(); ++i) {
            if (g.coin(0.2)) m.set(i, 1.f);
        }
        const Mask mask = estimate_mask(m);
        for (size_t i = 0; i < m.size(); ++i) {
            if (m.valid(i)) { ASSERT_GT(mask[i], 0.f); }
            ASSERT_GE(mask[i], 0.f);
            ASSERT_LE(mask[i], 1.f);
        }
    }
}

TEST(Densify, EmptyInputThrows) {
    try {
        densify(DepthMap(8, 8));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
    }
}

TEST(Densify, FullyDenseIsAFixpoint) {
    test::Gen g(55);
    DepthMap m(40, 30);
    for (size_t i = 0; i < m.size(); ++i) m.set(i, static_cast<float>(g.uniform(1, 5)));
    EXPECT_EQ(densify(m).depth, m);
}

TEST(Densify, ConstantDepthFillsTheDisk) {
    test::Gen g(56);
    const DepthMap sparse = disk_map(96, 30, 0.5, 4.25f, g);
    const DenseResult d = densify(sparse);
    for (int y = 0; y < 96; ++y) {
        for (int x = 0; x < 96; ++x) {
            if (in_disk(x, y, 48, 48, 27)) {
                ASSERT_TRUE(d.depth.valid(x, y));
                ASSERT_EQ(d.depth.depth(x, y), 4.25f);
            }
            if (d.depth.valid(x, y)) { ASSERT_EQ(d.depth.depth(x, y), 4.25f); }
        }
    }
}

TEST(Densify, PlanarRampWithHeavyDropout) {
    test::Gen g(57);
    const int w = 160, h = 120;
    auto plane = [](int x, int y) { return 2.0 + 0.02 * (x + 0.5) + 0.01 * (y + 0.5); };
    DepthMap sparse(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!g.coin(0.7)) sparse.set(x, y, static_cast<float>(plane(x, y)));
        }
    }
    const DenseResult d = densify(sparse);
    double se = 0, lo = 1e9, hi = -1e9;
    size_t n = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            lo = std::min(lo, plane(x, y));
            hi = std::max(hi, plane(x, y));
            if (!d.depth.valid(x, y)) continue;  // edge notches read as outside
            const double e = d.depth.depth(x, y) - plane(x, y);
            se += e * e;
            ++n;
        }
    }
    EXPECT_GE(static_cast<double>(n), 0.99 * w * h);
    EXPECT_LT(std::sqrt(se / static_cast<double>(n)), 0.01 * (hi - lo));
}

TEST(Densify, PreservesInputsAndIsIdempotentProperty) {
    test::Gen g(58);
    for (int trial = 0; trial < 25; ++trial) {
        const int w = g.integer(8, 80), h = g.integer(8, 80);
        DepthMap m(w, h);
        const double keep = g.uniform(0.05, 0.8);
        // a random blob with random depths
        const double cx = g.uniform(0, w), cy = g.uniform(0, h), r = g.uniform(3, 40);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if (in_disk(x, y, cx, cy, r) && g.coin(keep)) {
                    m.set(x, y, static_cast<float>(g.uniform(0.5, 20)), static_cast<float>(g.uniform(0.1, 1)));
                }
            }
        }
        if (m.valid_count() == 0) m.set(0, 0, 1.f);
        const DenseResult once = densify(m);
        for (size_t i = 0; i < m.size(); ++i) {
            if (m.valid(i)) {
                ASSERT_TRUE(once.depth.valid(i));
                ASSERT_EQ(once.depth.depth(i), m.depth(i));
                ASSERT_EQ(once.depth.alpha(i), m.alpha(i));
            }
            // mask and depth validity agree
            ASSERT_EQ(once.mask[i] > 0.f, once.depth.valid(i));
            if (once.depth.valid(i)) {
                ASSERT_GT(once.depth.depth(i), 0.f);
                ASSERT_TRUE(std::isfinite(once.depth.depth(i)));
            }
        }
        const DenseResult twice = densify(once.depth);
        ASSERT_EQ(twice.depth, once.depth);
        ASSERT_EQ(twice.mask, once.mask);
    }
}

TEST(Densify, UnreachablePixelsTakeNearestDepthAfterIterationCap) {
    DepthMap m(40, 5);
    for (int x = 0; x < 40; ++x) {
        if (x % 6 == 0) m.set(x, 2, 3.f);
    }
    const DenseResult capped = densify(m, 0);
    for (size_t i = 0; i < m.size(); ++i) {
        if (capped.mask[i] > 0.f) { ASSERT_EQ(capped.depth.depth(i), 3.f); }
    }
}

TEST(Densify, InterpolationDensifierDelegates) {
    test::Gen g(59);
    const DepthMap sparse = disk_map(32, 10, 0.5, 1.5f, g);
    const InterpolationDensifier d(7);
    EXPECT_EQ(d.run(sparse).depth, densify(sparse, 7).depth);
}

}  // namespace
}  // namespace ods
