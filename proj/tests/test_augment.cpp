#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "triband/augment.hpp"
#include "triband/bev.hpp"
#include "triband/rng.hpp"

using namespace triband;

namespace {

PointCloud sample_cloud(std::uint64_t seed, int n) {
    Rng rng(seed);
    PointCloud cloud;
    for (int i = 0; i < n; ++i)
        cloud.points.push_back({static_cast<float>(rng.uniform(0.5, 69.5)),
                                static_cast<float>(rng.uniform(-39.5, 39.5)),
                                static_cast<float>(rng.uniform(-2.5, 1.5)),
                                static_cast<float>(rng.uniform(0.0, 1.0))});
    return cloud;
}

} // namespace

TEST_CASE("rebin_shift adjusts z only") {
    const PointCloud cloud = sample_cloud(1, 64);
    SECTION("dz = 0 is the identity") {
        const PointCloud out = rebin_shift(cloud, 0.0);
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            CHECK(out.points[i].x == cloud.points[i].x);
            CHECK(out.points[i].z == cloud.points[i].z);
        }
    }
    SECTION("a small negative shift moves a boundary point down a band") {
        const GridConfig grid;
        PointCloud one;
        one.points.push_back({10.0f, 0.0f, -1.08f, 0.5f});
        // -1.08 + 1.73 is just below 0.65 in doubles, so nudge into band 2
        // first, then shift back down across the boundary.
        const PointCloud up = rebin_shift(one, 0.02);
        REQUIRE(band_of(up.points[0].z, grid) == 2);
        const PointCloud down = rebin_shift(up, -0.03);
        CHECK(band_of(down.points[0].z, grid) == 1);
    }
    SECTION("shifting up then down restores z") {
        const PointCloud out = rebin_shift(rebin_shift(cloud, 0.3), -0.3);
        for (std::size_t i = 0; i < cloud.size(); ++i)
            CHECK(out.points[i].z == Catch::Approx(cloud.points[i].z).margin(1e-7));
    }
}

TEST_CASE("jitter saturates and preserves zeros") {
    GridConfig grid;
    grid.x_max = 1.0;
    grid.y_min = 0.0;
    grid.y_max = 1.0; // 10 x 10
    BevImage img(grid);
    img.at(0, 0, 0) = 250;
    img.at(0, 1, 1) = 10;
    img.at(0, 2, 2) = 100;

    SECTION("offset 0 is the identity") {
        CHECK(jitter(img, 0.0).pixels == img.pixels);
    }
    SECTION("saturates at 255 and leaves zeros at 0") {
        const BevImage out = jitter(img, 20.0);
        CHECK(out.at(0, 0, 0) == 255);
        CHECK(out.at(0, 1, 1) == 30);
        CHECK(out.at(0, 0, 1) == 0);
    }
    SECTION("clamps at 0") {
        const BevImage out = jitter(img, -20.0);
        CHECK(out.at(0, 1, 1) == 0);
        CHECK(out.at(0, 2, 2) == 80);
    }
}

TEST_CASE("augment_frame is deterministic in its seed") {
    const GridConfig grid;
    const PointCloud cloud = sample_cloud(2, 300);
    AugmentParams params;
    params.rng_seed = 42;
    const BevImage a = augment_frame(cloud, params, grid);
    const BevImage b = augment_frame(cloud, params, grid);
    CHECK(a.pixels == b.pixels);

    params.rng_seed = 43;
    CHECK(augment_frame(cloud, params, grid).pixels != a.pixels);
}

TEST_CASE("degenerate parameters reduce augment_frame to plain encode") {
    const GridConfig grid;
    const PointCloud cloud = sample_cloud(3, 200);
    AugmentParams params;
    params.dz_min = 0.0;
    params.dz_max = 0.0;
    params.sigma = 0.0;
    CHECK(augment_frame(cloud, params, grid).pixels == encode(cloud, grid).pixels);
}

TEST_CASE("jitter never flips the zero mask of the shifted encode") {
    const GridConfig grid;
    Rng rng(4);
    for (int iter = 0; iter < 10; ++iter) {
        const PointCloud cloud = sample_cloud(100 + iter, 250);
        AugmentParams params;
        params.rng_seed = rng.next_u64();
        Rng replay(params.rng_seed);
        const double dz = replay.uniform(params.dz_min, params.dz_max);
        const BevImage base = encode(rebin_shift(cloud, dz), grid);
        const BevImage out = augment_frame(cloud, params, grid);
        for (std::size_t i = 0; i < base.pixels.size(); ++i)
            if (base.pixels[i] == 0)
                CHECK(out.pixels[i] == 0);
    }
}

TEST_CASE("multi_offset_encode produces the three shifted encodings") {
    const GridConfig grid;
    const PointCloud cloud = sample_cloud(5, 300);
    const auto imgs = multi_offset_encode(cloud, grid);
    CHECK(imgs[1].pixels == encode(cloud, grid).pixels);
    CHECK(imgs[0].pixels == encode(rebin_shift(cloud, -0.3), grid).pixels);
    CHECK(imgs[2].pixels == encode(rebin_shift(cloud, 0.3), grid).pixels);
}

TEST_CASE("multi_offset_encode re-bins a band-3 point into band 2 at dz=-0.3") {
    const GridConfig grid;
    PointCloud cloud;
    cloud.points.push_back({10.0f, 0.0f, 1.31f - 1.73f, 0.9f}); // h = 1.31
    REQUIRE(band_of(cloud.points[0].z, grid) == 3);
    const auto imgs = multi_offset_encode(cloud, grid);
    CHECK(imgs[1].at(400, 100, 2) > 0);
    CHECK(imgs[0].at(400, 100, 1) > 0); // band 2 after the -0.3 shift
    CHECK(imgs[0].at(400, 100, 2) == 0);
}

TEST_CASE("multi_offset_encode of an empty cloud is three zero images") {
    const GridConfig grid;
    const auto imgs = multi_offset_encode({}, grid);
    for (const BevImage& img : imgs)
        CHECK(std::all_of(img.pixels.begin(), img.pixels.end(),
                          [](std::uint8_t v) { return v == 0; }));
}
