#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "triband/geometry.hpp"
#include "triband/rng.hpp"

using namespace triband;

TEST_CASE("box_polygon produces counter-clockwise corners") {
    const auto poly = box_polygon({0, 0, 1, 1, 0});
    REQUIRE(poly.size() == 4);
    CHECK(polygon_area(poly) == Catch::Approx(1.0));
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(std::abs(poly[i].x) == Catch::Approx(0.5));
        CHECK(std::abs(poly[i].y) == Catch::Approx(0.5));
    }
}

TEST_CASE("box_polygon quarter turn swaps the footprint axes") {
    const auto poly = box_polygon({0, 0, 1, 2, M_PI / 2});
    double max_x = 0, max_y = 0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        max_x = std::max(max_x, std::abs(poly[i].x));
        max_y = std::max(max_y, std::abs(poly[i].y));
    }
    CHECK(max_x == Catch::Approx(0.5));
    CHECK(max_y == Catch::Approx(1.0));
}

TEST_CASE("polygon area equals w*l for random boxes") {
    Rng rng(42);
    for (int i = 0; i < 1000; ++i) {
        const auto box = oracle::random_box(rng);
        CHECK(polygon_area(box_polygon(box)) == Catch::Approx(box.w * box.l).margin(1e-9));
    }
}

TEST_CASE("dilate_polygon scale factors") {
    const auto poly = box_polygon({10, 5, 2, 4, 0.3});
    SECTION("d = 0 leaves the polygon unchanged") {
        const auto out = dilate_polygon(poly, 0.0);
        for (std::size_t i = 0; i < poly.size(); ++i) {
            CHECK(out[i].x == Catch::Approx(poly[i].x).margin(1e-12));
            CHECK(out[i].y == Catch::Approx(poly[i].y).margin(1e-12));
        }
    }
    SECTION("d = 80 scales area by 3.5^2") {
        const auto out = dilate_polygon(poly, 80.0);
        CHECK(polygon_area(out) == Catch::Approx(12.25 * polygon_area(poly)).epsilon(1e-12));
    }
    SECTION("d = 40 gives s = 2.25") {
        const auto out = dilate_polygon(poly, 40.0);
        CHECK(polygon_area(out) == Catch::Approx(2.25 * 2.25 * polygon_area(poly)).epsilon(1e-12));
    }
}

TEST_CASE("dilate_polygon preserves the centroid and scales area by s^2") {
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        const auto box = oracle::random_box(rng);
        const auto poly = box_polygon(box);
        const double d = rng.uniform(0.0, 80.0);
        const auto out = dilate_polygon(poly, d);
        const Vec2 c0 = polygon_centroid(poly);
        const Vec2 c1 = polygon_centroid(out);
        CHECK(c1.x == Catch::Approx(c0.x).margin(1e-9));
        CHECK(c1.y == Catch::Approx(c0.y).margin(1e-9));
        const double s = 1.0 + 2.5 * d / 80.0;
        CHECK(polygon_area(out) == Catch::Approx(s * s * polygon_area(poly)).epsilon(1e-9));
    }
}

TEST_CASE("rotated_iou closed-form cases") {
    const OrientedBevBox a{3, -2, 1.5, 4, 0.7};
    CHECK(rotated_iou(a, a) == Catch::Approx(1.0).margin(1e-9));

    const OrientedBevBox s1{0, 0, 1, 1, 0};
    const OrientedBevBox s2{0.5, 0, 1, 1, 0};
    CHECK(rotated_iou(s1, s2) == Catch::Approx(1.0 / 3.0).margin(1e-9));

    const OrientedBevBox far_box{100, 100, 1, 1, 0.4};
    CHECK(rotated_iou(s1, far_box) == 0.0);
}

TEST_CASE("rotated_iou agrees with a Monte-Carlo estimate") {
    Rng rng(123);
    for (int i = 0; i < 40; ++i) {
        auto a = oracle::random_box(rng, 5.0);
        auto b = oracle::random_box(rng, 5.0);
        const double exact = rotated_iou(a, b);
        const double mc = oracle::monte_carlo_iou(a, b, 1000000, rng);
        CHECK(std::abs(exact - mc) <= 0.01);
    }
}

TEST_CASE("rotated_iou invariances") {
    Rng rng(99);
    for (int i = 0; i < 200; ++i) {
        auto a = oracle::random_box(rng, 5.0);
        auto b = oracle::random_box(rng, 5.0);
        const double ab = rotated_iou(a, b);
        CHECK(rotated_iou(b, a) == Catch::Approx(ab).margin(1e-9));

        auto a_spun = a;
        a_spun.yaw = a.yaw + 2 * M_PI;
        CHECK(rotated_iou(a_spun, b) == Catch::Approx(ab).margin(1e-9));

        // rigid motion applied to both boxes
        const double theta = rng.uniform(-M_PI, M_PI);
        const double tx = rng.uniform(-20, 20), ty = rng.uniform(-20, 20);
        auto move = [&](OrientedBevBox box) {
            const double c = std::cos(theta), s = std::sin(theta);
            return OrientedBevBox{c * box.cx - s * box.cy + tx, s * box.cx + c * box.cy + ty,
                                  box.w, box.l, wrap_angle(box.yaw + theta)};
        };
        CHECK(rotated_iou(move(a), move(b)) == Catch::Approx(ab).margin(1e-9));
    }
}

TEST_CASE("iou_3d vertical overlap") {
    const OrientedBevBox fp{0, 0, 2, 4, 0.3};
    CHECK(iou_3d({fp, 0, 2}, {fp, 0, 2}) == Catch::Approx(1.0).margin(1e-12));
    CHECK(iou_3d({fp, 0, 2}, {fp, 1, 3}) == Catch::Approx(1.0 / 3.0).margin(1e-12));
    CHECK(iou_3d({fp, 0, 2}, {fp, 5, 6}) == 0.0);
}

TEST_CASE("iou_3d reduces to rotated_iou on identical z-ranges") {
    Rng rng(31);
    for (int i = 0; i < 100; ++i) {
        auto a = oracle::random_box(rng, 5.0);
        auto b = oracle::random_box(rng, 5.0);
        CHECK(iou_3d({a, -1.5, 0.5}, {b, -1.5, 0.5}) ==
              Catch::Approx(rotated_iou(a, b)).margin(1e-9));
    }
}

TEST_CASE("nms_rotated basics") {
    const OrientedBevBox box{0, 0, 2, 4, 0.2};
    SECTION("single box is kept") {
        CHECK(nms_rotated({{box, 0.5, 0}}, 0.5).size() == 1);
    }
    SECTION("duplicate boxes collapse to the higher score") {
        const auto kept = nms_rotated({{box, 0.8, 0}, {box, 0.9, 0}}, 0.5);
        REQUIRE(kept.size() == 1);
        CHECK(kept[0].score == 0.9);
    }
    SECTION("identical boxes of different classes both survive") {
        CHECK(nms_rotated({{box, 0.9, 0}, {box, 0.8, 1}}, 0.5).size() == 2);
    }
}

TEST_CASE("nms_rotated matches the brute-force reference") {
    Rng rng(555);
    for (int iter = 0; iter < 2000; ++iter) {
        const int n = rng.uniform_int(0, 12);
        std::vector<ScoredBox> dets;
        for (int i = 0; i < n; ++i)
            dets.push_back({oracle::random_box(rng, 3.0), rng.uniform(0.0, 1.0),
                            rng.uniform_int(0, 2)});
        const double thresh = rng.uniform(0.05, 0.9);
        const auto fast = nms_rotated(dets, thresh);
        const auto slow = oracle::brute_force_nms(dets, thresh);
        REQUIRE(fast.size() == slow.size());
        for (std::size_t i = 0; i < fast.size(); ++i) {
            CHECK(fast[i].score == slow[i].score);
            CHECK(fast[i].class_id == slow[i].class_id);
            CHECK(fast[i].box.cx == slow[i].box.cx);
        }
    }
}

TEST_CASE("wrap_angle lands in (-pi, pi]") {
    CHECK(wrap_angle(M_PI) == Catch::Approx(M_PI));
    CHECK(wrap_angle(-M_PI) == Catch::Approx(M_PI));
    CHECK(wrap_angle(3 * M_PI / 2) == Catch::Approx(-M_PI / 2));
    CHECK(wrap_angle(0.25) == Catch::Approx(0.25));
}
