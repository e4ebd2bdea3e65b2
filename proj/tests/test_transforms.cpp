#include "actprof/transforms.hpp"

#include "actprof/errors.hpp"
#include "actprof/rng.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace actprof;

namespace {

data::image single_pixel(int r, int c, float v = 1.0f) {
    data::image img;
    img.at(r, c) = v;
    return img;
}

data::image gaussian_blob(double cr, double cc, double sigma) {
    data::image img;
    for (int r = 0; r < data::image_rows; ++r)
        for (int c = 0; c < data::image_cols; ++c) {
            const double d2 = (r - cr) * (r - cr) + (c - cc) * (c - cc);
            img.at(r, c) = static_cast<float>(std::exp(-d2 / (2 * sigma * sigma)));
        }
    return img;
}

double pixel_sum(const data::image& img) {
    double s = 0;
    for (const float v : img.px) s += v;
    return s;
}

double correlation(const data::image& a, const data::image& b) {
    double ma = 0, mb = 0;
    for (int i = 0; i < data::image_pixels; ++i) {
        ma += a.px[static_cast<std::size_t>(i)];
        mb += b.px[static_cast<std::size_t>(i)];
    }
    ma /= data::image_pixels;
    mb /= data::image_pixels;
    double cov = 0, va = 0, vb = 0;
    for (int i = 0; i < data::image_pixels; ++i) {
        const double da = a.px[static_cast<std::size_t>(i)] - ma;
        const double db = b.px[static_cast<std::size_t>(i)] - mb;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    return cov / std::sqrt(va * vb);
}

/// Model that predicts class 0 while the probe pixel (5,10) holds its mass
/// and class 1 once rotation has smeared it; hand-wired, no training.
net::network_model probe_model() {
    auto m = net::init_model(net::parse_architecture("784:2:relu,2:2:softmax"), 1);
    for (auto& layer : m.weights) std::fill(layer.begin(), layer.end(), 0.0f);
    const int probe = 5 * data::image_cols + 10;
    for (int i = 0; i < data::image_pixels; ++i) {
        m.weight_at(0, 0, i) = i == probe ? 20.0f : 0.0f;
        m.weight_at(0, 1, i) = i == probe ? 0.0f : 5.0f;
    }
    m.biases[0] = {-1.0f, 0.0f};
    m.weight_at(1, 0, 0) = 4.0f;
    m.weight_at(1, 1, 1) = 4.0f;
    return m;
}

/// Constant predictor: always class 0, whatever the input.
net::network_model constant_model() {
    auto m = net::init_model(net::parse_architecture("784:2:relu,2:2:softmax"), 1);
    for (auto& layer : m.weights) std::fill(layer.begin(), layer.end(), 0.0f);
    m.biases[1] = {3.0f, 0.0f};
    return m;
}

} // namespace

TEST_CASE("rotate by zero is the identity") {
    util::rng gen(3);
    data::image img;
    for (auto& v : img.px) v = static_cast<float>(gen.next_unit());
    const auto out = xform::rotate(img, 0.0);
    CHECK(out.px == img.px);

    CHECK_THROWS_AS(xform::rotate(img, std::nan("")), data_error);
}

TEST_CASE("rotate 90 degrees maps a single pixel to the hand-computed cell") {
    // pivot (13.5, 13.5); source (5, 10) has offset (-8.5, -3.5); a +90 turn
    // sends offset (dr, dc) to (-dc, dr) = (3.5, -8.5), i.e. cell (17, 5)
    const auto img = single_pixel(5, 10);
    const auto out = xform::rotate(img, 90.0);
    CHECK(out.at(17, 5) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(pixel_sum(out) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("rotate full turn recovers the image") {
    const auto img = gaussian_blob(13.0, 15.0, 4.0);
    const auto out = xform::rotate(img, 360.0);
    for (int i = 0; i < data::image_pixels; ++i)
        CHECK(std::fabs(out.px[static_cast<std::size_t>(i)] -
                        img.px[static_cast<std::size_t>(i)]) < 1e-6);
}

TEST_CASE("transform outputs stay inside [0,1] for random inputs") {
    util::rng gen(9);
    for (int trial = 0; trial < 20; ++trial) {
        data::image img;
        for (auto& v : img.px) v = static_cast<float>(gen.next_unit());
        const double angle = gen.uniform(-180.0, 180.0);
        for (const auto& out :
             {xform::rotate(img, angle), xform::translate(img, gen.uniform(-9, 9), gen.uniform(-9, 9)),
              xform::scale(img, gen.uniform(0.3, 3.0), gen.uniform(0.3, 3.0))}) {
            for (const float v : out.px) {
                CHECK(v >= 0.0f);
                CHECK(v <= 1.0f);
            }
        }
    }
}

TEST_CASE("rotate there and back is close on a smooth image") {
    const auto img = gaussian_blob(13.5, 13.5, 5.0);
    for (const double angle : {17.0, 33.0, 61.0}) {
        const auto back = xform::rotate(xform::rotate(img, angle), -angle);
        for (int i = 0; i < data::image_pixels; ++i)
            CHECK(std::fabs(back.px[static_cast<std::size_t>(i)] -
                            img.px[static_cast<std::size_t>(i)]) < 0.05);
    }
}

TEST_CASE("translate: identity, full shift out of frame, pixel mapping") {
    const auto img = single_pixel(5, 5);
    const auto same = xform::translate(img, 0, 0);
    CHECK(same.px == img.px);

    const auto gone = xform::translate(img, 28, 0);
    CHECK(pixel_sum(gone) == 0.0);

    // convention: content moves to (row + ty, col + tx)
    const auto moved = xform::translate(img, 2, 3);
    CHECK(moved.at(8, 7) == 1.0f);
    CHECK(pixel_sum(moved) == doctest::Approx(1.0));
}

TEST_CASE("scale: identity, shrink-then-zoom correlation, bad factors") {
    const auto img = gaussian_blob(13.5, 13.5, 4.0);
    const auto same = xform::scale(img, 1, 1);
    CHECK(same.px == img.px);

    const auto small = xform::scale(img, 0.5, 0.5);
    const auto back = xform::scale(small, 2.0, 2.0);
    CHECK(correlation(img, back) > 0.9);

    CHECK_THROWS_AS(xform::scale(img, 0.0, 1.0), data_error);
    CHECK_THROWS_AS(xform::scale(img, 1.0, -2.0), data_error);
}

TEST_CASE("rotate_until_misclassified finds the first flipping angle") {
    const auto model = probe_model();
    const auto img = single_pixel(5, 10);

    // sanity: the unrotated probe image is classified as its label 0
    CHECK(net::forward(model, {img.px.data(), img.px.size()}).best_class == 0);

    const auto outcome = xform::rotate_until_misclassified(model, img, 0, 5.0, 40.0);
    REQUIRE(outcome.has_value());
    CHECK(outcome->steps_taken == 1);
    CHECK(outcome->applied_angle == 5.0); // positive angle tried first
    CHECK(outcome->original_label == 0);
    CHECK(outcome->predicted_class == 1);

    // deterministic: same inputs, same outcome
    const auto again = xform::rotate_until_misclassified(model, img, 0, 5.0, 40.0);
    REQUIRE(again.has_value());
    CHECK(again->applied_angle == outcome->applied_angle);
    CHECK(again->steps_taken == outcome->steps_taken);
}

TEST_CASE("rotate_until_misclassified: robust and skipped cases") {
    const auto model = constant_model();
    const auto img = single_pixel(5, 10);

    // constant predictor never flips: none
    CHECK_FALSE(xform::rotate_until_misclassified(model, img, 0, 5.0, 40.0).has_value());

    // already misclassified unrotated: skipped
    CHECK_FALSE(xform::rotate_until_misclassified(model, img, 1, 5.0, 40.0).has_value());

    CHECK_THROWS_AS(xform::rotate_until_misclassified(model, img, 0, 0.0, 40.0),
                    data_error);
}

TEST_CASE("build_rotation_set keeps exactly the misclassified outcomes") {
    data::labeled_dataset empty;
    const auto model = probe_model();
    CHECK(xform::build_rotation_set(model, empty, 5, 40).set.size() == 0);

    const auto constant = constant_model();
    data::labeled_dataset all_zero;
    for (int i = 0; i < 4; ++i) {
        all_zero.images.push_back(single_pixel(5 + i, 10));
        all_zero.labels.push_back(0);
        all_zero.ids.push_back(i * 10);
    }
    CHECK(xform::build_rotation_set(constant, all_zero, 5, 40).set.size() == 0);

    const auto rs = xform::build_rotation_set(model, all_zero, 5, 40, 2);
    CHECK(rs.set.size() > 0);
    CHECK(rs.set.category == data::category::rotation);
    REQUIRE(rs.outcomes.size() == rs.set.size());
    for (std::size_t i = 0; i < rs.set.size(); ++i) {
        // postcondition sweep: re-verify by a fresh forward pass
        const auto pred = net::forward(
            model, {rs.set.images[i].px.data(), rs.set.images[i].px.size()});
        CHECK(pred.best_class == rs.outcomes[i].predicted_class);
        CHECK(pred.best_class != rs.outcomes[i].original_label);
        CHECK(rs.set.labels[i] == rs.outcomes[i].original_label);
    }
    // ids refer to the source images
    CHECK(rs.set.ids[0] % 10 == 0);
}
