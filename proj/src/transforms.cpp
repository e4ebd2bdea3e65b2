#include "actprof/transforms.hpp"

#include "actprof/errors.hpp"
#include "actprof/parallel.hpp"

#include <cmath>

namespace actprof::xform {

namespace {

constexpr double center_r = (data::image_rows - 1) / 2.0; // 13.5
constexpr double center_c = (data::image_cols - 1) / 2.0;

float bilinear_sample(const data::image& img, double r, double c) {
    const double fr = std::floor(r);
    const double fc = std::floor(c);
    const int r0 = static_cast<int>(fr);
    const int c0 = static_cast<int>(fc);
    const double wr = r - fr;
    const double wc = c - fc;

    auto pixel = [&](int rr, int cc) -> double {
        if (rr < 0 || rr >= data::image_rows || cc < 0 || cc >= data::image_cols)
            return 0.0; // out-of-frame samples fill with 0
        return img.at(rr, cc);
    };

    const double v = (1 - wr) * (1 - wc) * pixel(r0, c0) +
                     (1 - wr) * wc * pixel(r0, c0 + 1) +
                     wr * (1 - wc) * pixel(r0 + 1, c0) +
                     wr * wc * pixel(r0 + 1, c0 + 1);
    return static_cast<float>(std::min(1.0, std::max(0.0, v)));
}

template <typename InverseMap>
data::image resample(const data::image& img, InverseMap&& source_of) {
    data::image out;
    for (int r = 0; r < data::image_rows; ++r) {
        for (int c = 0; c < data::image_cols; ++c) {
            const auto [sr, sc] = source_of(r, c);
            out.at(r, c) = bilinear_sample(img, sr, sc);
        }
    }
    return out;
}

} // namespace

data::image rotate(const data::image& img, double alpha_degrees) {
    if (!std::isfinite(alpha_degrees))
        throw data_error("rotation angle must be finite");
    const double a = alpha_degrees * M_PI / 180.0;
    const double cos_a = std::cos(a);
    const double sin_a = std::sin(a);
    // inverse map: rotate the output offset by -alpha to find the source
    return resample(img, [&](int r, int c) {
        const double dr = r - center_r;
        const double dc = c - center_c;
        const double sr = center_r + cos_a * dr + sin_a * dc;
        const double sc = center_c - sin_a * dr + cos_a * dc;
        return std::pair{sr, sc};
    });
}

data::image translate(const data::image& img, double tx, double ty) {
    return resample(img, [&](int r, int c) {
        return std::pair{r - ty, c - tx};
    });
}

data::image scale(const data::image& img, double sx, double sy) {
    if (!(sx > 0) || !(sy > 0))
        throw data_error("scale factors must be positive");
    return resample(img, [&](int r, int c) {
        const double sr = center_r + (r - center_r) / sy;
        const double sc = center_c + (c - center_c) / sx;
        return std::pair{sr, sc};
    });
}

std::optional<rotation_outcome> rotate_until_misclassified(
    const net::network_model& model, const data::image& img, int label,
    double step_degrees, double max_angle_degrees) {
    if (!(step_degrees > 0)) throw data_error("rotation step must be positive");

    const auto base = net::forward(model, {img.px.data(), img.px.size()});
    if (base.best_class != label) return std::nullopt; // already wrong: skipped

    int steps = 0;
    for (int k = 1; k * step_degrees <= max_angle_degrees + 1e-9; ++k) {
        for (const double sign : {+1.0, -1.0}) {
            const double angle = sign * k * step_degrees;
            data::image candidate = rotate(img, angle);
            // quantize to byte precision before deciding: rotation sets are
            // persisted as IDX byte images, and checking the exact pixels
            // that get persisted keeps later re-verification exact
            for (auto& v : candidate.px)
                v = static_cast<float>(std::lround(v * 255.0f)) / 255.0f;
            ++steps;
            const auto pred =
                net::forward(model, {candidate.px.data(), candidate.px.size()});
            if (pred.best_class != label) {
                rotation_outcome out;
                out.img = std::move(candidate);
                out.applied_angle = angle;
                out.original_label = label;
                out.predicted_class = pred.best_class;
                out.steps_taken = steps;
                return out;
            }
        }
    }
    return std::nullopt;
}

rotation_set build_rotation_set(const net::network_model& model,
                                const data::labeled_dataset& train,
                                double step_degrees, double max_angle_degrees,
                                int threads) {
    std::vector<std::optional<rotation_outcome>> found(train.size());
    util::parallel_for(train.size(), threads, [&](std::size_t i) {
        found[i] = rotate_until_misclassified(model, train.images[i],
                                              train.labels[i], step_degrees,
                                              max_angle_degrees);
    });

    rotation_set rs;
    rs.set.category = data::category::rotation;
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (!found[i]) continue;
        auto& out = *found[i];
        rs.set.images.push_back(out.img);
        rs.set.labels.push_back(out.original_label);
        rs.set.ids.push_back(train.ids[i]);
        rs.outcomes.push_back(std::move(out));
    }
    return rs;
}

} // namespace actprof::xform
