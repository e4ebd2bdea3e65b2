#pragma once

// Affine image transformations (bilinear inverse mapping, zero fill) and the
// rotate-until-misclassified search that derives the rotation image set.

#include "actprof/dataset.hpp"
#include "actprof/network.hpp"

#include <optional>
#include <vector>

namespace actprof::xform {

struct affine_params {
    double tx = 0.0;
    double ty = 0.0;
    double sx = 1.0;
    double sy = 1.0;
    double alpha = 0.0; // degrees
};

/// Rotate about the grid center (13.5, 13.5). Positive angles turn the image
/// content counterclockwise on screen (rows growing downward).
data::image rotate(const data::image& img, double alpha_degrees);

/// Shift content so a pixel at (r, c) lands at (r + ty, c + tx).
data::image translate(const data::image& img, double tx, double ty);

/// Center-anchored scaling by (sx, sy); factors must be positive.
data::image scale(const data::image& img, double sx, double sy);

struct rotation_outcome {
    data::image img;          // the rotated image that flipped the prediction
    double applied_angle = 0; // degrees
    int original_label = 0;
    int predicted_class = 0;
    int steps_taken = 0;      // rotations attempted, counting this one
};

/// Try angles +step, -step, +2*step, -2*step, ... (each applied to the
/// original image) while |angle| <= max_angle; return the first rotation the
/// model misclassifies. Images the model already misclassifies unrotated are
/// skipped (nullopt), as are images that stay correct over the whole ladder.
std::optional<rotation_outcome> rotate_until_misclassified(
    const net::network_model& model, const data::image& img, int label,
    double step_degrees, double max_angle_degrees);

struct rotation_set {
    data::labeled_dataset set;              // category rotation, original labels
    std::vector<rotation_outcome> outcomes; // aligned with set entries
};

/// Run the search over a whole training set; keeps exactly the misclassified
/// outcomes, in input order. Ids are the source image ids.
rotation_set build_rotation_set(const net::network_model& model,
                                const data::labeled_dataset& train,
                                double step_degrees, double max_angle_degrees,
                                int threads = 1);

} // namespace actprof::xform
