#pragma once

// Image ingestion and derived-set generation: IDX file parsing (raw or
// gzip-compressed), pixel normalization, and the seeded random-pixel set
// used as error control-data.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace actprof::data {

inline constexpr int image_rows = 28;
inline constexpr int image_cols = 28;
inline constexpr int image_pixels = image_rows * image_cols;

/// Label carried by images without a ground-truth class (random pixels).
/// Any prediction on such an image counts as an error downstream.
inline constexpr int no_label = -1;

enum class category { train, test, random, rotation };

const char* category_name(category c);
category category_from_name(std::string_view name);

/// One 28x28 grayscale image, row-major, every pixel in [0, 1].
struct image {
    std::array<float, image_pixels> px{};

    float& at(int r, int c) { return px[static_cast<std::size_t>(r) * image_cols + c]; }
    float at(int r, int c) const { return px[static_cast<std::size_t>(r) * image_cols + c]; }
};

struct labeled_dataset {
    std::vector<image> images;
    std::vector<int> labels;          // no_label when ground truth is absent
    std::vector<std::int64_t> ids;    // stable per-image identifiers
    data::category category = data::category::train;

    std::size_t size() const { return images.size(); }
};

/// Raw images as stored in an IDX3 file, before normalization.
struct raw_images {
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::vector<std::uint8_t> pixels; // count * rows * cols bytes

    std::size_t count() const {
        const std::size_t per = static_cast<std::size_t>(rows) * cols;
        return per == 0 ? 0 : pixels.size() / per;
    }
    std::span<const std::uint8_t> bytes_of(std::size_t i) const {
        const std::size_t per = static_cast<std::size_t>(rows) * cols;
        return {pixels.data() + i * per, per};
    }
};

// IDX readers accept both raw and gzip'd files (sniffed via the 1f 8b magic).
raw_images load_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> load_idx_labels(const std::filesystem::path& path);

// Writers emit raw (uncompressed) IDX.
void save_idx_images(const std::filesystem::path& path, const raw_images& imgs);
void save_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels);

/// byte/255 for each of exactly image_pixels bytes.
image normalize(std::span<const std::uint8_t> raw_bytes);

/// Inverse of normalize for persistence: round(px * 255).
std::vector<std::uint8_t> denormalize(const image& img);

/// Load a full labeled dataset from an images/labels file pair.
labeled_dataset load_dataset(const std::filesystem::path& images_path,
                             const std::filesystem::path& labels_path,
                             category cat);

/// `count` images whose pixels are drawn uniformly over the raw range 0..255
/// and then normalized. A single xoshiro256** stream seeded with `seed` is
/// consumed in row-major order across all images, with no reseeding between
/// rows or images. Labels are the no_label sentinel.
labeled_dataset generate_random_images(std::size_t count, std::uint64_t seed);

/// Persist a dataset as IDX image/label files plus a sidecar metadata text
/// file (<images path>.meta). Unlabeled datasets skip the label file.
struct dataset_meta {
    std::string category;
    std::uint64_t seed = 0;
    bool has_seed = false;
    std::size_t count = 0;
    std::vector<std::string> header_lines; // prepended as '# ' comments
};
void save_dataset(const std::filesystem::path& images_path,
                  const std::filesystem::path& labels_path, // empty() to skip
                  const labeled_dataset& ds, const dataset_meta& meta);

} // namespace actprof::data
