#include "actprof/dataset.hpp"

#include "actprof/errors.hpp"
#include "actprof/rng.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>

namespace actprof::data {

namespace {

constexpr std::uint32_t idx3_magic = 0x00000803; // unsigned byte, 3 dimensions
constexpr std::uint32_t idx1_magic = 0x00000801; // unsigned byte, 1 dimension

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open file: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

std::vector<std::uint8_t> gunzip(std::span<const std::uint8_t> compressed,
                                 const std::string& origin) {
    z_stream strm{};
    if (inflateInit2(&strm, 16 + MAX_WBITS) != Z_OK)
        throw data_error("zlib init failed for: " + origin);
    std::vector<std::uint8_t> out;
    out.reserve(compressed.size() * 4);
    std::uint8_t buf[65536];
    strm.next_in = const_cast<Bytef*>(compressed.data());
    strm.avail_in = static_cast<uInt>(compressed.size());
    int rc = Z_OK;
    do {
        strm.next_out = buf;
        strm.avail_out = sizeof(buf);
        rc = inflate(&strm, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&strm);
            throw data_error("gzip payload is corrupt: " + origin);
        }
        out.insert(out.end(), buf, buf + (sizeof(buf) - strm.avail_out));
    } while (rc != Z_STREAM_END);
    inflateEnd(&strm);
    return out;
}

bool is_gzip(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b;
}

std::vector<std::uint8_t> read_maybe_gzip(const std::filesystem::path& path) {
    auto bytes = read_file(path);
    if (is_gzip(bytes)) return gunzip(bytes, path.string());
    return bytes;
}

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t off) {
    return (static_cast<std::uint32_t>(bytes[off]) << 24) |
           (static_cast<std::uint32_t>(bytes[off + 1]) << 16) |
           (static_cast<std::uint32_t>(bytes[off + 2]) << 8) |
           static_cast<std::uint32_t>(bytes[off + 3]);
}

void write_be32(std::ofstream& out, std::uint32_t v) {
    const std::uint8_t b[4] = {static_cast<std::uint8_t>(v >> 24),
                               static_cast<std::uint8_t>(v >> 16),
                               static_cast<std::uint8_t>(v >> 8),
                               static_cast<std::uint8_t>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

} // namespace

const char* category_name(category c) {
    switch (c) {
        case category::train: return "train";
        case category::test: return "test";
        case category::random: return "random";
        case category::rotation: return "rotation";
    }
    return "unknown";
}

category category_from_name(std::string_view name) {
    if (name == "train") return category::train;
    if (name == "test") return category::test;
    if (name == "random") return category::random;
    if (name == "rotation") return category::rotation;
    throw data_error("unknown dataset category: " + std::string(name));
}

raw_images load_idx_images(const std::filesystem::path& path) {
    const auto bytes = read_maybe_gzip(path);
    if (bytes.size() < 16)
        throw data_error("IDX3 header truncated: " + path.string());
    const std::uint32_t magic = read_be32(bytes, 0);
    if (magic != idx3_magic)
        throw data_error("bad IDX3 magic in " + path.string() +
                         " (expected 0x00000803)");
    raw_images out;
    const std::uint32_t count = read_be32(bytes, 4);
    out.rows = read_be32(bytes, 8);
    out.cols = read_be32(bytes, 12);
    const std::size_t expect =
        static_cast<std::size_t>(count) * out.rows * out.cols;
    if (bytes.size() - 16 < expect)
        throw data_error("IDX3 payload truncated: " + path.string());
    out.pixels.assign(bytes.begin() + 16, bytes.begin() + 16 + expect);
    return out;
}

std::vector<std::uint8_t> load_idx_labels(const std::filesystem::path& path) {
    const auto bytes = read_maybe_gzip(path);
    if (bytes.size() < 8)
        throw data_error("IDX1 header truncated: " + path.string());
    const std::uint32_t magic = read_be32(bytes, 0);
    if (magic != idx1_magic)
        throw data_error("bad IDX1 magic in " + path.string() +
                         " (expected 0x00000801)");
    const std::uint32_t count = read_be32(bytes, 4);
    if (bytes.size() - 8 < count)
        throw data_error("IDX1 payload truncated: " + path.string());
    std::vector<std::uint8_t> labels(bytes.begin() + 8, bytes.begin() + 8 + count);
    for (const auto l : labels)
        if (l > 9)
            throw data_error("label out of range 0..9 in " + path.string());
    return labels;
}

void save_idx_images(const std::filesystem::path& path, const raw_images& imgs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write file: " + path.string());
    write_be32(out, idx3_magic);
    write_be32(out, static_cast<std::uint32_t>(imgs.count()));
    write_be32(out, imgs.rows);
    write_be32(out, imgs.cols);
    out.write(reinterpret_cast<const char*>(imgs.pixels.data()),
              static_cast<std::streamsize>(imgs.pixels.size()));
    if (!out) throw data_error("write failed: " + path.string());
}

void save_idx_labels(const std::filesystem::path& path,
                     std::span<const std::uint8_t> labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write file: " + path.string());
    write_be32(out, idx1_magic);
    write_be32(out, static_cast<std::uint32_t>(labels.size()));
    out.write(reinterpret_cast<const char*>(labels.data()),
              static_cast<std::streamsize>(labels.size()));
    if (!out) throw data_error("write failed: " + path.string());
}

image normalize(std::span<const std::uint8_t> raw_bytes) {
    if (raw_bytes.size() != image_pixels)
        throw data_error("normalize expects exactly 784 bytes, got " +
                         std::to_string(raw_bytes.size()));
    image img;
    for (int i = 0; i < image_pixels; ++i)
        img.px[static_cast<std::size_t>(i)] =
            static_cast<float>(raw_bytes[static_cast<std::size_t>(i)]) / 255.0f;
    return img;
}

std::vector<std::uint8_t> denormalize(const image& img) {
    std::vector<std::uint8_t> bytes(image_pixels);
    for (int i = 0; i < image_pixels; ++i) {
        const float v = img.px[static_cast<std::size_t>(i)];
        bytes[static_cast<std::size_t>(i)] =
            static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
    return bytes;
}

labeled_dataset load_dataset(const std::filesystem::path& images_path,
                             const std::filesystem::path& labels_path,
                             category cat) {
    const raw_images raw = load_idx_images(images_path);
    if (raw.rows != image_rows || raw.cols != image_cols)
        throw data_error("unexpected image dimensions in " + images_path.string());
    const auto labels = load_idx_labels(labels_path);
    if (labels.size() != raw.count())
        throw data_error("image/label count mismatch: " + images_path.string());

    labeled_dataset ds;
    ds.category = cat;
    ds.images.reserve(raw.count());
    ds.labels.reserve(raw.count());
    ds.ids.reserve(raw.count());
    for (std::size_t i = 0; i < raw.count(); ++i) {
        ds.images.push_back(normalize(raw.bytes_of(i)));
        ds.labels.push_back(labels[i]);
        ds.ids.push_back(static_cast<std::int64_t>(i));
    }
    return ds;
}

labeled_dataset generate_random_images(std::size_t count, std::uint64_t seed) {
    labeled_dataset ds;
    ds.category = category::random;
    ds.images.resize(count);
    ds.labels.assign(count, no_label);
    ds.ids.resize(count);
    util::rng gen(seed);
    for (std::size_t n = 0; n < count; ++n) {
        ds.ids[n] = static_cast<std::int64_t>(n);
        auto& px = ds.images[n].px;
        for (int i = 0; i < image_pixels; ++i)
            px[static_cast<std::size_t>(i)] =
                static_cast<float>(gen.next_byte()) / 255.0f;
    }
    return ds;
}

void save_dataset(const std::filesystem::path& images_path,
                  const std::filesystem::path& labels_path,
                  const labeled_dataset& ds, const dataset_meta& meta) {
    raw_images raw;
    raw.rows = image_rows;
    raw.cols = image_cols;
    raw.pixels.reserve(ds.size() * image_pixels);
    for (const auto& img : ds.images) {
        const auto bytes = denormalize(img);
        raw.pixels.insert(raw.pixels.end(), bytes.begin(), bytes.end());
    }
    save_idx_images(images_path, raw);

    if (!labels_path.empty()) {
        std::vector<std::uint8_t> labels;
        labels.reserve(ds.size());
        for (const int l : ds.labels) {
            if (l == no_label)
                throw data_error("cannot persist unlabeled images to an IDX1 "
                                 "label file; omit the labels path instead");
            labels.push_back(static_cast<std::uint8_t>(l));
        }
        save_idx_labels(labels_path, labels);
    }

    std::ofstream side(images_path.string() + ".meta");
    if (!side) throw data_error("cannot write sidecar: " + images_path.string() + ".meta");
    for (const auto& line : meta.header_lines) side << "# " << line << "\n";
    side << "category=" << meta.category << "\n";
    if (meta.has_seed) side << "seed=" << meta.seed << "\n";
    side << "count=" << meta.count << "\n";
}

} // namespace actprof::data
