#pragma once

// Small fully-connected classifier: deterministic init, mini-batch SGD on
// softmax cross-entropy, and forward passes that expose the post-activation
// values of every layer.

#include "actprof/dataset.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace actprof::net {

enum class activation { relu, softmax };

struct layer_spec {
    int input_size = 0;
    int output_size = 0;
    activation act = activation::relu;
};

/// Parse "784:256:relu,256:64:relu,64:10:softmax".
std::vector<layer_spec> parse_architecture(std::string_view text);
std::string architecture_to_string(std::span<const layer_spec> layers);

struct network_model {
    std::vector<layer_spec> layers;
    std::vector<std::vector<float>> weights; // per layer, row-major [out][in]
    std::vector<std::vector<float>> biases;  // per layer, [out]
    std::uint64_t init_seed = 0;

    int num_layers() const { return static_cast<int>(layers.size()); }
    int input_size() const { return layers.empty() ? 0 : layers.front().input_size; }
    int output_size() const { return layers.empty() ? 0 : layers.back().output_size; }
    float& weight_at(int layer, int out, int in) {
        return weights[static_cast<std::size_t>(layer)]
                      [static_cast<std::size_t>(out) * layers[static_cast<std::size_t>(layer)].input_size + in];
    }
};

struct training_config {
    int epochs = 10;
    int batch_size = 64;
    float learning_rate = 0.05f;
    std::uint64_t master_seed = 0;
};

/// Post-activation values of every layer for one input; the final entry is
/// the softmax output. RELU entries are nonnegative by construction.
struct activation_trace {
    std::vector<std::vector<float>> layers;
};

struct prediction_result {
    int best_class = 0;
    std::vector<float> probabilities;
};

struct epoch_stats {
    int epoch = 0;
    double mean_loss = 0.0;
    double accuracy = 0.0;
};

struct evaluation {
    double accuracy = 0.0;
    std::vector<std::int64_t> per_class_correct;
    std::vector<std::int64_t> per_class_total;
    std::vector<int> predicted; // best class per image
};

/// Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero,
/// fully determined by the seed.
network_model init_model(std::span<const layer_spec> architecture, std::uint64_t seed);

/// Run one input through the model. When `trace` is non-null it receives the
/// post-activation vector of every layer.
prediction_result forward(const network_model& model, std::span<const float> input,
                          activation_trace* trace = nullptr);

/// Mini-batch SGD on softmax cross-entropy; epoch shuffles use child seeds of
/// config.master_seed, so equal (model, data, config) reproduce bit-identical
/// weights. Returns one stats row per epoch.
std::vector<epoch_stats> train(network_model& model, const data::labeled_dataset& train_set,
                               const training_config& config);

struct gradients {
    double mean_loss = 0.0;
    std::vector<std::vector<float>> weights; // same shapes as the model
    std::vector<std::vector<float>> biases;
};

/// Mean cross-entropy loss over a batch and its analytic gradients
/// (batch-averaged). One SGD step is exactly w -= lr * gradients.
gradients compute_gradients(const network_model& model,
                            std::span<const data::image> images,
                            std::span<const int> labels);

evaluation evaluate(const network_model& model, const data::labeled_dataset& ds,
                    int threads = 1);

// Text checkpoint with versioned header and base64 little-endian float32
// payloads; save -> load round-trips exactly. Layout in docs/file-formats.md.
void save_model(const network_model& model, const std::filesystem::path& path,
                std::span<const std::string> header_lines = {});
network_model load_model(const std::filesystem::path& path);

} // namespace actprof::net
