#pragma once

// Per-class nonparametric activation models: one variable-width histogram per
// neuron of the profiled layer, fitted from correctly predicted training
// inputs, plus the negative-log-likelihood distance of any input's
// activation profile under a class hypothesis.

#include "actprof/dataset.hpp"
#include "actprof/network.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace actprof::prof {

struct neuron_stats_result {
    double avg = 0.0;
    double std_dev = 0.0;
};

/// Mean and standard deviation of a sample of activation levels.
/// By default std_dev is the population standard deviation
/// sqrt(sum((x - avg)^2) / n). With scaled_std, the alternative scaling
/// sqrt(sum((x - avg)^2)) / n is used instead (the --paper-literal-std mode);
/// it shrinks histogram widths by a factor of sqrt(n).
neuron_stats_result neuron_stats(std::span<const float> values, bool scaled_std = false);

/// width = c * std. A zero std marks a dead (constant) neuron; the caller
/// must route dead neurons around binning.
double bin_width(double std_dev, double c);

/// floor(act / width); floor semantics keep every bin exactly one width wide,
/// including for negative activation values.
std::int64_t bin_id(double act_level, double width);

struct neuron_histogram {
    double avg = 0.0;
    double std_dev = 0.0;
    double width = 0.0;
    bool dead = false; // constant activation: excluded from distances
    std::map<std::int64_t, std::uint64_t> bins;
    std::uint64_t sample_count = 0;
};

struct class_profile_model {
    int class_id = 0;
    std::uint64_t class_sample_count = 0; // correctly predicted inputs used
    std::vector<neuron_histogram> neurons;
};

struct profile_model_set {
    int layer_index = 0;       // 0-based index into the activation trace
    double c = 1.0;            // histogram width constant
    double floor_probability = 0.0;
    std::uint64_t total_train_count = 0; // |X|: size of the fitting dataset
    int num_classes = 0;                 // |K|
    bool scaled_std = false;
    bool per_class_norm = false;
    std::vector<class_profile_model> classes;
};

struct fit_options {
    double c = 1.0;
    bool scaled_std = false;
    bool per_class_norm = false;
    double floor_probability = 0.0; // 0 selects the default 0.5 / (|X| * |K|)
};

/// Default profiled layer: the one before the output layer.
inline int penultimate_layer(const net::network_model& model) {
    return model.num_layers() - 2;
}

/// Fit per-class histograms from the activation traces of training inputs the
/// model predicts correctly. layer_index < 0 selects the penultimate layer.
/// A class with zero correctly predicted inputs is a fitting error.
profile_model_set fit_profiles(const net::network_model& model,
                               const data::labeled_dataset& train,
                               int layer_index = -1,
                               const fit_options& options = {},
                               int threads = 1);

/// Probability of bin b of neuron i under class k: bFreq / (|X| * |K|) for
/// observed bins, the smoothing floor otherwise. (Per-class mode divides by
/// the class sample count instead.) Deliberately not normalized to sum to 1
/// per neuron; see docs/file-formats.md.
double bin_probability(const profile_model_set& set, int k, int i, std::int64_t b);

/// dist = -sum_i log p(bin of neuron i | class k), natural log, over live
/// neurons of the profiled layer. Nonnegative by construction.
double distance(const profile_model_set& set, const net::activation_trace& trace, int k);

struct distance_record {
    std::int64_t input_id = 0;
    data::category category = data::category::train;
    int predicted_class = 0;
    double distance = 0.0;
};

/// Forward every input, take its best predicted class k, and record the
/// distance of its profile under k.
std::vector<distance_record> score_dataset(const net::network_model& model,
                                           const profile_model_set& set,
                                           const data::labeled_dataset& ds,
                                           int threads = 1);

struct class_summary {
    int class_id = 0;
    std::uint64_t count = 0;
    double avg = 0.0;     // meaningful only when count > 0
    double std_dev = 0.0; // population standard deviation
};

/// One row per class: count, average distance, standard deviation. Empty
/// classes report count 0 (writers print "-" for the blank statistics).
std::vector<class_summary> summarize(std::span<const distance_record> records,
                                     int num_classes);

// Text persistence with versioned header; save -> load round-trips exactly
// (doubles are written in shortest round-trip form).
void save_profiles(const profile_model_set& set, const std::filesystem::path& path,
                   std::span<const std::string> header_lines = {});
profile_model_set load_profiles(const std::filesystem::path& path);

} // namespace actprof::prof
