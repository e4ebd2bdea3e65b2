#include "actprof/profiles.hpp"

#include "actprof/encoding.hpp"
#include "actprof/errors.hpp"
#include "actprof/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace actprof::prof {

neuron_stats_result neuron_stats(std::span<const float> values, bool scaled_std) {
    if (values.empty()) throw data_error("neuron_stats needs at least one sample");
    const auto n = static_cast<double>(values.size());
    double sum = 0.0;
    for (const float v : values) sum += v;
    const double avg = sum / n;
    double sq = 0.0;
    for (const float v : values) {
        const double d = v - avg;
        sq += d * d;
    }
    const double std_dev = scaled_std ? std::sqrt(sq) / n : std::sqrt(sq / n);
    return {avg, std_dev};
}

double bin_width(double std_dev, double c) {
    if (std_dev < 0) throw data_error("standard deviation cannot be negative");
    if (!(c > 0)) throw data_error("width constant c must be positive");
    return c * std_dev;
}

std::int64_t bin_id(double act_level, double width) {
    if (!(width > 0)) throw data_error("bin_id needs a positive width");
    return static_cast<std::int64_t>(std::floor(act_level / width));
}

profile_model_set fit_profiles(const net::network_model& model,
                               const data::labeled_dataset& train,
                               int layer_index, const fit_options& options,
                               int threads) {
    if (layer_index < 0) layer_index = penultimate_layer(model);
    if (layer_index < 0 || layer_index >= model.num_layers())
        throw data_error("profile layer index out of range");
    if (!(options.c > 0)) throw data_error("width constant c must be positive");

    const int num_classes = model.output_size();
    const auto n_neurons = static_cast<std::size_t>(
        model.layers[static_cast<std::size_t>(layer_index)].output_size);

    // One forward pass per input; keep the profiled layer of the correctly
    // predicted ones, grouped by ground-truth class.
    std::vector<int> predicted(train.size(), -1);
    std::vector<std::vector<float>> traces(train.size());
    util::parallel_for(train.size(), threads, [&](std::size_t i) {
        net::activation_trace tr;
        const auto res =
            net::forward(model, {train.images[i].px.data(), train.images[i].px.size()}, &tr);
        predicted[i] = res.best_class;
        traces[i] = std::move(tr.layers[static_cast<std::size_t>(layer_index)]);
    });

    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(num_classes));
    for (std::size_t i = 0; i < train.size(); ++i) {
        const int label = train.labels[i];
        if (label == data::no_label || label >= num_classes)
            throw data_error("fitting requires ground-truth labels below " +
                             std::to_string(num_classes));
        if (predicted[i] == label)
            members[static_cast<std::size_t>(label)].push_back(i);
    }

    profile_model_set set;
    set.layer_index = layer_index;
    set.c = options.c;
    set.total_train_count = train.size();
    set.num_classes = num_classes;
    set.scaled_std = options.scaled_std;
    set.per_class_norm = options.per_class_norm;
    // the floor must stay at or below the smallest observable bin probability
    // (a single count), or floor hits would outrank observed bins
    const double min_observable =
        options.per_class_norm
            ? 1.0 / static_cast<double>(train.size()) // class counts <= |X|
            : 1.0 / (static_cast<double>(train.size()) * num_classes);
    set.floor_probability =
        options.floor_probability > 0
            ? options.floor_probability
            : 0.5 / (static_cast<double>(train.size()) * num_classes);
    if (set.floor_probability > min_observable)
        throw data_error("floor probability " +
                         std::to_string(set.floor_probability) +
                         " exceeds the smallest observable bin probability " +
                         std::to_string(min_observable));

    for (int k = 0; k < num_classes; ++k) {
        const auto& idx = members[static_cast<std::size_t>(k)];
        if (idx.empty())
            throw data_error("class " + std::to_string(k) +
                             " has no correctly predicted training inputs; "
                             "cannot fit a profile model for it");
        class_profile_model cm;
        cm.class_id = k;
        cm.class_sample_count = idx.size();
        cm.neurons.resize(n_neurons);

        std::vector<float> column(idx.size());
        for (std::size_t i = 0; i < n_neurons; ++i) {
            for (std::size_t s = 0; s < idx.size(); ++s)
                column[s] = traces[idx[s]][i];
            auto& h = cm.neurons[i];
            const auto st = neuron_stats(column, options.scaled_std);
            h.avg = st.avg;
            h.std_dev = st.std_dev;
            h.sample_count = column.size();
            if (st.std_dev == 0.0) {
                // constant neuron: zero width makes binning undefined, so the
                // histogram degenerates to a single bin holding every sample
                // and the neuron is excluded from distance sums
                h.dead = true;
                h.width = 0.0;
                h.bins[0] = column.size();
                continue;
            }
            h.width = bin_width(st.std_dev, options.c);
            for (const float v : column) ++h.bins[bin_id(v, h.width)];
        }
        set.classes.push_back(std::move(cm));
    }
    return set;
}

double bin_probability(const profile_model_set& set, int k, int i, std::int64_t b) {
    if (k < 0 || k >= set.num_classes)
        throw data_error("unknown class " + std::to_string(k));
    const auto& cm = set.classes[static_cast<std::size_t>(k)];
    if (i < 0 || static_cast<std::size_t>(i) >= cm.neurons.size())
        throw data_error("neuron index out of range");
    const auto& h = cm.neurons[static_cast<std::size_t>(i)];
    const auto it = h.bins.find(b);
    if (it == h.bins.end() || it->second == 0) return set.floor_probability;
    const double denom = set.per_class_norm
                             ? static_cast<double>(cm.class_sample_count)
                             : static_cast<double>(set.total_train_count) * set.num_classes;
    return static_cast<double>(it->second) / denom;
}

double distance(const profile_model_set& set, const net::activation_trace& trace, int k) {
    if (k < 0 || k >= set.num_classes)
        throw data_error("distance under unknown class " + std::to_string(k));
    const auto& layer =
        trace.layers.at(static_cast<std::size_t>(set.layer_index));
    const auto& cm = set.classes[static_cast<std::size_t>(k)];
    if (layer.size() != cm.neurons.size())
        throw data_error("trace layer size does not match the profile model");

    double dist = 0.0;
    for (std::size_t i = 0; i < layer.size(); ++i) {
        const auto& h = cm.neurons[i];
        if (h.dead) continue;
        const auto b = bin_id(layer[i], h.width);
        dist += -std::log(bin_probability(set, k, static_cast<int>(i), b));
    }
    return dist;
}

std::vector<distance_record> score_dataset(const net::network_model& model,
                                           const profile_model_set& set,
                                           const data::labeled_dataset& ds,
                                           int threads) {
    std::vector<distance_record> records(ds.size());
    util::parallel_for(ds.size(), threads, [&](std::size_t i) {
        net::activation_trace tr;
        const auto res =
            net::forward(model, {ds.images[i].px.data(), ds.images[i].px.size()}, &tr);
        records[i] = {ds.ids[i], ds.category, res.best_class,
                      distance(set, tr, res.best_class)};
    });
    return records;
}

std::vector<class_summary> summarize(std::span<const distance_record> records,
                                     int num_classes) {
    std::vector<class_summary> rows(static_cast<std::size_t>(num_classes));
    std::vector<double> sums(static_cast<std::size_t>(num_classes), 0.0);
    for (int k = 0; k < num_classes; ++k) rows[static_cast<std::size_t>(k)].class_id = k;
    for (const auto& r : records) {
        if (r.predicted_class < 0 || r.predicted_class >= num_classes)
            throw data_error("record with out-of-range class");
        auto& row = rows[static_cast<std::size_t>(r.predicted_class)];
        ++row.count;
        sums[static_cast<std::size_t>(r.predicted_class)] += r.distance;
    }
    for (auto& row : rows)
        if (row.count > 0) row.avg = sums[static_cast<std::size_t>(row.class_id)] /
                                     static_cast<double>(row.count);
    for (const auto& r : records) {
        auto& row = rows[static_cast<std::size_t>(r.predicted_class)];
        const double d = r.distance - row.avg;
        row.std_dev += d * d;
    }
    for (auto& row : rows)
        row.std_dev = row.count > 0
                          ? std::sqrt(row.std_dev / static_cast<double>(row.count))
                          : 0.0;
    return rows;
}

namespace {
constexpr int profile_format_version = 1;
}

void save_profiles(const profile_model_set& set, const std::filesystem::path& path,
                   std::span<const std::string> header_lines) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write profile file: " + path.string());
    for (const auto& line : header_lines) out << "# " << line << "\n";
    out << "actprof-profiles-v" << profile_format_version << "\n";
    out << "layer_index=" << set.layer_index << "\n";
    out << "c=" << util::format_double(set.c) << "\n";
    out << "floor_probability=" << util::format_double(set.floor_probability) << "\n";
    out << "total_train_count=" << set.total_train_count << "\n";
    out << "num_classes=" << set.num_classes << "\n";
    out << "scaled_std=" << (set.scaled_std ? 1 : 0) << "\n";
    out << "per_class_norm=" << (set.per_class_norm ? 1 : 0) << "\n";
    for (const auto& cm : set.classes) {
        out << "class=" << cm.class_id << " samples=" << cm.class_sample_count
            << " neurons=" << cm.neurons.size() << "\n";
        for (std::size_t i = 0; i < cm.neurons.size(); ++i) {
            const auto& h = cm.neurons[i];
            out << "neuron=" << i << " avg=" << util::format_double(h.avg)
                << " std=" << util::format_double(h.std_dev)
                << " width=" << util::format_double(h.width)
                << " dead=" << (h.dead ? 1 : 0) << " bins=";
            bool first = true;
            for (const auto& [b, count] : h.bins) {
                if (!first) out << ';';
                out << b << ':' << count;
                first = false;
            }
            out << "\n";
        }
    }
    out << "end\n";
    if (!out) throw data_error("write failed: " + path.string());
}

profile_model_set load_profiles(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open profile file: " + path.string());
    std::string line;
    do {
        if (!std::getline(in, line))
            throw data_error("profile file is empty: " + path.string());
    } while (!line.empty() && line[0] == '#');

    const std::string prefix = "actprof-profiles-v";
    if (line.rfind(prefix, 0) != 0)
        throw data_error("not a profile file: " + path.string());
    const int version = std::stoi(line.substr(prefix.size()));
    if (version > profile_format_version)
        throw data_error("profile format version " + std::to_string(version) +
                         " is newer than supported version " +
                         std::to_string(profile_format_version));

    profile_model_set set;
    bool saw_end = false;
    class_profile_model* current = nullptr;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (line == "end") {
            saw_end = true;
            break;
        }
        std::stringstream ss(line);
        std::string token;
        ss >> token;
        const auto value_of = [](const std::string& tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) throw data_error("malformed profile line: " + tok);
            return tok.substr(eq + 1);
        };
        if (token.rfind("layer_index=", 0) == 0) {
            set.layer_index = std::stoi(value_of(token));
        } else if (token.rfind("c=", 0) == 0) {
            set.c = std::stod(value_of(token));
        } else if (token.rfind("floor_probability=", 0) == 0) {
            set.floor_probability = std::stod(value_of(token));
        } else if (token.rfind("total_train_count=", 0) == 0) {
            set.total_train_count = std::stoull(value_of(token));
        } else if (token.rfind("num_classes=", 0) == 0) {
            set.num_classes = std::stoi(value_of(token));
        } else if (token.rfind("scaled_std=", 0) == 0) {
            set.scaled_std = value_of(token) == "1";
        } else if (token.rfind("per_class_norm=", 0) == 0) {
            set.per_class_norm = value_of(token) == "1";
        } else if (token.rfind("class=", 0) == 0) {
            class_profile_model cm;
            cm.class_id = std::stoi(value_of(token));
            std::string samples_tok, neurons_tok;
            ss >> samples_tok >> neurons_tok;
            cm.class_sample_count = std::stoull(value_of(samples_tok));
            cm.neurons.resize(std::stoull(value_of(neurons_tok)));
            set.classes.push_back(std::move(cm));
            current = &set.classes.back();
        } else if (token.rfind("neuron=", 0) == 0) {
            if (!current) throw data_error("neuron line before any class line");
            const auto i = static_cast<std::size_t>(std::stoull(value_of(token)));
            if (i >= current->neurons.size())
                throw data_error("neuron index out of range in profile file");
            auto& h = current->neurons[i];
            std::string avg_tok, std_tok, width_tok, dead_tok, bins_tok;
            ss >> avg_tok >> std_tok >> width_tok >> dead_tok >> bins_tok;
            h.avg = std::stod(value_of(avg_tok));
            h.std_dev = std::stod(value_of(std_tok));
            h.width = std::stod(value_of(width_tok));
            h.dead = value_of(dead_tok) == "1";
            const std::string bins = value_of(bins_tok);
            std::uint64_t total = 0;
            std::stringstream bs(bins);
            std::string pair;
            while (std::getline(bs, pair, ';')) {
                if (pair.empty()) continue;
                const auto colon = pair.find(':');
                if (colon == std::string::npos)
                    throw data_error("malformed bin entry: " + pair);
                const auto b = static_cast<std::int64_t>(std::stoll(pair.substr(0, colon)));
                const auto count = static_cast<std::uint64_t>(std::stoull(pair.substr(colon + 1)));
                h.bins[b] = count;
                total += count;
            }
            h.sample_count = total;
        } else {
            throw data_error("unknown profile key in line: " + line);
        }
    }
    if (!saw_end) throw data_error("profile file truncated: " + path.string());
    if (set.num_classes <= 0 ||
        set.classes.size() != static_cast<std::size_t>(set.num_classes))
        throw data_error("profile file class count mismatch");
    return set;
}

} // namespace actprof::prof
