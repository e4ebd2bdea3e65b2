#include "actprof/network.hpp"

#include "actprof/encoding.hpp"
#include "actprof/errors.hpp"
#include "actprof/parallel.hpp"
#include "actprof/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace actprof::net {

namespace {

void check_architecture(std::span<const layer_spec> layers) {
    if (layers.empty()) throw data_error("architecture must have at least one layer");
    for (std::size_t j = 0; j < layers.size(); ++j) {
        if (layers[j].input_size <= 0 || layers[j].output_size <= 0)
            throw data_error("layer sizes must be positive");
        if (j > 0 && layers[j].input_size != layers[j - 1].output_size)
            throw data_error("layer " + std::to_string(j) +
                             " input does not chain with previous output");
        const bool last = j + 1 == layers.size();
        if (!last && layers[j].act != activation::relu)
            throw data_error("hidden layers must use relu");
        if (last && layers[j].act != activation::softmax)
            throw data_error("final layer must use softmax");
    }
}

void softmax_inplace(std::span<float> z) {
    float zmax = z[0];
    for (const float v : z) zmax = std::max(zmax, v);
    double sum = 0.0;
    for (float& v : z) {
        v = std::exp(v - zmax);
        sum += v;
    }
    const float inv = static_cast<float>(1.0 / sum);
    for (float& v : z) v *= inv;
}

struct workspace {
    std::vector<std::vector<float>> acts;
    std::vector<std::vector<float>> deltas;
    std::vector<std::vector<float>> grad_w;
    std::vector<std::vector<float>> grad_b;

    explicit workspace(const network_model& m) {
        const auto n = static_cast<std::size_t>(m.num_layers());
        acts.resize(n);
        deltas.resize(n);
        grad_w.resize(n);
        grad_b.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            const auto& spec = m.layers[j];
            acts[j].resize(static_cast<std::size_t>(spec.output_size));
            deltas[j].resize(static_cast<std::size_t>(spec.output_size));
            grad_w[j].resize(static_cast<std::size_t>(spec.output_size) * spec.input_size);
            grad_b[j].resize(static_cast<std::size_t>(spec.output_size));
        }
    }

    void zero_gradients() {
        for (auto& g : grad_w) std::fill(g.begin(), g.end(), 0.0f);
        for (auto& g : grad_b) std::fill(g.begin(), g.end(), 0.0f);
    }
};

void layer_forward(const network_model& m, int j, std::span<const float> in,
                   std::span<float> out) {
    const auto& spec = m.layers[static_cast<std::size_t>(j)];
    const float* w = m.weights[static_cast<std::size_t>(j)].data();
    const float* b = m.biases[static_cast<std::size_t>(j)].data();
    const int n_in = spec.input_size;
    for (int o = 0; o < spec.output_size; ++o) {
        const float* row = w + static_cast<std::size_t>(o) * n_in;
        float acc = b[o];
        for (int i = 0; i < n_in; ++i) acc += row[i] * in[static_cast<std::size_t>(i)];
        out[static_cast<std::size_t>(o)] = acc;
    }
    if (spec.act == activation::relu) {
        for (int o = 0; o < spec.output_size; ++o) {
            float& v = out[static_cast<std::size_t>(o)];
            if (v < 0) v = 0;
        }
    } else {
        softmax_inplace(out.subspan(0, static_cast<std::size_t>(spec.output_size)));
    }
}

struct item_result {
    double loss = 0.0;
    bool correct = false;
};

/// Forward + backward for one labeled image, accumulating batch gradients
/// into the workspace.
item_result backprop_item(const network_model& m, const data::image& img, int label,
                          workspace& ws) {
    const int n_layers = m.num_layers();

    std::span<const float> in(img.px.data(), img.px.size());
    for (int j = 0; j < n_layers; ++j) {
        layer_forward(m, j, in, ws.acts[static_cast<std::size_t>(j)]);
        in = ws.acts[static_cast<std::size_t>(j)];
    }
    const auto& probs = ws.acts[static_cast<std::size_t>(n_layers - 1)];
    const float p_label = probs[static_cast<std::size_t>(label)];
    const int pred =
        static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());

    // output delta: softmax cross-entropy
    auto& dout = ws.deltas[static_cast<std::size_t>(n_layers - 1)];
    for (std::size_t o = 0; o < probs.size(); ++o)
        dout[o] = probs[o] - (static_cast<int>(o) == label ? 1.0f : 0.0f);

    // backward through hidden layers
    for (int j = n_layers - 1; j > 0; --j) {
        const auto& spec = m.layers[static_cast<std::size_t>(j)];
        const float* w = m.weights[static_cast<std::size_t>(j)].data();
        auto& dprev = ws.deltas[static_cast<std::size_t>(j - 1)];
        std::fill(dprev.begin(), dprev.end(), 0.0f);
        const auto& dcur = ws.deltas[static_cast<std::size_t>(j)];
        for (int o = 0; o < spec.output_size; ++o) {
            const float d = dcur[static_cast<std::size_t>(o)];
            if (d == 0.0f) continue;
            const float* row = w + static_cast<std::size_t>(o) * spec.input_size;
            for (int i = 0; i < spec.input_size; ++i)
                dprev[static_cast<std::size_t>(i)] += d * row[i];
        }
        // relu gate of layer j-1
        const auto& a = ws.acts[static_cast<std::size_t>(j - 1)];
        for (std::size_t i = 0; i < dprev.size(); ++i)
            if (a[i] <= 0.0f) dprev[i] = 0.0f;
    }

    // gradient accumulation
    std::span<const float> layer_in(img.px.data(), img.px.size());
    for (int j = 0; j < n_layers; ++j) {
        const auto& spec = m.layers[static_cast<std::size_t>(j)];
        auto& gw = ws.grad_w[static_cast<std::size_t>(j)];
        auto& gb = ws.grad_b[static_cast<std::size_t>(j)];
        const auto& dcur = ws.deltas[static_cast<std::size_t>(j)];
        for (int o = 0; o < spec.output_size; ++o) {
            const float d = dcur[static_cast<std::size_t>(o)];
            gb[static_cast<std::size_t>(o)] += d;
            if (d == 0.0f) continue;
            float* grow = gw.data() + static_cast<std::size_t>(o) * spec.input_size;
            for (int i = 0; i < spec.input_size; ++i)
                grow[i] += d * layer_in[static_cast<std::size_t>(i)];
        }
        layer_in = ws.acts[static_cast<std::size_t>(j)];
    }

    return {-std::log(std::max(static_cast<double>(p_label), 1e-300)), pred == label};
}

} // namespace

std::vector<layer_spec> parse_architecture(std::string_view text) {
    std::vector<layer_spec> layers;
    std::stringstream ss{std::string(text)};
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        layer_spec spec;
        std::stringstream ls(item);
        std::string tok;
        if (!std::getline(ls, tok, ':')) throw usage_error("bad architecture: " + item);
        spec.input_size = std::stoi(tok);
        if (!std::getline(ls, tok, ':')) throw usage_error("bad architecture: " + item);
        spec.output_size = std::stoi(tok);
        if (!std::getline(ls, tok, ':')) throw usage_error("bad architecture: " + item);
        if (tok == "relu")
            spec.act = activation::relu;
        else if (tok == "softmax")
            spec.act = activation::softmax;
        else
            throw usage_error("unknown activation: " + tok);
        layers.push_back(spec);
    }
    check_architecture(layers);
    return layers;
}

std::string architecture_to_string(std::span<const layer_spec> layers) {
    std::string s;
    for (std::size_t j = 0; j < layers.size(); ++j) {
        if (j) s += ',';
        s += std::to_string(layers[j].input_size) + ':' +
             std::to_string(layers[j].output_size) + ':' +
             (layers[j].act == activation::relu ? "relu" : "softmax");
    }
    return s;
}

network_model init_model(std::span<const layer_spec> architecture, std::uint64_t seed) {
    check_architecture(architecture);
    network_model m;
    m.layers.assign(architecture.begin(), architecture.end());
    m.init_seed = seed;
    util::rng gen(seed);
    for (const auto& spec : m.layers) {
        const double limit = 1.0 / std::sqrt(static_cast<double>(spec.input_size));
        std::vector<float> w(static_cast<std::size_t>(spec.output_size) * spec.input_size);
        for (float& v : w) v = static_cast<float>(gen.uniform(-limit, limit));
        m.weights.push_back(std::move(w));
        m.biases.emplace_back(static_cast<std::size_t>(spec.output_size), 0.0f);
    }
    return m;
}

prediction_result forward(const network_model& model, std::span<const float> input,
                          activation_trace* trace) {
    if (model.layers.empty()) throw data_error("forward on empty model");
    if (static_cast<int>(input.size()) != model.input_size())
        throw data_error("input size " + std::to_string(input.size()) +
                         " does not match first layer input " +
                         std::to_string(model.input_size()));

    std::vector<float> cur(input.begin(), input.end());
    std::vector<float> next;
    if (trace) trace->layers.clear();
    for (int j = 0; j < model.num_layers(); ++j) {
        next.assign(static_cast<std::size_t>(model.layers[static_cast<std::size_t>(j)].output_size), 0.0f);
        layer_forward(model, j, cur, next);
        if (trace) trace->layers.push_back(next);
        cur.swap(next);
    }

    prediction_result res;
    res.probabilities = std::move(cur);
    res.best_class = static_cast<int>(
        std::max_element(res.probabilities.begin(), res.probabilities.end()) -
        res.probabilities.begin());
    return res;
}

std::vector<epoch_stats> train(network_model& model, const data::labeled_dataset& train_set,
                               const training_config& config) {
    if (train_set.size() == 0) throw data_error("training set is empty");
    if (config.batch_size <= 0) throw data_error("batch size must be positive");
    if (!(config.learning_rate > 0)) throw data_error("learning rate must be positive");
    const int n_classes = model.output_size();
    for (const int l : train_set.labels)
        if (l == data::no_label || l >= n_classes)
            throw data_error("training requires ground-truth labels below " +
                             std::to_string(n_classes));

    const int n_layers = model.num_layers();
    const std::size_t n = train_set.size();
    workspace ws(model);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::vector<epoch_stats> log;
    log.reserve(static_cast<std::size_t>(std::max(config.epochs, 0)));

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        util::rng shuffler(util::child_seed(config.master_seed,
                                            "epoch-" + std::to_string(epoch)));
        shuffler.shuffle(order);

        double loss_sum = 0.0;
        std::size_t correct = 0;

        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t stop = std::min(n, start + static_cast<std::size_t>(config.batch_size));
            const auto batch = static_cast<float>(stop - start);
            ws.zero_gradients();
            for (std::size_t idx = start; idx < stop; ++idx) {
                const auto res = backprop_item(model, train_set.images[order[idx]],
                                               train_set.labels[order[idx]], ws);
                loss_sum += res.loss;
                if (res.correct) ++correct;
            }
            const float step = config.learning_rate / batch;
            for (int j = 0; j < n_layers; ++j) {
                auto& w = model.weights[static_cast<std::size_t>(j)];
                auto& b = model.biases[static_cast<std::size_t>(j)];
                const auto& gw = ws.grad_w[static_cast<std::size_t>(j)];
                const auto& gb = ws.grad_b[static_cast<std::size_t>(j)];
                for (std::size_t i = 0; i < w.size(); ++i) w[i] -= step * gw[i];
                for (std::size_t i = 0; i < b.size(); ++i) b[i] -= step * gb[i];
            }
        }

        const double mean_loss = loss_sum / static_cast<double>(n);
        if (!std::isfinite(mean_loss))
            throw numeric_error("training diverged at epoch " + std::to_string(epoch));
        log.push_back({epoch, mean_loss, static_cast<double>(correct) / static_cast<double>(n)});
    }
    return log;
}

gradients compute_gradients(const network_model& model,
                            std::span<const data::image> images,
                            std::span<const int> labels) {
    if (images.empty() || images.size() != labels.size())
        throw data_error("compute_gradients needs matching nonempty images/labels");
    workspace ws(model);
    ws.zero_gradients();
    double loss_sum = 0.0;
    for (std::size_t i = 0; i < images.size(); ++i)
        loss_sum += backprop_item(model, images[i], labels[i], ws).loss;

    gradients g;
    g.mean_loss = loss_sum / static_cast<double>(images.size());
    const auto inv = 1.0f / static_cast<float>(images.size());
    g.weights = std::move(ws.grad_w);
    g.biases = std::move(ws.grad_b);
    for (auto& layer : g.weights)
        for (auto& v : layer) v *= inv;
    for (auto& layer : g.biases)
        for (auto& v : layer) v *= inv;
    return g;
}

evaluation evaluate(const network_model& model, const data::labeled_dataset& ds,
                    int threads) {
    if (ds.size() == 0) throw data_error("evaluate on empty dataset");
    const int n_classes = model.output_size();
    evaluation ev;
    ev.per_class_correct.assign(static_cast<std::size_t>(n_classes), 0);
    ev.per_class_total.assign(static_cast<std::size_t>(n_classes), 0);
    ev.predicted.assign(ds.size(), -1);

    util::parallel_for(ds.size(), threads, [&](std::size_t i) {
        const auto res = forward(model, {ds.images[i].px.data(), ds.images[i].px.size()});
        ev.predicted[i] = res.best_class;
    });

    std::int64_t correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const int label = ds.labels[i];
        if (label == data::no_label || label >= n_classes)
            throw data_error("evaluate requires ground-truth labels");
        ++ev.per_class_total[static_cast<std::size_t>(label)];
        if (ev.predicted[i] == label) {
            ++ev.per_class_correct[static_cast<std::size_t>(label)];
            ++correct;
        }
    }
    ev.accuracy = static_cast<double>(correct) / static_cast<double>(ds.size());
    return ev;
}

namespace {
constexpr int model_format_version = 1;
}

void save_model(const network_model& model, const std::filesystem::path& path,
                std::span<const std::string> header_lines) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write model file: " + path.string());
    for (const auto& line : header_lines) out << "# " << line << "\n";
    out << "actprof-model-v" << model_format_version << "\n";
    out << "seed=" << model.init_seed << "\n";
    out << "architecture=" << architecture_to_string(model.layers) << "\n";
    for (int j = 0; j < model.num_layers(); ++j) {
        out << "weights." << j << "="
            << util::base64_encode(util::floats_to_le_bytes(model.weights[static_cast<std::size_t>(j)]))
            << "\n";
        out << "biases." << j << "="
            << util::base64_encode(util::floats_to_le_bytes(model.biases[static_cast<std::size_t>(j)]))
            << "\n";
    }
    out << "end\n";
    if (!out) throw data_error("write failed: " + path.string());
}

network_model load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open model file: " + path.string());
    std::string line;
    // skip comment headers
    do {
        if (!std::getline(in, line)) throw data_error("model file is empty: " + path.string());
    } while (!line.empty() && line[0] == '#');

    const std::string prefix = "actprof-model-v";
    if (line.rfind(prefix, 0) != 0)
        throw data_error("not a model file: " + path.string());
    const int version = std::stoi(line.substr(prefix.size()));
    if (version > model_format_version)
        throw data_error("model format version " + std::to_string(version) +
                         " is newer than supported version " +
                         std::to_string(model_format_version));

    network_model m;
    bool saw_end = false;
    std::vector<std::string> w_payloads, b_payloads;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (line == "end") {
            saw_end = true;
            break;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw data_error("malformed model line: " + line);
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key == "seed") {
            m.init_seed = std::stoull(value);
        } else if (key == "architecture") {
            m.layers = parse_architecture(value);
        } else if (key.rfind("weights.", 0) == 0) {
            w_payloads.push_back(value);
        } else if (key.rfind("biases.", 0) == 0) {
            b_payloads.push_back(value);
        } else {
            throw data_error("unknown model key: " + key);
        }
    }
    if (!saw_end) throw data_error("model file truncated: " + path.string());
    if (m.layers.empty()) throw data_error("model file has no architecture");
    if (w_payloads.size() != m.layers.size() || b_payloads.size() != m.layers.size())
        throw data_error("model file layer payload count mismatch");

    for (std::size_t j = 0; j < m.layers.size(); ++j) {
        auto w = util::le_bytes_to_floats(util::base64_decode(w_payloads[j]));
        auto b = util::le_bytes_to_floats(util::base64_decode(b_payloads[j]));
        const auto expect_w = static_cast<std::size_t>(m.layers[j].output_size) *
                              static_cast<std::size_t>(m.layers[j].input_size);
        if (w.size() != expect_w || b.size() != static_cast<std::size_t>(m.layers[j].output_size))
            throw data_error("model payload size mismatch at layer " + std::to_string(j));
        for (const float v : w)
            if (!std::isfinite(v)) throw data_error("non-finite weight in model file");
        m.weights.push_back(std::move(w));
        m.biases.push_back(std::move(b));
    }
    return m;
}

} // namespace actprof::net
