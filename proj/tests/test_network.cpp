#include "actprof/network.hpp"

#include "actprof/errors.hpp"
#include "actprof/rng.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>

using namespace actprof;

namespace {

data::image image_from_fn(float (*fn)(int)) {
    data::image img;
    for (int i = 0; i < data::image_pixels; ++i)
        img.px[static_cast<std::size_t>(i)] = fn(i);
    return img;
}

data::image random_image(util::rng& gen) {
    data::image img;
    for (auto& v : img.px) v = static_cast<float>(gen.next_unit());
    return img;
}

/// Two images whose active pixel halves do not overlap: linearly separable.
data::labeled_dataset two_point_toy() {
    data::labeled_dataset ds;
    ds.category = data::category::train;
    ds.images.push_back(image_from_fn([](int i) { return i < 392 ? 1.0f : 0.0f; }));
    ds.images.push_back(image_from_fn([](int i) { return i >= 392 ? 1.0f : 0.0f; }));
    ds.labels = {0, 1};
    ds.ids = {0, 1};
    return ds;
}

/// Double-precision forward pass for the finite-difference oracle. Kept
/// deliberately separate from the float production path.
double loss_double(const net::network_model& m, const data::labeled_dataset& ds) {
    double total = 0.0;
    for (std::size_t n = 0; n < ds.size(); ++n) {
        std::vector<double> cur(m.input_size());
        for (int i = 0; i < m.input_size(); ++i)
            cur[static_cast<std::size_t>(i)] = ds.images[n].px[static_cast<std::size_t>(i)];
        for (int j = 0; j < m.num_layers(); ++j) {
            const auto& spec = m.layers[static_cast<std::size_t>(j)];
            std::vector<double> next(static_cast<std::size_t>(spec.output_size));
            for (int o = 0; o < spec.output_size; ++o) {
                double acc = m.biases[static_cast<std::size_t>(j)][static_cast<std::size_t>(o)];
                for (int i = 0; i < spec.input_size; ++i)
                    acc += static_cast<double>(
                               m.weights[static_cast<std::size_t>(j)]
                                        [static_cast<std::size_t>(o) * spec.input_size + i]) *
                           cur[static_cast<std::size_t>(i)];
                next[static_cast<std::size_t>(o)] = acc;
            }
            if (spec.act == net::activation::relu) {
                for (auto& v : next) v = std::max(0.0, v);
            } else {
                double zmax = next[0];
                for (const double v : next) zmax = std::max(zmax, v);
                double sum = 0.0;
                for (auto& v : next) {
                    v = std::exp(v - zmax);
                    sum += v;
                }
                for (auto& v : next) v /= sum;
            }
            cur = std::move(next);
        }
        total += -std::log(cur[static_cast<std::size_t>(ds.labels[n])]);
    }
    return total / static_cast<double>(ds.size());
}

} // namespace

TEST_CASE("architecture parsing and validation") {
    const auto arch = net::parse_architecture("784:256:relu,256:64:relu,64:10:softmax");
    REQUIRE(arch.size() == 3);
    CHECK(arch[0].input_size == 784);
    CHECK(arch[2].act == net::activation::softmax);
    CHECK(net::architecture_to_string(arch) == "784:256:relu,256:64:relu,64:10:softmax");

    CHECK_THROWS_AS(net::parse_architecture(""), data_error);
    // chain break 256 -> 128
    CHECK_THROWS_AS(net::parse_architecture("784:256:relu,128:10:softmax"), data_error);
    // softmax not last / relu last
    CHECK_THROWS_AS(net::parse_architecture("784:256:softmax,256:10:softmax"), data_error);
    CHECK_THROWS_AS(net::parse_architecture("784:10:relu"), data_error);
}

TEST_CASE("init_model: determinism, shapes, zero biases") {
    const auto arch = net::parse_architecture("784:256:relu,256:64:relu,64:10:softmax");
    const auto m1 = net::init_model(arch, 7);
    const auto m2 = net::init_model(arch, 7);
    CHECK(m1.num_layers() == 3);
    CHECK(m1.weights == m2.weights);

    const auto m3 = net::init_model(arch, 8);
    CHECK(m1.weights != m3.weights);

    CHECK(m1.weights[0].size() == 256u * 784u);
    CHECK(m1.weights[2].size() == 64u * 10u);
    for (const auto& b : m1.biases)
        for (const float v : b) CHECK(v == 0.0f);

    // zero-mean uniform scaled by fan-in
    const double limit0 = 1.0 / std::sqrt(784.0);
    for (const float w : m1.weights[0]) {
        CHECK(w >= -limit0);
        CHECK(w <= limit0);
    }

    CHECK_THROWS_AS(net::init_model({}, 1), data_error);
}

TEST_CASE("forward: uniform output on the zero model, relu nonnegativity") {
    const auto arch = net::parse_architecture("784:16:relu,16:10:softmax");
    auto m = net::init_model(arch, 3);
    for (auto& layer : m.weights) std::fill(layer.begin(), layer.end(), 0.0f);

    util::rng gen(11);
    const auto img = random_image(gen);
    net::activation_trace trace;
    const auto res = net::forward(m, {img.px.data(), img.px.size()}, &trace);
    for (const float p : res.probabilities) CHECK(p == doctest::Approx(0.1));

    REQUIRE(trace.layers.size() == 2);
    CHECK(trace.layers[0].size() == 16);
    CHECK(trace.layers[1].size() == 10);
}

TEST_CASE("forward: softmax sums to one, traces match layer sizes") {
    const auto arch = net::parse_architecture("784:32:relu,32:12:relu,12:10:softmax");
    const auto m = net::init_model(arch, 21);
    util::rng gen(22);
    for (int trial = 0; trial < 20; ++trial) {
        const auto img = random_image(gen);
        net::activation_trace trace;
        const auto res = net::forward(m, {img.px.data(), img.px.size()}, &trace);
        double sum = 0.0;
        for (const float p : res.probabilities) {
            CHECK(p >= 0.0f);
            sum += p;
        }
        CHECK(std::fabs(sum - 1.0) < 1e-6);
        CHECK(res.best_class ==
              static_cast<int>(std::max_element(res.probabilities.begin(),
                                                res.probabilities.end()) -
                               res.probabilities.begin()));
        REQUIRE(trace.layers.size() == 3);
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(trace.layers[j].size() ==
                  static_cast<std::size_t>(arch[j].output_size));
        }
        for (const float v : trace.layers[0]) CHECK(v >= 0.0f);
        for (const float v : trace.layers[1]) CHECK(v >= 0.0f);
    }

    std::vector<float> short_input(100, 0.0f);
    CHECK_THROWS_AS(net::forward(m, short_input), data_error);
}

TEST_CASE("analytic gradients match central finite differences") {
    // 23 parameters: 4:3 relu (12 w + 3 b) + 3:2 softmax (6 w + 2 b).
    // The first layer input must match the image width, so embed a 4-wide
    // toy into the 784 input by zeroing everything else.
    const auto arch = net::parse_architecture("784:3:relu,3:2:softmax");
    auto m = net::init_model(arch, 5);
    // keep only 4 active inputs so the parameter count that matters is tiny
    for (int o = 0; o < 3; ++o)
        for (int i = 4; i < 784; ++i)
            m.weight_at(0, o, i) = 0.0f;
    // park the hidden pre-activations away from the relu kink: with 4 inputs
    // in [0,1] and |w| <= 1/sqrt(784), |w.x| <= 0.15, so units 0/1 stay on and
    // unit 2 stays off for every +-1e-3 probe; the off unit checks the gate
    m.biases[0] = {0.3f, 0.35f, -0.5f};

    data::labeled_dataset ds;
    ds.category = data::category::train;
    util::rng gen(77);
    for (int n = 0; n < 6; ++n) {
        data::image img;
        for (int i = 0; i < 4; ++i)
            img.px[static_cast<std::size_t>(i)] = static_cast<float>(gen.next_unit());
        ds.images.push_back(img);
        ds.labels.push_back(static_cast<int>(gen.below(2)));
        ds.ids.push_back(n);
    }

    const auto g = net::compute_gradients(m, ds.images, ds.labels);

    int checked = 0;
    const double eps = 1e-3;
    for (int j = 0; j < 2; ++j) {
        const auto& spec = m.layers[static_cast<std::size_t>(j)];
        const int in_limit = j == 0 ? 4 : spec.input_size;
        for (int o = 0; o < spec.output_size; ++o) {
            for (int i = 0; i < in_limit; ++i) {
                const auto idx = static_cast<std::size_t>(o) * spec.input_size +
                                 static_cast<std::size_t>(i);
                auto probe = m;
                probe.weights[static_cast<std::size_t>(j)][idx] += static_cast<float>(eps);
                const double up = loss_double(probe, ds);
                probe.weights[static_cast<std::size_t>(j)][idx] -= static_cast<float>(2 * eps);
                const double down = loss_double(probe, ds);
                const double fd = (up - down) / (2 * eps);
                const double analytic = g.weights[static_cast<std::size_t>(j)][idx];
                CHECK(std::fabs(analytic - fd) <=
                      1e-4 * std::max({1e-6, std::fabs(fd), std::fabs(analytic)}));
                ++checked;
            }
            auto probe = m;
            probe.biases[static_cast<std::size_t>(j)][static_cast<std::size_t>(o)] +=
                static_cast<float>(eps);
            const double up = loss_double(probe, ds);
            probe.biases[static_cast<std::size_t>(j)][static_cast<std::size_t>(o)] -=
                static_cast<float>(2 * eps);
            const double down = loss_double(probe, ds);
            const double fd = (up - down) / (2 * eps);
            const double analytic =
                g.biases[static_cast<std::size_t>(j)][static_cast<std::size_t>(o)];
            CHECK(std::fabs(analytic - fd) <=
                  1e-4 * std::max({1e-6, std::fabs(fd), std::fabs(analytic)}));
            ++checked;
        }
    }
    CHECK(checked == 23);
}

TEST_CASE("one full-batch SGD step equals w - lr * gradient") {
    const auto arch = net::parse_architecture("784:8:relu,8:2:softmax");
    auto m = net::init_model(arch, 13);
    const auto ds = two_point_toy();
    const auto g = net::compute_gradients(m, ds.images, ds.labels);

    auto stepped = m;
    net::training_config tc;
    tc.epochs = 1;
    tc.batch_size = 2; // one batch
    tc.learning_rate = 0.25f;
    tc.master_seed = 900;
    net::train(stepped, ds, tc);

    for (std::size_t j = 0; j < m.weights.size(); ++j)
        for (std::size_t i = 0; i < m.weights[j].size(); ++i) {
            const float expect = m.weights[j][i] - 0.25f * g.weights[j][i];
            CHECK(stepped.weights[j][i] == doctest::Approx(expect).epsilon(1e-6));
        }
}

TEST_CASE("training fits a two-point separable toy set in one epoch") {
    auto m = net::init_model(net::parse_architecture("784:8:relu,8:2:softmax"), 13);
    const auto ds = two_point_toy();
    net::training_config tc;
    tc.epochs = 1;
    tc.batch_size = 1;
    tc.learning_rate = 0.5f;
    tc.master_seed = 31;
    const auto log = net::train(m, ds, tc);
    REQUIRE(log.size() == 1);
    CHECK(net::evaluate(m, ds).accuracy == 1.0);
}

TEST_CASE("train edge cases: zero epochs, empty set, sentinel labels, divergence") {
    const auto arch = net::parse_architecture("784:4:relu,4:2:softmax");
    auto m = net::init_model(arch, 3);
    const auto before = m.weights;
    const auto ds = two_point_toy();

    net::training_config tc;
    tc.epochs = 0;
    tc.master_seed = 1;
    CHECK(net::train(m, ds, tc).empty());
    CHECK(m.weights == before); // unchanged

    data::labeled_dataset empty;
    tc.epochs = 1;
    CHECK_THROWS_AS(net::train(m, empty, tc), data_error);

    auto unlabeled = data::generate_random_images(3, 5);
    CHECK_THROWS_AS(net::train(m, unlabeled, tc), data_error);

    // an absurd learning rate drives the weights to overflow
    tc.epochs = 50;
    tc.learning_rate = 1e30f;
    try {
        net::train(m, ds, tc);
        FAIL("expected numeric_error");
    } catch (const numeric_error& e) {
        CHECK(std::string(e.what()).find("epoch") != std::string::npos);
    }
}

TEST_CASE("training is deterministic in (seed, data, config)") {
    const auto arch = net::parse_architecture("784:16:relu,16:10:softmax");
    const auto ds = support::make_bars(8, 99, data::category::train);

    auto run = [&] {
        auto m = net::init_model(arch, 42);
        net::training_config tc;
        tc.epochs = 2;
        tc.batch_size = 16;
        tc.learning_rate = 0.1f;
        tc.master_seed = 777;
        net::train(m, ds, tc);
        return m;
    };
    const auto m1 = run();
    const auto m2 = run();
    CHECK(m1.weights == m2.weights); // bit-identical
    CHECK(m1.biases == m2.biases);
}

TEST_CASE("evaluate: constant predictor accuracy and count consistency") {
    const auto arch = net::parse_architecture("784:4:relu,4:3:softmax");
    auto m = net::init_model(arch, 3);
    for (auto& layer : m.weights) std::fill(layer.begin(), layer.end(), 0.0f);
    m.biases[1][2] = 5.0f; // always predicts class 2

    data::labeled_dataset all_two;
    util::rng gen(5);
    for (int i = 0; i < 12; ++i) {
        all_two.images.push_back(random_image(gen));
        all_two.labels.push_back(2);
        all_two.ids.push_back(i);
    }
    const auto ev = net::evaluate(m, all_two);
    CHECK(ev.accuracy == 1.0);

    auto none_two = all_two;
    for (auto& l : none_two.labels) l = 1;
    const auto ev2 = net::evaluate(m, none_two);
    CHECK(ev2.accuracy == 0.0);

    std::int64_t total = 0;
    for (const auto c : ev2.per_class_total) total += c;
    CHECK(total == 12);

    data::labeled_dataset empty;
    CHECK_THROWS_AS(net::evaluate(m, empty), data_error);
}

TEST_CASE("model save/load round trip preserves forward outputs exactly") {
    const auto arch = net::parse_architecture("784:24:relu,24:10:softmax");
    const auto m = net::init_model(arch, 55);
    support::temp_dir tmp("model");
    const auto path = tmp.path / "model.txt";
    net::save_model(m, path);

    const auto back = net::load_model(path);
    CHECK(back.layers.size() == m.layers.size());
    CHECK(back.weights == m.weights);
    CHECK(back.biases == m.biases);
    CHECK(back.init_seed == m.init_seed);

    util::rng gen(66);
    for (int trial = 0; trial < 100; ++trial) {
        const auto img = random_image(gen);
        const auto a = net::forward(m, {img.px.data(), img.px.size()});
        const auto b = net::forward(back, {img.px.data(), img.px.size()});
        CHECK(a.probabilities == b.probabilities); // zero-ulp round trip
    }
}

TEST_CASE("model load errors: truncation and future version") {
    const auto arch = net::parse_architecture("784:4:relu,4:2:softmax");
    const auto m = net::init_model(arch, 5);
    support::temp_dir tmp("model_err");
    const auto path = tmp.path / "model.txt";
    net::save_model(m, path);

    auto full = support::slurp(path);
    {
        std::ofstream out(tmp.path / "trunc.txt", std::ios::binary);
        out.write(full.data(), static_cast<std::streamsize>(full.size() / 2));
    }
    CHECK_THROWS_AS(net::load_model(tmp.path / "trunc.txt"), data_error);

    {
        std::ofstream out(tmp.path / "future.txt");
        out << "actprof-model-v99\nseed=0\narchitecture=784:4:relu,4:2:softmax\nend\n";
    }
    try {
        net::load_model(tmp.path / "future.txt");
        FAIL("expected data_error");
    } catch (const data_error& e) {
        CHECK(std::string(e.what()).find("version") != std::string::npos);
    }
}
