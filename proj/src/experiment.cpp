#include "actprof/experiment.hpp"

#include "actprof/encoding.hpp"
#include "actprof/errors.hpp"
#include "actprof/parallel.hpp"
#include "actprof/rng.hpp"
#include "actprof/sha256.hpp"
#include "actprof/svg_plot.hpp"
#include "actprof/transforms.hpp"
#include "actprof/version.hpp"

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

namespace actprof::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t quick_train_per_class = 600;
constexpr std::size_t quick_test_per_class = 100;
constexpr int quick_epochs = 3;

std::string bool_str(bool b) { return b ? "1" : "0"; }

bool parse_bool(const std::string& v) {
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no" || v.empty()) return false;
    throw usage_error("expected a boolean, got: " + v);
}

std::ofstream open_artifact(const fs::path& path,
                            std::span<const std::string> header_lines) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write: " + path.string());
    for (const auto& line : header_lines) out << "# " << line << "\n";
    return out;
}

std::string iso_utc_now() {
    std::time_t t;
    if (const char* sde = std::getenv("SOURCE_DATE_EPOCH"); sde && *sde)
        t = static_cast<std::time_t>(std::strtoll(sde, nullptr, 10));
    else
        t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

net::network_model load_model_artifact(const experiment_config& cfg) {
    return net::load_model(cfg.out_dir / artifact::model);
}

prof::profile_model_set load_profiles_artifact(const experiment_config& cfg) {
    return prof::load_profiles(cfg.out_dir / artifact::profiles);
}

data::labeled_dataset load_random_artifact(const experiment_config& cfg) {
    const auto raw = data::load_idx_images(cfg.out_dir / artifact::random_images);
    data::labeled_dataset ds;
    ds.category = data::category::random;
    for (std::size_t i = 0; i < raw.count(); ++i) {
        ds.images.push_back(data::normalize(raw.bytes_of(i)));
        ds.labels.push_back(data::no_label);
        ds.ids.push_back(static_cast<std::int64_t>(i));
    }
    return ds;
}

data::labeled_dataset load_rotation_artifact(const experiment_config& cfg) {
    auto ds = data::load_dataset(cfg.out_dir / artifact::rotation_images,
                                 cfg.out_dir / artifact::rotation_labels,
                                 data::category::rotation);
    // ids come from the outcomes table (source image ids)
    std::ifstream in(cfg.out_dir / artifact::rotation_outcomes);
    if (!in)
        throw data_error("cannot open " +
                         (cfg.out_dir / artifact::rotation_outcomes).string());
    std::string line;
    std::vector<std::int64_t> ids;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) { // column header
            header_seen = true;
            continue;
        }
        ids.push_back(std::stoll(line.substr(0, line.find(','))));
    }
    if (ids.size() != ds.size())
        throw data_error("rotation outcomes table does not match the image file");
    ds.ids = std::move(ids);
    return ds;
}

const char* category_color(data::category c) {
    switch (c) {
        case data::category::train: return "green";
        case data::category::test: return "blue";
        case data::category::random: return "red";
        case data::category::rotation: return "magenta";
    }
    return "black";
}

std::string format_cell(double v) { return util::format_double(v); }

} // namespace

namespace artifact {
std::string records(data::category cat) {
    return std::string("records_") + data::category_name(cat) + ".csv";
}
std::string summary(data::category cat) {
    return std::string("summary_") + data::category_name(cat) + ".csv";
}
std::string compare(data::category against) {
    return std::string("compare_train_") + data::category_name(against) + ".csv";
}
} // namespace artifact

void apply_config_line(experiment_config& cfg, const std::string& key,
                       const std::string& value) {
    try {
        if (key == "train-images") cfg.train_images = value;
        else if (key == "train-labels") cfg.train_labels = value;
        else if (key == "test-images") cfg.test_images = value;
        else if (key == "test-labels") cfg.test_labels = value;
        else if (key == "out") cfg.out_dir = value;
        else if (key == "arch") cfg.arch = value;
        else if (key == "epochs") cfg.epochs = std::stoi(value);
        else if (key == "batch-size") cfg.batch_size = std::stoi(value);
        else if (key == "learning-rate") cfg.learning_rate = std::stod(value);
        else if (key == "seed") {
            cfg.seed = std::stoull(value);
            cfg.seed_set = true;
        } else if (key == "c") cfg.c = std::stod(value);
        else if (key == "floor-probability") cfg.floor_probability = std::stod(value);
        else if (key == "paper-literal-std") cfg.paper_literal_std = parse_bool(value);
        else if (key == "per-class-norm") cfg.per_class_norm = parse_bool(value);
        else if (key == "rotation-step") cfg.rotation_step = std::stod(value);
        else if (key == "rotation-max") cfg.rotation_max = std::stod(value);
        else if (key == "random-count") cfg.random_count = std::stoull(value);
        else if (key == "quick") cfg.quick = parse_bool(value);
        else if (key == "threads") cfg.threads = std::stoi(value);
        else throw usage_error("unknown config key: " + key);
    } catch (const std::invalid_argument&) {
        throw usage_error("bad value for " + key + ": " + value);
    } catch (const std::out_of_range&) {
        throw usage_error("value out of range for " + key + ": " + value);
    }
}

experiment_config load_config_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open config file: " + path.string());
    experiment_config cfg;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw data_error("malformed config line: " + line);
        apply_config_line(cfg, line.substr(0, eq), line.substr(eq + 1));
    }
    return cfg;
}

std::string canonical_config(const experiment_config& cfg) {
    std::map<std::string, std::string> kv;
    kv["train-images"] = cfg.train_images.string();
    kv["train-labels"] = cfg.train_labels.string();
    kv["test-images"] = cfg.test_images.string();
    kv["test-labels"] = cfg.test_labels.string();
    kv["out"] = cfg.out_dir.string();
    kv["arch"] = cfg.arch;
    kv["epochs"] = std::to_string(cfg.epochs);
    kv["batch-size"] = std::to_string(cfg.batch_size);
    kv["learning-rate"] = util::format_double(cfg.learning_rate);
    kv["seed"] = std::to_string(cfg.seed);
    kv["c"] = util::format_double(cfg.c);
    kv["floor-probability"] = util::format_double(cfg.floor_probability);
    kv["paper-literal-std"] = bool_str(cfg.paper_literal_std);
    kv["per-class-norm"] = bool_str(cfg.per_class_norm);
    kv["rotation-step"] = util::format_double(cfg.rotation_step);
    kv["rotation-max"] = util::format_double(cfg.rotation_max);
    kv["random-count"] = std::to_string(cfg.random_count);
    kv["quick"] = bool_str(cfg.quick);
    std::string s;
    for (const auto& [k, v] : kv) s += k + "=" + v + "\n";
    return s;
}

std::string config_digest(const experiment_config& cfg) {
    return util::sha256_hex(canonical_config(cfg));
}

std::vector<std::string> artifact_header(const experiment_config& cfg) {
    return {std::string(tool_name) + " " + tool_version +
            " config=" + config_digest(cfg)};
}

int effective_epochs(const experiment_config& cfg) {
    return cfg.quick ? std::min(cfg.epochs, quick_epochs) : cfg.epochs;
}

void check_paths(const experiment_config& cfg) {
    if (!cfg.seed_set)
        throw usage_error("a master seed is required (--seed or seed= in the config)");
    for (const auto& [name, p] :
         {std::pair{"train-images", cfg.train_images},
          std::pair{"train-labels", cfg.train_labels},
          std::pair{"test-images", cfg.test_images},
          std::pair{"test-labels", cfg.test_labels}}) {
        if (p.empty())
            throw usage_error(std::string("missing required path: ") + name);
        if (!fs::exists(p))
            throw data_error(std::string(name) + " does not exist: " + p.string());
    }
}

data::labeled_dataset stratified_subset(const data::labeled_dataset& ds,
                                        std::size_t per_class, int num_classes) {
    std::vector<std::size_t> taken(static_cast<std::size_t>(num_classes), 0);
    data::labeled_dataset out;
    out.category = ds.category;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const int label = ds.labels[i];
        if (label < 0 || label >= num_classes) continue;
        auto& t = taken[static_cast<std::size_t>(label)];
        if (t >= per_class) continue;
        ++t;
        out.images.push_back(ds.images[i]);
        out.labels.push_back(label);
        out.ids.push_back(ds.ids[i]);
    }
    return out;
}

data::labeled_dataset load_train_set(const experiment_config& cfg) {
    auto ds = data::load_dataset(cfg.train_images, cfg.train_labels,
                                 data::category::train);
    if (cfg.quick) ds = stratified_subset(ds, quick_train_per_class, 10);
    return ds;
}

data::labeled_dataset load_test_set(const experiment_config& cfg) {
    auto ds = data::load_dataset(cfg.test_images, cfg.test_labels,
                                 data::category::test);
    if (cfg.quick) ds = stratified_subset(ds, quick_test_per_class, 10);
    return ds;
}

void cmd_train(const experiment_config& cfg) {
    check_paths(cfg);
    fs::create_directories(cfg.out_dir);
    const auto header = artifact_header(cfg);

    const auto arch = net::parse_architecture(cfg.arch);
    if (arch.back().output_size != 10)
        throw usage_error("the final layer must have 10 outputs to match the "
                          "label files (got " +
                          std::to_string(arch.back().output_size) + ")");

    const auto train_set = load_train_set(cfg);
    std::cout << "[train] " << train_set.size() << " training images\n";

    auto model = net::init_model(arch, util::child_seed(cfg.seed, "init"));
    net::training_config tc;
    tc.epochs = effective_epochs(cfg);
    tc.batch_size = cfg.batch_size;
    tc.learning_rate = static_cast<float>(cfg.learning_rate);
    tc.master_seed = util::child_seed(cfg.seed, "train");

    const auto log = net::train(model, train_set, tc);
    for (const auto& row : log)
        std::cout << "[train] epoch " << row.epoch << ": loss "
                  << util::format_double(row.mean_loss) << ", accuracy "
                  << util::format_double(row.accuracy) << "\n";

    net::save_model(model, cfg.out_dir / artifact::model, header);

    auto metrics = open_artifact(cfg.out_dir / artifact::train_metrics, header);
    metrics << "epoch,mean_loss,accuracy\n";
    for (const auto& row : log)
        metrics << row.epoch << ',' << util::format_double(row.mean_loss) << ','
                << util::format_double(row.accuracy) << "\n";
}

void cmd_fit(const experiment_config& cfg) {
    check_paths(cfg);
    fs::create_directories(cfg.out_dir);
    const auto header = artifact_header(cfg);

    const auto model = load_model_artifact(cfg);
    const auto train_set = load_train_set(cfg);

    prof::fit_options opts;
    opts.c = cfg.c;
    opts.scaled_std = cfg.paper_literal_std;
    opts.per_class_norm = cfg.per_class_norm;
    opts.floor_probability = cfg.floor_probability;

    const auto set = prof::fit_profiles(model, train_set, -1, opts,
                                        util::resolve_threads(cfg.threads));
    for (const auto& cm : set.classes)
        std::cout << "[fit] class " << cm.class_id << ": "
                  << cm.class_sample_count << " correctly predicted images\n";

    prof::save_profiles(set, cfg.out_dir / artifact::profiles, header);
}

void cmd_derive(const experiment_config& cfg) {
    check_paths(cfg);
    fs::create_directories(cfg.out_dir);
    const auto header = artifact_header(cfg);

    const auto model = load_model_artifact(cfg);
    const auto train_set = load_train_set(cfg);

    // random-pixel control set
    const std::size_t count =
        cfg.random_count > 0 ? cfg.random_count : train_set.size();
    const std::uint64_t random_seed = util::child_seed(cfg.seed, "random-images");
    const auto random_set = data::generate_random_images(count, random_seed);
    data::dataset_meta meta;
    meta.category = "random";
    meta.seed = random_seed;
    meta.has_seed = true;
    meta.count = random_set.size();
    meta.header_lines = header;
    data::save_dataset(cfg.out_dir / artifact::random_images, {}, random_set, meta);
    std::cout << "[derive] random set: " << random_set.size() << " images\n";

    // rotation set: rotate until the prediction flips
    const auto rs = xform::build_rotation_set(model, train_set, cfg.rotation_step,
                                              cfg.rotation_max,
                                              util::resolve_threads(cfg.threads));
    data::dataset_meta rot_meta;
    rot_meta.category = "rotation";
    rot_meta.count = rs.set.size();
    rot_meta.header_lines = header;
    data::save_dataset(cfg.out_dir / artifact::rotation_images,
                       cfg.out_dir / artifact::rotation_labels, rs.set, rot_meta);

    auto table = open_artifact(cfg.out_dir / artifact::rotation_outcomes, header);
    table << "id,original_label,predicted_class,applied_angle,steps_taken\n";
    for (std::size_t i = 0; i < rs.outcomes.size(); ++i) {
        const auto& o = rs.outcomes[i];
        table << rs.set.ids[i] << ',' << o.original_label << ',' << o.predicted_class
              << ',' << util::format_double(o.applied_angle) << ',' << o.steps_taken
              << "\n";
    }
    std::cout << "[derive] rotation set: " << rs.set.size() << " images\n";
}

void cmd_score(const experiment_config& cfg) {
    check_paths(cfg);
    const auto header = artifact_header(cfg);
    const auto model = load_model_artifact(cfg);
    const auto set = load_profiles_artifact(cfg);
    const int threads = util::resolve_threads(cfg.threads);

    const auto score_one = [&](const data::labeled_dataset& ds) {
        const auto records = prof::score_dataset(model, set, ds, threads);
        write_records_csv(cfg.out_dir / artifact::records(ds.category), records,
                          header);
        std::cout << "[score] " << data::category_name(ds.category) << ": "
                  << records.size() << " records\n";
    };
    score_one(load_train_set(cfg));
    score_one(load_test_set(cfg));
    score_one(load_random_artifact(cfg));
    score_one(load_rotation_artifact(cfg));
}

namespace {

void write_summary_csv(const fs::path& path,
                       std::span<const prof::class_summary> rows,
                       std::span<const std::string> header) {
    auto out = open_artifact(path, header);
    out << "class,count,avg_distance,std_deviation\n";
    for (const auto& row : rows) {
        out << row.class_id << ',' << row.count << ',';
        if (row.count > 0)
            out << format_cell(row.avg) << ',' << format_cell(row.std_dev);
        else
            out << "-,-";
        out << "\n";
    }
}

void write_compare_csv(const fs::path& path,
                       std::span<const stats::comparison_row> rows,
                       std::span<const std::string> header) {
    auto out = open_artifact(path, header);
    out << "class,es_statistic,es_pvalue,cliffs_delta,magnitude,bh_rejected\n";
    for (const auto& row : rows) {
        out << row.class_id << ',';
        if (row.es)
            out << format_cell(row.es->statistic) << ',' << format_cell(row.es->p_value);
        else
            out << "-,-";
        out << ',';
        if (row.cliffs)
            out << format_cell(row.cliffs->delta) << ','
                << stats::magnitude_name(row.cliffs->mag);
        else
            out << "-,-";
        out << ',' << (row.es ? (row.bh_rejected ? "1" : "0") : "-") << "\n";
    }
}

} // namespace

void cmd_report(const experiment_config& cfg) {
    const auto header = artifact_header(cfg);
    const int num_classes = 10;

    std::map<data::category, std::vector<prof::distance_record>> records;
    for (const auto cat : {data::category::train, data::category::test,
                           data::category::random, data::category::rotation}) {
        const auto path = cfg.out_dir / artifact::records(cat);
        if (fs::exists(path)) {
            records[cat] = read_records_csv(path);
        } else {
            std::cout << "[report] warning: missing " << path.string()
                      << "; reporting blanks for " << data::category_name(cat)
                      << "\n";
            records[cat] = {};
        }
        if (records[cat].empty())
            std::cout << "[report] warning: no records for "
                      << data::category_name(cat) << "\n";
        write_summary_csv(cfg.out_dir / artifact::summary(cat),
                          prof::summarize(records[cat], num_classes), header);
    }

    for (const auto against : {data::category::test, data::category::random,
                               data::category::rotation}) {
        const auto rows = stats::compare_categories(
            records[data::category::train], records[against], num_classes);
        write_compare_csv(cfg.out_dir / artifact::compare(against), rows, header);
    }

    // per-class overlaid distance histograms, as SVG and as plain tables
    const auto plot_dir = cfg.out_dir / "plots";
    fs::create_directories(plot_dir);
    for (int k = 0; k < num_classes; ++k) {
        std::vector<plot::histogram_series> series;
        for (const auto cat : {data::category::train, data::category::test,
                               data::category::random, data::category::rotation}) {
            plot::histogram_series s;
            s.label = data::category_name(cat);
            s.color = category_color(cat);
            for (const auto& r : records[cat])
                if (r.predicted_class == k) s.values.push_back(r.distance);
            series.push_back(std::move(s));
        }
        const auto name = "class_" + std::to_string(k);
        plot::write_histogram_svg(plot_dir / (name + ".svg"),
                                  "distance distributions, class " + std::to_string(k),
                                  series, {}, header);
        plot::write_histogram_data(plot_dir / (name + "_hist.csv"), series, 60, header);
    }
}

void cmd_full(const experiment_config& cfg) {
    cmd_train(cfg);
    cmd_fit(cfg);
    cmd_derive(cfg);
    cmd_score(cfg);
    cmd_report(cfg);

    // manifest with digests of everything the run produced
    std::vector<std::string> names = {
        artifact::model, artifact::train_metrics, artifact::profiles,
        artifact::random_images, std::string(artifact::random_images) + ".meta",
        artifact::rotation_images, std::string(artifact::rotation_images) + ".meta",
        artifact::rotation_labels, artifact::rotation_outcomes};
    for (const auto cat : {data::category::train, data::category::test,
                           data::category::random, data::category::rotation}) {
        names.push_back(artifact::records(cat));
        names.push_back(artifact::summary(cat));
    }
    for (const auto against : {data::category::test, data::category::random,
                               data::category::rotation})
        names.push_back(artifact::compare(against));
    for (int k = 0; k < 10; ++k) {
        names.push_back("plots/class_" + std::to_string(k) + ".svg");
        names.push_back("plots/class_" + std::to_string(k) + "_hist.csv");
    }
    std::sort(names.begin(), names.end());

    auto out = open_artifact(cfg.out_dir / artifact::manifest, artifact_header(cfg));
    out << "actprof-manifest-v1\n";
    out << "tool=" << tool_name << ' ' << tool_version << "\n";
    out << "created=" << iso_utc_now() << "\n";
    out << "config_digest=" << config_digest(cfg) << "\n";
    std::istringstream cfg_lines(canonical_config(cfg));
    std::string line;
    while (std::getline(cfg_lines, line)) out << "config." << line << "\n";
    for (const auto& name : names)
        out << "artifact=" << name
            << " sha256=" << util::sha256_file_hex(cfg.out_dir / name) << "\n";
    out << "end\n";
    std::cout << "[full] manifest written to "
              << (cfg.out_dir / artifact::manifest).string() << "\n";
}

void write_records_csv(const fs::path& path,
                       std::span<const prof::distance_record> records,
                       std::span<const std::string> header_lines) {
    auto out = open_artifact(path, header_lines);
    out << "id,category,predicted_class,distance\n";
    for (const auto& r : records)
        out << r.input_id << ',' << data::category_name(r.category) << ','
            << r.predicted_class << ',' << util::format_double(r.distance) << "\n";
    if (!out) throw data_error("write failed: " + path.string());
}

std::vector<prof::distance_record> read_records_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open records file: " + path.string());
    std::vector<prof::distance_record> records;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line != "id,category,predicted_class,distance")
                throw data_error("unexpected records header in " + path.string());
            header_seen = true;
            continue;
        }
        std::stringstream ss(line);
        std::string id_s, cat_s, class_s, dist_s;
        if (!std::getline(ss, id_s, ',') || !std::getline(ss, cat_s, ',') ||
            !std::getline(ss, class_s, ',') || !std::getline(ss, dist_s))
            throw data_error("malformed record line: " + line);
        prof::distance_record r;
        r.input_id = std::stoll(id_s);
        r.category = data::category_from_name(cat_s);
        r.predicted_class = std::stoi(class_s);
        r.distance = std::stod(dist_s);
        records.push_back(r);
    }
    if (!header_seen)
        throw data_error("records file has no header: " + path.string());
    return records;
}

} // namespace actprof::cli
