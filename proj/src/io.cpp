#include "geopas/io.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "geopas/bbob.hpp"
#include "geopas/common.hpp"
#include "geopas/probing.hpp"

namespace geopas::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<eval::DatapointKey> SuiteSpec::expand() const {
    if (functions.empty() || dimensions.empty() || instances.empty() || repetitions.empty())
        throw config_error("suite spec has an empty axis");
    std::vector<eval::DatapointKey> keys;
    keys.reserve(functions.size() * dimensions.size() * instances.size() * repetitions.size());
    for (int f : functions)
        for (int d : dimensions)
            for (int i : instances)
                for (int rep : repetitions) keys.push_back({f, d, i, rep});
    return keys;
}

namespace {

std::vector<int> parse_axis(const json& node, const char* name) {
    std::vector<int> out;
    if (node.is_number_integer()) {
        const int n = node.get<int>();
        if (n < 1) throw config_error(std::string(name) + " must be >= 1");
        for (int i = 1; i <= n; ++i) out.push_back(i);
    } else if (node.is_array()) {
        out = node.get<std::vector<int>>();
        if (out.empty()) throw config_error(std::string(name) + " is empty");
    } else {
        throw config_error(std::string(name) + " must be an integer count or an array");
    }
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw config_error(origin + ": " + e.what());
    }
    if (doc.value("version", 1) != 1) throw config_error(origin + ": unsupported config version");

    RunConfig cfg;
    if (doc.contains("suite")) {
        const auto& suite = doc.at("suite");
        cfg.suite.functions = parse_axis(suite.at("functions"), "suite.functions");
        cfg.suite.dimensions = parse_axis(suite.at("dimensions"), "suite.dimensions");
        cfg.suite.instances = parse_axis(suite.at("instances"), "suite.instances");
        cfg.suite.repetitions = parse_axis(suite.at("repetitions"), "suite.repetitions");
        for (int f : cfg.suite.functions)
            if (f < 1 || f > bbob::kFunctionCount)
                throw config_error(origin + ": suite.functions out of range 1..24");
        for (int d : cfg.suite.dimensions)
            if (d < 2) throw config_error(origin + ": suite dimensions must be >= 2");
    }
    if (doc.contains("probing")) {
        const auto& probing = doc.at("probing");
        cfg.probing.slices = probing.value("slices", cfg.probing.slices);
        cfg.probing.resolution = probing.value("resolution", cfg.probing.resolution);
        cfg.probing.seed = probing.value("seed", cfg.probing.seed);
        if (cfg.probing.slices < 1) throw config_error(origin + ": probing.slices must be >= 1");
        if (cfg.probing.resolution < 2)
            throw config_error(origin + ": probing.resolution must be >= 2");
    }
    if (doc.contains("model")) {
        const auto& m = doc.at("model");
        cfg.train.epochs = m.value("epochs", cfg.train.epochs);
        cfg.train.batch_size = m.value("batch_size", cfg.train.batch_size);
        cfg.train.learning_rate = m.value("learning_rate", cfg.train.learning_rate);
        cfg.train.lambda_cls = m.value("lambda_cls", cfg.train.lambda_cls);
        cfg.train.seed = m.value("seed", cfg.train.seed);
        cfg.train.dropout_enabled = m.value("dropout", cfg.train.dropout_enabled);
        cfg.model.use_xi = m.value("use_xi", cfg.model.use_xi);
        cfg.model.use_dim = m.value("use_dim", cfg.model.use_dim);
        cfg.model.use_cat_head = m.value("use_cat_head", cfg.model.use_cat_head);
        if (cfg.train.epochs < 1) throw config_error(origin + ": model.epochs must be >= 1");
        if (cfg.train.lambda_cls < 0.0)
            throw config_error(origin + ": model.lambda_cls must be >= 0");
    }
    cfg.selection_mode = doc.value("selection_mode", cfg.selection_mode);
    cfg.protocol = doc.value("protocol", cfg.protocol);
    cfg.labels_path = doc.value("labels", cfg.labels_path);
    cfg.dataset_dir = doc.value("dataset", cfg.dataset_dir);
    cfg.output_dir = doc.value("output", cfg.output_dir);
    cfg.jobs = doc.value("jobs", cfg.jobs);
    cfg.eval_seed = doc.value("eval_seed", cfg.eval_seed);
    if (cfg.jobs < 1) throw config_error(origin + ": jobs must be >= 1");
    if (doc.contains("sweep")) {
        const auto& sweep = doc.at("sweep");
        cfg.sweep_slice_counts = sweep.at("slice_counts").get<std::vector<int>>();
        cfg.sweep_resolutions = sweep.at("resolutions").get<std::vector<int>>();
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    return parse_run_config(read_text_file(path), path);
}

std::uint64_t dataset_config_hash(const RunConfig& config) {
    json doc;
    doc["functions"] = config.suite.functions;
    doc["dimensions"] = config.suite.dimensions;
    doc["instances"] = config.suite.instances;
    doc["repetitions"] = config.suite.repetitions;
    doc["slices"] = config.probing.slices;
    doc["resolution"] = config.probing.resolution;
    doc["seed"] = config.probing.seed;
    return fnv1a64(doc.dump());
}

selector::Mode selection_mode_from_name(const std::string& name) {
    if (name == "full") return selector::Mode::full;
    if (name == "no-prior") return selector::Mode::no_prior;
    if (name == "no-catastrophe") return selector::Mode::no_catastrophe;
    if (name == "regression-only") return selector::Mode::regression_only;
    throw config_error("unknown selection mode '" + name +
                       "' (expected full|no-prior|no-catastrophe|regression-only)");
}

namespace {

std::string slice_file_name(const eval::DatapointKey& key) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "f%02d_d%02d_i%02d_r%02d.slc", key.function_id, key.dimension,
                  key.instance_id, key.repetition);
    return buf;
}

}  // namespace

GenerateResult generate_dataset(const RunConfig& config, const std::string& out_dir) {
    const auto keys = config.suite.expand();
    fs::create_directories(out_dir);

    GenerateResult result;
    result.evaluations_per_datapoint =
        static_cast<std::uint64_t>(config.probing.slices) *
        static_cast<std::uint64_t>(config.probing.resolution) *
        static_cast<std::uint64_t>(config.probing.resolution);

    const auto t0 = std::chrono::steady_clock::now();

    // disjoint derived seeds per datapoint, so workers never contend
    const int jobs = std::max(1, std::min<int>(config.jobs, static_cast<int>(keys.size())));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
    std::vector<double> set_seconds(keys.size(), 0.0);
    auto worker = [&](int w) {
        try {
            for (std::size_t i = static_cast<std::size_t>(w); i < keys.size();
                 i += static_cast<std::size_t>(jobs)) {
                const auto& key = keys[i];
                const auto instance =
                    bbob::make_instance(key.function_id, key.dimension, key.instance_id);
                const auto s0 = std::chrono::steady_clock::now();
                auto set = probing::build_probe_set(instance, config.probing.slices,
                                                    config.probing.resolution,
                                                    eval::datapoint_probe_seed(config.probing.seed,
                                                                               key));
                set_seconds[i] = std::chrono::duration<double>(
                                     std::chrono::steady_clock::now() - s0).count();
                set.provenance.repetition = key.repetition;
                probing::save_slice_set(set, (fs::path(out_dir) / slice_file_name(key)).string());
            }
        } catch (...) {
            errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
    };
    if (jobs == 1) {
        worker(0);
    } else {
        std::vector<std::thread> threads;
        for (int w = 0; w < jobs; ++w) threads.emplace_back(worker, w);
        for (auto& t : threads) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    const auto t1 = std::chrono::steady_clock::now();
    result.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    result.total_evaluations = result.evaluations_per_datapoint * keys.size();
    for (const auto& key : keys) result.files.push_back(slice_file_name(key));
    std::sort(result.files.begin(), result.files.end());

    json manifest;
    manifest["format"] = "geopas-dataset";
    manifest["version"] = 1;
    manifest["config_hash"] = dataset_config_hash(config);
    manifest["slices"] = config.probing.slices;
    manifest["resolution"] = config.probing.resolution;
    manifest["probe_seed"] = config.probing.seed;
    manifest["datapoints"] = keys.size();
    manifest["evaluations_per_datapoint"] = result.evaluations_per_datapoint;
    manifest["total_evaluations"] = result.total_evaluations;
    manifest["wall_seconds"] = result.wall_seconds;
    manifest["files"] = result.files;
    // per-set probing cost, keyed like `files` (sorted by file name)
    {
        std::map<std::string, double> by_file;
        for (std::size_t i = 0; i < keys.size(); ++i)
            by_file[slice_file_name(keys[i])] = set_seconds[i];
        std::vector<double> ordered;
        ordered.reserve(result.files.size());
        for (const auto& name : result.files) ordered.push_back(by_file[name]);
        manifest["set_seconds"] = ordered;
    }
    std::ofstream out(fs::path(out_dir) / "manifest.json");
    if (!out) throw data_error("cannot write manifest in " + out_dir);
    out << manifest.dump(2) << "\n";
    return result;
}

LoadedDataset load_dataset(const std::string& dir) {
    const fs::path manifest_path = fs::path(dir) / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw data_error("cannot read " + manifest_path.string());
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw data_error(manifest_path.string() + ": " + e.what());
    }
    if (manifest.value("format", "") != "geopas-dataset")
        throw data_error(manifest_path.string() + ": not a geopas dataset manifest");

    LoadedDataset loaded;
    loaded.config_hash = manifest.at("config_hash").get<std::uint64_t>();
    loaded.slices = manifest.at("slices").get<int>();
    loaded.resolution = manifest.at("resolution").get<int>();
    for (const auto& name : manifest.at("files")) {
        auto set = probing::load_slice_set((fs::path(dir) / name.get<std::string>()).string());
        eval::DatapointKey key{set.provenance.function_id, set.provenance.dimension,
                               set.provenance.instance_id, set.provenance.repetition};
        loaded.dataset.index.push_back(key);
        loaded.dataset.slice_sets.push_back(std::move(set));
    }
    if (loaded.dataset.index.empty()) throw data_error(dir + ": dataset has no slice files");
    return loaded;
}

void check_dataset_hash(const LoadedDataset& loaded, const RunConfig& config, bool force) {
    const std::uint64_t expected = dataset_config_hash(config);
    if (loaded.config_hash == expected) return;
    if (!force)
        throw config_error("dataset config hash mismatch (dataset " +
                           std::to_string(loaded.config_hash) + ", config " +
                           std::to_string(expected) + "); rerun generate or pass --force");
}

// ---------------------------------------------------------------------------
// synthetic labels
// ---------------------------------------------------------------------------

SyntheticSpec parse_synthetic_spec(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw config_error(origin + ": " + e.what());
    }
    SyntheticSpec spec;
    if (doc.contains("functions_a")) spec.functions_a = doc.at("functions_a").get<std::vector<int>>();
    if (doc.contains("functions_b")) spec.functions_b = doc.at("functions_b").get<std::vector<int>>();
    if (doc.contains("dimensions")) spec.dimensions = doc.at("dimensions").get<std::vector<int>>();
    spec.base_ert = doc.value("base_ert", spec.base_ert);
    spec.penalty_ratio = doc.value("penalty_ratio", spec.penalty_ratio);
    spec.penalty_ratio_a = doc.value("penalty_ratio_a", spec.penalty_ratio_a);
    spec.penalty_ratio_b = doc.value("penalty_ratio_b", spec.penalty_ratio_b);
    spec.solver_a = doc.value("solver_a", spec.solver_a);
    spec.solver_b = doc.value("solver_b", spec.solver_b);
    spec.cap_rate = doc.value("cap_rate", spec.cap_rate);
    spec.seed = doc.value("seed", spec.seed);
    if (doc.contains("cap_rows"))
        for (const auto& row : doc.at("cap_rows"))
            spec.cap_rows.emplace_back(row.at(0).get<int>(), row.at(1).get<int>());
    if (spec.functions_a.empty() || spec.functions_b.empty() || spec.dimensions.empty())
        throw config_error(origin + ": synthetic spec needs both families and dimensions");
    if (spec.ratio_a() <= 1.0 || spec.ratio_b() <= 1.0)
        throw config_error(origin + ": penalty ratios must exceed 1");
    if (spec.cap_rate < 0.0 || spec.cap_rate > 1.0)
        throw config_error(origin + ": cap_rate must lie in [0, 1]");
    return spec;
}

std::string synthetic_labels_csv(const SyntheticSpec& spec) {
    std::ostringstream out;
    out << "function_id,dimension,algorithm,ert,finite_flag\n";
    Rng rng(spec.seed);

    auto is_cap_row = [&spec](int f, int d) {
        for (const auto& [cf, cd] : spec.cap_rows)
            if (cf == f && cd == d) return true;
        return false;
    };

    auto emit_row = [&](int f, int d, bool a_family) {
        const double fast = spec.base_ert;
        const double ert_a = a_family ? fast : spec.base_ert * spec.ratio_b();
        const double ert_b = a_family ? spec.base_ert * spec.ratio_a() : fast;
        // targeted injection: the first solver fails outright on listed rows
        bool a_finite = !is_cap_row(f, d);
        bool b_finite = true;
        if (spec.cap_rate > 0.0) {
            if (rng.next_double() < spec.cap_rate) a_finite = false;
            if (rng.next_double() < spec.cap_rate) b_finite = false;
        }
        // a row must keep at least one finite entry
        if (!a_finite && !b_finite) b_finite = true;

        out << f << ',' << d << ',' << spec.solver_a << ',' << (a_finite ? ert_a : 0.0) << ','
            << (a_finite ? 1 : 0) << "\n";
        out << f << ',' << d << ',' << spec.solver_b << ',' << (b_finite ? ert_b : 0.0) << ','
            << (b_finite ? 1 : 0) << "\n";
    };

    for (int f : spec.functions_a)
        for (int d : spec.dimensions) emit_row(f, d, true);
    for (int f : spec.functions_b)
        for (int d : spec.dimensions) emit_row(f, d, false);
    return out.str();
}

}  // namespace geopas::io
