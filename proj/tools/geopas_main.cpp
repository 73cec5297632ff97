// geopas command line: dataset generation, label ingestion, protocol
// evaluation with report + plot emission, budget sweeps, and the synthetic
// label generator used by the offline benchmark.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "geopas/common.hpp"
#include "geopas/evaluation.hpp"
#include "geopas/io.hpp"
#include "geopas/labels.hpp"
#include "geopas/svg_plots.hpp"

namespace fs = std::filesystem;
using namespace geopas;

namespace {

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write " + path.string());
    out << content;
}

int cmd_generate(const std::string& config_path, std::optional<std::string> output_override) {
    io::RunConfig config = io::load_run_config(config_path);
    if (output_override) config.output_dir = *output_override;
    const auto result = io::generate_dataset(config, config.output_dir);
    std::cout << "wrote " << result.files.size() << " slice sets to " << config.output_dir << " ("
              << result.evaluations_per_datapoint << " evaluations each, "
              << result.total_evaluations << " total, " << result.wall_seconds << " s)\n";
    return 0;
}

int cmd_ingest(const std::string& runs_path, const std::string& ert_path,
               const std::string& output_path) {
    labels::LabelTable table;
    std::uint64_t source_hash = 0;
    if (!runs_path.empty()) {
        table = labels::ingest_runs_csv(runs_path);
        std::ifstream in(runs_path);
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        source_hash = fnv1a64(text);
    } else {
        table = labels::ingest_ert_csv(ert_path);
        std::ifstream in(ert_path);
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        source_hash = fnv1a64(text);
    }
    for (const auto& warning : table.warnings) std::cerr << "warning: " << warning << "\n";
    labels::save_label_table(table, output_path, source_hash);
    std::cout << "wrote " << table.rows.size() << " rows x " << table.portfolio_size()
              << " algorithms (cap " << table.cap << ") to " << output_path << "\n";
    return 0;
}

void emit_report_artifacts(const eval::Report& report, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    write_file(out_dir / "report.json", eval::report_to_json(report));
    write_file(out_dir / "report.csv", eval::report_to_csv(report));
    write_file(out_dir / "relert_histogram.svg", svg::relert_histogram(report));
    write_file(out_dir / "survival_curves.svg", svg::survival_curves(report));
    write_file(out_dir / "selection_frequencies.svg", svg::selection_frequencies(report));
    write_file(out_dir / "closure_heatmap.svg", svg::closure_heatmap(report));
}

int cmd_evaluate(const std::string& config_path, std::optional<std::string> dataset_override,
                 std::optional<std::string> labels_override,
                 std::optional<std::string> protocol_override,
                 std::optional<std::string> mode_override,
                 std::optional<std::string> output_override, bool force) {
    io::RunConfig config = io::load_run_config(config_path);
    if (dataset_override) config.dataset_dir = *dataset_override;
    if (labels_override) config.labels_path = *labels_override;
    if (protocol_override) config.protocol = *protocol_override;
    if (mode_override) config.selection_mode = *mode_override;
    if (output_override) config.output_dir = *output_override;
    if (config.dataset_dir.empty()) throw config_error("no dataset directory configured");
    if (config.labels_path.empty()) throw config_error("no labels file configured");

    const io::LoadedDataset loaded = io::load_dataset(config.dataset_dir);
    if (loaded.config_hash != io::dataset_config_hash(config) && force)
        std::cerr << "warning: dataset config hash mismatch, continuing under --force\n";
    io::check_dataset_hash(loaded, config, force);

    const labels::LabelTable table = labels::load_label_table(config.labels_path);

    eval::RunOptions options;
    options.model = config.model;
    options.model.portfolio_size = table.portfolio_size();
    options.train = config.train;
    options.mode = io::selection_mode_from_name(config.selection_mode);
    options.seed = config.eval_seed;
    options.jobs = config.jobs;
    fs::create_directories(fs::path(config.output_dir) / "models");
    options.model_save_dir = (fs::path(config.output_dir) / "models").string();

    const eval::Report report = eval::run_protocol(
        loaded.dataset, table, eval::protocol_from_name(config.protocol), options);
    emit_report_artifacts(report, config.output_dir);

    // model manifest: portfolio width, probing shape, ablation switches
    {
        nlohmann::json manifest;
        manifest["portfolio_size"] = table.portfolio_size();
        manifest["slices"] = loaded.slices;
        manifest["resolution"] = loaded.resolution;
        manifest["use_xi"] = options.model.use_xi;
        manifest["use_dim"] = options.model.use_dim;
        manifest["use_cat_head"] = options.model.use_cat_head;
        manifest["dropout_rate"] = options.model.dropout_rate;
        manifest["folds"] = report.fold_sbs.size();
        write_file(fs::path(config.output_dir) / "models" / "manifest.json",
                   manifest.dump(2) + "\n");
    }

    const auto& all = report.cells.back();
    std::cout << "protocol " << report.protocol << ": " << report.records.size()
              << " datapoints, accuracy " << report.selection_accuracy << "\n"
              << "  SBS      mean/median/p90 = " << all.sbs.mean << " / " << all.sbs.median
              << " / " << all.sbs.p90 << "\n"
              << "  selector mean/median/p90 = " << all.selector.mean << " / "
              << all.selector.median << " / " << all.selector.p90 << "\n"
              << "reports and plots in " << config.output_dir << "\n";
    return 0;
}

int cmd_sweep(const std::string& config_path, std::optional<std::string> labels_override,
              std::optional<std::string> output_override) {
    io::RunConfig config = io::load_run_config(config_path);
    if (labels_override) config.labels_path = *labels_override;
    if (output_override) config.output_dir = *output_override;
    if (config.labels_path.empty()) throw config_error("no labels file configured");
    if (config.sweep_slice_counts.empty() || config.sweep_resolutions.empty())
        throw config_error("sweep requires sweep.slice_counts and sweep.resolutions");

    const labels::LabelTable table = labels::load_label_table(config.labels_path);
    eval::RunOptions options;
    options.model = config.model;
    options.model.portfolio_size = table.portfolio_size();
    options.train = config.train;
    options.mode = io::selection_mode_from_name(config.selection_mode);
    options.seed = config.eval_seed;
    options.jobs = config.jobs;

    const auto grid = eval::budget_sweep(config.suite.expand(), table,
                                         eval::protocol_from_name(config.protocol), options,
                                         config.sweep_slice_counts, config.sweep_resolutions,
                                         config.probing.seed);

    fs::create_directories(config.output_dir);
    std::ostringstream csv;
    csv << "slices,resolution,evaluations,probe_seconds_per_set,mean,median,p90\n";
    csv.setf(std::ios::fixed);
    csv.precision(6);
    for (const auto& cell : grid.cells)
        csv << cell.slice_count << ',' << cell.resolution << ',' << cell.evaluations_per_datapoint
            << ',' << cell.probe_seconds_per_set << ',' << cell.stats.mean << ','
            << cell.stats.median << ',' << cell.stats.p90 << '\n';
    write_file(fs::path(config.output_dir) / "sweep.csv", csv.str());
    for (const char* stat : {"mean", "median", "p90"})
        write_file(fs::path(config.output_dir) / (std::string("sweep_") + stat + ".svg"),
                   svg::sweep_heatmap(grid, stat));
    std::cout << "swept " << grid.cells.size() << " budget cells into " << config.output_dir
              << "\n";
    return 0;
}

int cmd_synthetic(const std::string& spec_path, const std::string& output_path) {
    io::SyntheticSpec spec;
    if (!spec_path.empty()) {
        std::ifstream in(spec_path);
        if (!in) throw config_error("cannot read " + spec_path);
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        spec = io::parse_synthetic_spec(text, spec_path);
    }
    write_file(output_path, io::synthetic_labels_csv(spec));
    std::cout << "wrote synthetic ERT labels to " << output_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GeoPAS: geometric probing for algorithm selection"};
    app.require_subcommand(1);

    std::string config_path, runs_path, ert_path, spec_path, output_path;
    std::optional<std::string> dataset_opt, labels_opt, protocol_opt, mode_opt, output_opt;
    bool force = false;

    auto* generate = app.add_subcommand("generate", "probe the suite and write a slice dataset");
    generate->add_option("--config", config_path, "run config (JSON)")->required();
    generate->add_option("--output", output_opt, "output directory override");

    auto* ingest = app.add_subcommand("ingest", "build a label table from solver performance CSV");
    auto* runs_opt = ingest->add_option("--runs", runs_path, "per-run CSV");
    auto* ert_opt = ingest->add_option("--ert", ert_path, "pre-aggregated ERT CSV");
    ingest->add_option("--output", output_path, "label table output path")->required();
    runs_opt->excludes(ert_opt);

    auto* evaluate = app.add_subcommand("evaluate", "train per-fold models and report");
    evaluate->add_option("--config", config_path, "run config (JSON)")->required();
    evaluate->add_option("--dataset", dataset_opt, "dataset directory override");
    evaluate->add_option("--labels", labels_opt, "label table override");
    evaluate->add_option("--protocol", protocol_opt, "lio|random|lpo");
    evaluate->add_option("--mode", mode_opt, "full|no-prior|no-catastrophe|regression-only");
    evaluate->add_option("--output", output_opt, "output directory override");
    evaluate->add_flag("--force", force, "ignore dataset/config hash mismatches");

    auto* sweep = app.add_subcommand("sweep", "evaluate over a (slices x resolution) budget grid");
    sweep->add_option("--config", config_path, "run config (JSON)")->required();
    sweep->add_option("--labels", labels_opt, "label table override");
    sweep->add_option("--output", output_opt, "output directory override");

    auto* synthetic = app.add_subcommand("synthetic-labels", "emit the two-family synthetic ERT CSV");
    synthetic->add_option("--spec", spec_path, "synthetic spec (JSON); defaults when omitted");
    synthetic->add_option("--output", output_path, "CSV output path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) return cmd_generate(config_path, output_opt);
        if (ingest->parsed()) {
            if (runs_path.empty() && ert_path.empty())
                throw config_error("ingest needs --runs or --ert");
            return cmd_ingest(runs_path, ert_path, output_path);
        }
        if (evaluate->parsed())
            return cmd_evaluate(config_path, dataset_opt, labels_opt, protocol_opt, mode_opt,
                                output_opt, force);
        if (sweep->parsed()) return cmd_sweep(config_path, labels_opt, output_opt);
        if (synthetic->parsed()) return cmd_synthetic(spec_path, output_path);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const input_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
