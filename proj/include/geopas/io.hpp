#ifndef GEOPAS_IO_HPP
#define GEOPAS_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "geopas/evaluation.hpp"
#include "geopas/labels.hpp"
#include "geopas/model.hpp"

namespace geopas::io {

struct SuiteSpec {
    std::vector<int> functions;
    std::vector<int> dimensions;
    std::vector<int> instances;
    std::vector<int> repetitions;

    std::vector<eval::DatapointKey> expand() const;
};

struct ProbingSpec {
    int slices = 32;
    int resolution = 8;
    std::uint64_t seed = 1;
};

// One config file drives every subcommand; flags override single fields.
// Environment variables are never consulted.
struct RunConfig {
    SuiteSpec suite;
    ProbingSpec probing;
    model::ModelConfig model;
    model::TrainConfig train;
    std::string selection_mode = "full";
    std::string protocol = "random";
    std::string labels_path;
    std::string dataset_dir;
    std::string output_dir = ".";
    int jobs = 2;
    std::uint64_t eval_seed = 1;
    std::vector<int> sweep_slice_counts;
    std::vector<int> sweep_resolutions;
};

RunConfig parse_run_config(const std::string& text, const std::string& origin);
RunConfig load_run_config(const std::string& path);

// content hash over the suite + probing sections; datasets and evaluations
// must agree on it unless --force is given
std::uint64_t dataset_config_hash(const RunConfig& config);

selector::Mode selection_mode_from_name(const std::string& name);

struct GenerateResult {
    std::vector<std::string> files;  // sorted, relative to the output dir
    std::uint64_t total_evaluations = 0;
    std::uint64_t evaluations_per_datapoint = 0;
    double wall_seconds = 0.0;
};

// writes one .slc file per (f, d, i, rep) plus manifest.json
GenerateResult generate_dataset(const RunConfig& config, const std::string& out_dir);

struct LoadedDataset {
    eval::Dataset dataset;
    std::uint64_t config_hash = 0;
    int slices = 0;
    int resolution = 0;
};

LoadedDataset load_dataset(const std::string& dir);

// throws config_error on a dataset/config hash mismatch unless forced
void check_dataset_hash(const LoadedDataset& loaded, const RunConfig& config, bool force);

// --- synthetic label generator -------------------------------------------------

// Two solver archetypes over two function families: the first solver wins on
// family A, the second on family B, at a fixed ERT ratio.  Cap failures for
// the first solver can be injected on named rows or at a random entry rate.
struct SyntheticSpec {
    std::vector<int> functions_a = {1, 2, 10, 11};
    std::vector<int> functions_b = {3, 15, 16, 23};
    std::vector<int> dimensions = {2, 3};
    double base_ert = 1000.0;
    double penalty_ratio = 10.0;    // off-family ERT multiplier (both directions)
    double penalty_ratio_a = 0.0;   // override: second solver's multiplier on family A
    double penalty_ratio_b = 0.0;   // override: first solver's multiplier on family B
    std::string solver_a = "local_refiner";
    std::string solver_b = "global_explorer";
    std::vector<std::pair<int, int>> cap_rows;  // (function, dimension) rows failing for solver_a
    double cap_rate = 0.0;                      // random per-entry injection
    std::uint64_t seed = 1;

    double ratio_a() const { return penalty_ratio_a > 0.0 ? penalty_ratio_a : penalty_ratio; }
    double ratio_b() const { return penalty_ratio_b > 0.0 ? penalty_ratio_b : penalty_ratio; }
};

SyntheticSpec parse_synthetic_spec(const std::string& text, const std::string& origin);
std::string synthetic_labels_csv(const SyntheticSpec& spec);

}  // namespace geopas::io

#endif
