#ifndef GEOPAS_EVALUATION_HPP
#define GEOPAS_EVALUATION_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "geopas/labels.hpp"
#include "geopas/model.hpp"
#include "geopas/probing.hpp"
#include "geopas/selector.hpp"

namespace geopas::eval {

enum class Protocol { leave_instance_out, grouped_random, leave_problem_out };

const char* protocol_name(Protocol p);
Protocol protocol_from_name(const std::string& name);

struct DatapointKey {
    int function_id = 0;
    int dimension = 0;
    int instance_id = 0;
    int repetition = 0;

    bool operator==(const DatapointKey&) const = default;
};

// one probe-stream seed per datapoint, shared by the generator and the sweep
std::uint64_t datapoint_probe_seed(std::uint64_t base, const DatapointKey& key);

struct SplitPlan {
    Protocol protocol;
    struct Fold {
        std::vector<std::size_t> train;
        std::vector<std::size_t> test;
    };
    std::vector<Fold> folds;
};

// LIO: fold j holds out the j-th instance (by sorted instance rank) of every
// (f, d).  Random: 5-fold seeded partition of whole (f, d, i) groups, so
// slice-sampling repetitions never straddle a fold boundary.  LPO: one fold
// per function id, testing that function across all dimensions.
SplitPlan make_split(Protocol protocol, const std::vector<DatapointKey>& index,
                     std::uint64_t fold_seed);

struct Statistics {
    double mean = 0.0;
    double median = 0.0;
    double p90 = 0.0;
};

Statistics statistics(const std::vector<double>& relert_values);

// fraction of the VBS-SBS gap closed; 0 by convention when sbs == 1
double gap_closure(double sbs_stat, double as_stat);

struct QuadrantCounts {
    std::size_t neither = 0;
    std::size_t sbs_only = 0;
    std::size_t both = 0;
    std::size_t as_only = 0;
};

// strict exceedance on both sides
QuadrantCounts tail_quadrants(const std::vector<double>& as_values,
                              const std::vector<double>& sbs_values, double threshold);

struct EvalRecord {
    DatapointKey key;
    int fold = 0;
    int chosen = 0;
    int vbs = 0;
    double as_relert = 0.0;
    double sbs_relert = 0.0;
};

struct SummaryCell {
    std::string group;      // "f1-f5" .. "f20-f24" or "all"
    std::string dimension;  // "2", "3", ... or "all"
    std::size_t count = 0;
    Statistics sbs;
    Statistics selector;
    double closure_mean = 0.0;
    double closure_median = 0.0;
    double closure_p90 = 0.0;
};

struct Report {
    std::string protocol;
    std::vector<std::string> algorithms;
    double cap = 0.0;
    std::uint64_t seed = 0;
    std::vector<EvalRecord> records;
    std::vector<SummaryCell> cells;
    double selection_accuracy = 0.0;  // fraction of records choosing the VBS
    double sbs_q90_threshold = 0.0;   // pooled SBS p90 used for the quadrant table
    QuadrantCounts quadrants_q90;
    QuadrantCounts quadrants_1000;
    std::vector<double> pick_frequency;  // per algorithm, selector
    std::vector<double> vbs_frequency;   // per algorithm, oracle
    std::vector<int> fold_sbs;           // per-fold SBS algorithm index
};

struct Dataset {
    std::vector<probing::SliceSet> slice_sets;
    std::vector<DatapointKey> index;  // parallel to slice_sets
};

struct RunOptions {
    model::ModelConfig model;
    model::TrainConfig train;
    selector::Mode mode = selector::Mode::full;
    labels::SbsAggregate sbs_aggregate = labels::SbsAggregate::mean;
    std::uint64_t seed = 1;
    int jobs = 2;                // folds run as independent parallel jobs
    std::string model_save_dir;  // when set, per-fold checkpoints land here
};

Report run_protocol(const Dataset& dataset, const labels::LabelTable& table, Protocol protocol,
                    const RunOptions& options);

// one training pass per fold, scored under several selection rules; selection
// is inference-time only, so the reports share identical fold models
std::vector<Report> run_protocol_modes(const Dataset& dataset, const labels::LabelTable& table,
                                       Protocol protocol, const RunOptions& options,
                                       const std::vector<selector::Mode>& modes);

// recompute the summary cells, accuracy, frequencies and quadrant tables
// from the raw records (used both to build reports and to audit them)
void summarize(Report& report);

struct SweepCell {
    int slice_count = 0;
    int resolution = 0;
    Statistics stats;
    std::uint64_t evaluations_per_datapoint = 0;
    double probe_seconds_per_set = 0.0;
};

struct SweepGrid {
    std::vector<SweepCell> cells;  // row-major over (slice_counts x resolutions)
    std::vector<int> slice_counts;
    std::vector<int> resolutions;
};

// regenerates probe sets per (k, r) cell and runs the protocol in each
SweepGrid budget_sweep(const std::vector<DatapointKey>& index, const labels::LabelTable& table,
                       Protocol protocol, const RunOptions& options,
                       const std::vector<int>& slice_counts, const std::vector<int>& resolutions,
                       std::uint64_t probe_seed);

// report (de)serialization
std::string report_to_json(const Report& report);
Report report_from_json(const std::string& text);
std::string report_to_csv(const Report& report);  // Table-1-style summary layout

}  // namespace geopas::eval

#endif
