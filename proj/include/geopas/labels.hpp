#ifndef GEOPAS_LABELS_HPP
#define GEOPAS_LABELS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace geopas::labels {

// one solver run pooled into ERT: evaluations spent and whether the
// 1e-2 target precision was reached
struct RunRecord {
    int function_id = 0;
    int dimension = 0;
    int instance_id = 0;
    std::string algorithm;
    std::uint64_t evaluations = 0;
    bool success = false;
};

// ERT-or-undefined per algorithm before imputation
using ErtValue = std::optional<double>;

struct LabelRow {
    int function_id = 0;
    int dimension = 0;
    std::vector<double> relert;     // capped values, min over finite = 1
    std::vector<bool> capped;       // true where PAR10-imputed
    int vbs = 0;                    // index of the per-row oracle
};

struct LabelTable {
    std::vector<std::string> algorithms;
    std::vector<LabelRow> rows;
    double cap = 0.0;
    std::vector<std::string> warnings;  // e.g. all-undefined algorithm columns

    int portfolio_size() const { return static_cast<int>(algorithms.size()); }
    const LabelRow* find(int function_id, int dimension) const;
};

struct TailPrior {
    std::vector<double> cap_rate;         // p_cap per algorithm
    std::vector<double> exceedance_rate;  // p_0.9 per algorithm
    std::vector<double> rho;              // 3 * p_cap + 3 * p_0.9
    double sbs_q90 = 0.0;
};

inline constexpr double kLambdaCap = 3.0;
inline constexpr double kLambdaP90 = 3.0;

// Eq. 1: total evaluations over pooled runs divided by successful runs;
// nullopt when no run succeeded.
ErtValue compute_ert(const std::vector<RunRecord>& runs);

// Eq. 2: divide by the best finite ERT; undefined entries propagate
std::vector<ErtValue> compute_relert(const std::vector<ErtValue>& ert_row);

// PAR10: cap = 10 x largest finite relERT over the whole table; idempotent
struct ImputeResult {
    std::vector<std::vector<double>> table;
    std::vector<std::vector<bool>> capped;
    double cap = 0.0;
};
ImputeResult impute_par10(const std::vector<std::vector<ErtValue>>& rows);

// reapplication on an already-capped table: the flags keep imputed entries
// out of the cap computation, so the result is identical (idempotence)
ImputeResult impute_par10(const ImputeResult& capped);

// c_a = 1 exactly where the entry equals the cap
std::vector<std::vector<bool>> catastrophe_labels(const std::vector<std::vector<double>>& table,
                                                  double cap);

enum class SbsAggregate { mean, median };

// argmin of aggregate capped relERT over the given rows, ties to the lowest
// algorithm index; also returns the SBS column's 90th percentile
std::pair<int, double> identify_sbs(const std::vector<const LabelRow*>& rows,
                                    SbsAggregate aggregate = SbsAggregate::mean);

// static per-algorithm prior from the training rows only
TailPrior tail_prior(const std::vector<const LabelRow*>& rows, double sbs_q90);

// assemble rows of (f, d) relERT values into a capped LabelTable
LabelTable build_label_table(const std::vector<std::string>& algorithms,
                             const std::vector<std::tuple<int, int, std::vector<ErtValue>>>& ert_rows);

// --- CSV ingestion -----------------------------------------------------------

// runs format: function_id,dimension,instance_id,algorithm,evaluations,success
LabelTable ingest_runs_csv(const std::string& path);
LabelTable ingest_runs_csv_text(const std::string& text, const std::string& origin);

// pre-aggregated format: function_id,dimension,algorithm,ert,finite_flag
LabelTable ingest_ert_csv(const std::string& path);
LabelTable ingest_ert_csv_text(const std::string& text, const std::string& origin);

// label table JSON round trip (file format written by the ingest command)
void save_label_table(const LabelTable& table, const std::string& path,
                      std::uint64_t source_hash = 0);
LabelTable load_label_table(const std::string& path, std::uint64_t* source_hash = nullptr);

}  // namespace geopas::labels

#endif
