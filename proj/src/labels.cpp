#include "geopas/labels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>
#include <utility>

#include <json.hpp>

#include "geopas/common.hpp"

namespace geopas::labels {

using nlohmann::json;

const LabelRow* LabelTable::find(int function_id, int dimension) const {
    for (const auto& row : rows)
        if (row.function_id == function_id && row.dimension == dimension) return &row;
    return nullptr;
}

ErtValue compute_ert(const std::vector<RunRecord>& runs) {
    if (runs.empty()) throw input_error("compute_ert: empty run list");
    double evaluations = 0.0;
    double successes = 0.0;
    for (const auto& run : runs) {
        evaluations += static_cast<double>(run.evaluations);
        successes += run.success ? 1.0 : 0.0;
    }
    if (successes == 0.0) return std::nullopt;
    return evaluations / successes;
}

std::vector<ErtValue> compute_relert(const std::vector<ErtValue>& ert_row) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : ert_row)
        if (e.has_value()) best = std::min(best, *e);
    if (!std::isfinite(best)) throw data_error("relERT: row has no finite ERT");
    std::vector<ErtValue> out(ert_row.size());
    for (std::size_t a = 0; a < ert_row.size(); ++a)
        if (ert_row[a].has_value()) out[a] = *ert_row[a] / best;
    return out;
}

ImputeResult impute_par10(const std::vector<std::vector<ErtValue>>& rows) {
    ImputeResult res;
    double max_finite = -std::numeric_limits<double>::infinity();
    for (const auto& row : rows)
        for (const auto& v : row)
            if (v.has_value()) max_finite = std::max(max_finite, *v);
    if (!std::isfinite(max_finite)) throw data_error("PAR10: table has no finite relERT");
    res.cap = 10.0 * max_finite;
    res.table.reserve(rows.size());
    res.capped.reserve(rows.size());
    for (const auto& row : rows) {
        std::vector<double> values(row.size());
        std::vector<bool> flags(row.size());
        for (std::size_t a = 0; a < row.size(); ++a) {
            if (row[a].has_value()) {
                values[a] = *row[a];
                flags[a] = false;
            } else {
                values[a] = res.cap;
                flags[a] = true;
            }
        }
        res.table.push_back(std::move(values));
        res.capped.push_back(std::move(flags));
    }
    return res;
}

ImputeResult impute_par10(const ImputeResult& capped) {
    std::vector<std::vector<ErtValue>> rows(capped.table.size());
    for (std::size_t r = 0; r < capped.table.size(); ++r) {
        rows[r].resize(capped.table[r].size());
        for (std::size_t a = 0; a < capped.table[r].size(); ++a)
            if (!capped.capped[r][a]) rows[r][a] = capped.table[r][a];
    }
    return impute_par10(rows);
}

std::vector<std::vector<bool>> catastrophe_labels(const std::vector<std::vector<double>>& table,
                                                  double cap) {
    std::vector<std::vector<bool>> out;
    out.reserve(table.size());
    for (const auto& row : table) {
        std::vector<bool> flags(row.size());
        for (std::size_t a = 0; a < row.size(); ++a) flags[a] = row[a] == cap;
        out.push_back(std::move(flags));
    }
    return out;
}

std::pair<int, double> identify_sbs(const std::vector<const LabelRow*>& rows,
                                    SbsAggregate aggregate) {
    if (rows.empty()) throw input_error("identify_sbs: empty training rows");
    const auto width = rows[0]->relert.size();
    int best = 0;
    double best_stat = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < width; ++a) {
        std::vector<double> column;
        column.reserve(rows.size());
        for (const auto* row : rows) column.push_back(row->relert[a]);
        const double stat = aggregate == SbsAggregate::mean ? mean_of(column)
                                                            : quantile_linear(column, 0.5);
        if (stat < best_stat) {
            best_stat = stat;
            best = static_cast<int>(a);
        }
    }
    std::vector<double> sbs_column;
    sbs_column.reserve(rows.size());
    for (const auto* row : rows) sbs_column.push_back(row->relert[static_cast<std::size_t>(best)]);
    return {best, quantile_linear(sbs_column, 0.9)};
}

TailPrior tail_prior(const std::vector<const LabelRow*>& rows, double sbs_q90) {
    if (rows.empty()) throw input_error("tail_prior: empty training rows");
    const auto width = rows[0]->relert.size();
    TailPrior prior;
    prior.sbs_q90 = sbs_q90;
    prior.cap_rate.assign(width, 0.0);
    prior.exceedance_rate.assign(width, 0.0);
    prior.rho.assign(width, 0.0);
    const double n = static_cast<double>(rows.size());
    for (std::size_t a = 0; a < width; ++a) {
        double caps = 0.0, exceeds = 0.0;
        for (const auto* row : rows) {
            if (row->capped[a]) caps += 1.0;
            if (row->relert[a] > sbs_q90) exceeds += 1.0;  // strict exceedance
        }
        prior.cap_rate[a] = caps / n;
        prior.exceedance_rate[a] = exceeds / n;
        prior.rho[a] = kLambdaCap * prior.cap_rate[a] + kLambdaP90 * prior.exceedance_rate[a];
    }
    return prior;
}

LabelTable build_label_table(
    const std::vector<std::string>& algorithms,
    const std::vector<std::tuple<int, int, std::vector<ErtValue>>>& ert_rows) {
    LabelTable table;
    table.algorithms = algorithms;

    std::vector<std::vector<ErtValue>> relert_rows;
    relert_rows.reserve(ert_rows.size());
    for (const auto& [f, d, row] : ert_rows) relert_rows.push_back(compute_relert(row));

    const ImputeResult imputed = impute_par10(relert_rows);
    table.cap = imputed.cap;

    // column diagnostics
    for (std::size_t a = 0; a < algorithms.size(); ++a) {
        bool any_finite = false;
        for (const auto& row : relert_rows)
            if (row[a].has_value()) any_finite = true;
        if (!any_finite)
            table.warnings.push_back("algorithm '" + algorithms[a] +
                                     "' has no successful run anywhere (all entries cap-imputed)");
    }

    for (std::size_t r = 0; r < ert_rows.size(); ++r) {
        LabelRow row;
        row.function_id = std::get<0>(ert_rows[r]);
        row.dimension = std::get<1>(ert_rows[r]);
        row.relert = imputed.table[r];
        row.capped = imputed.capped[r];
        row.vbs = static_cast<int>(
            std::min_element(row.relert.begin(), row.relert.end()) - row.relert.begin());
        table.rows.push_back(std::move(row));
    }
    return table;
}

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        // trim surrounding whitespace
        const auto begin = field.find_first_not_of(" \t\r");
        const auto end = field.find_last_not_of(" \t\r");
        fields.push_back(begin == std::string::npos ? "" : field.substr(begin, end - begin + 1));
    }
    return fields;
}

long parse_long(const std::string& s, const std::string& origin, std::size_t line_no,
                const char* what) {
    try {
        std::size_t used = 0;
        const long v = std::stol(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw data_error(origin + ":" + std::to_string(line_no) + ": bad " + what + " '" + s +
                         "'");
    }
}

double parse_double(const std::string& s, const std::string& origin, std::size_t line_no,
                    const char* what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw data_error(origin + ":" + std::to_string(line_no) + ": bad " + what + " '" + s +
                         "'");
    }
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

LabelTable assemble_from_ert_map(
    const std::vector<std::string>& algorithms,
    const std::map<std::pair<int, int>, std::vector<ErtValue>>& row_map) {
    std::vector<std::tuple<int, int, std::vector<ErtValue>>> rows;
    rows.reserve(row_map.size());
    for (const auto& [key, values] : row_map) rows.emplace_back(key.first, key.second, values);
    return build_label_table(algorithms, rows);
}

}  // namespace

LabelTable ingest_runs_csv_text(const std::string& text, const std::string& origin) {
    std::stringstream stream(text);
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(stream, line)) throw data_error(origin + ": empty file");
    ++line_no;
    const auto header = split_csv_line(line);
    const std::vector<std::string> expected = {"function_id", "dimension",   "instance_id",
                                               "algorithm",   "evaluations", "success"};
    if (header != expected)
        throw data_error(origin + ":1: expected header 'function_id,dimension,instance_id,"
                                  "algorithm,evaluations,success'");

    std::vector<std::string> algorithms;
    auto algo_index = [&algorithms](const std::string& name) {
        for (std::size_t i = 0; i < algorithms.size(); ++i)
            if (algorithms[i] == name) return i;
        algorithms.push_back(name);
        return algorithms.size() - 1;
    };

    // (f, d, a) -> pooled runs over instances
    std::map<std::tuple<int, int, std::size_t>, std::vector<RunRecord>> groups;
    while (std::getline(stream, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 6)
            throw data_error(origin + ":" + std::to_string(line_no) + ": expected 6 fields, got " +
                             std::to_string(fields.size()));
        RunRecord run;
        run.function_id = static_cast<int>(parse_long(fields[0], origin, line_no, "function_id"));
        run.dimension = static_cast<int>(parse_long(fields[1], origin, line_no, "dimension"));
        run.instance_id = static_cast<int>(parse_long(fields[2], origin, line_no, "instance_id"));
        run.algorithm = fields[3];
        const long evals = parse_long(fields[4], origin, line_no, "evaluations");
        if (evals < 1)
            throw data_error(origin + ":" + std::to_string(line_no) + ": evaluations must be >= 1");
        run.evaluations = static_cast<std::uint64_t>(evals);
        const long succ = parse_long(fields[5], origin, line_no, "success");
        if (succ != 0 && succ != 1)
            throw data_error(origin + ":" + std::to_string(line_no) + ": success must be 0 or 1");
        run.success = succ == 1;
        groups[{run.function_id, run.dimension, algo_index(run.algorithm)}].push_back(run);
    }
    if (groups.empty()) throw data_error(origin + ": no data rows");

    std::map<std::pair<int, int>, std::vector<ErtValue>> row_map;
    for (const auto& [key, runs] : groups) {
        const auto [f, d, a] = key;
        auto& row = row_map[{f, d}];
        row.resize(algorithms.size());
        row[a] = compute_ert(runs);
    }
    for (auto& [key, row] : row_map) row.resize(algorithms.size());
    return assemble_from_ert_map(algorithms, row_map);
}

LabelTable ingest_runs_csv(const std::string& path) {
    return ingest_runs_csv_text(read_text_file(path), path);
}

LabelTable ingest_ert_csv_text(const std::string& text, const std::string& origin) {
    std::stringstream stream(text);
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(stream, line)) throw data_error(origin + ": empty file");
    ++line_no;
    const auto header = split_csv_line(line);
    const std::vector<std::string> expected = {"function_id", "dimension", "algorithm", "ert",
                                               "finite_flag"};
    if (header != expected)
        throw data_error(origin +
                         ":1: expected header 'function_id,dimension,algorithm,ert,finite_flag'");

    std::vector<std::string> algorithms;
    auto algo_index = [&algorithms](const std::string& name) {
        for (std::size_t i = 0; i < algorithms.size(); ++i)
            if (algorithms[i] == name) return i;
        algorithms.push_back(name);
        return algorithms.size() - 1;
    };

    std::map<std::pair<int, int>, std::vector<ErtValue>> row_map;
    while (std::getline(stream, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 5)
            throw data_error(origin + ":" + std::to_string(line_no) + ": expected 5 fields, got " +
                             std::to_string(fields.size()));
        const int f = static_cast<int>(parse_long(fields[0], origin, line_no, "function_id"));
        const int d = static_cast<int>(parse_long(fields[1], origin, line_no, "dimension"));
        const std::size_t a = algo_index(fields[2]);
        const long finite = parse_long(fields[4], origin, line_no, "finite_flag");
        if (finite != 0 && finite != 1)
            throw data_error(origin + ":" + std::to_string(line_no) + ": finite_flag must be 0 or 1");
        auto& row = row_map[{f, d}];
        if (row.size() < algorithms.size()) row.resize(algorithms.size());
        if (finite == 1) {
            const double ert = parse_double(fields[3], origin, line_no, "ert");
            if (!(ert > 0.0))
                throw data_error(origin + ":" + std::to_string(line_no) + ": ert must be positive");
            row[a] = ert;
        }
    }
    if (row_map.empty()) throw data_error(origin + ": no data rows");
    for (auto& [key, row] : row_map) row.resize(algorithms.size());
    return assemble_from_ert_map(algorithms, row_map);
}

LabelTable ingest_ert_csv(const std::string& path) {
    return ingest_ert_csv_text(read_text_file(path), path);
}

// ---------------------------------------------------------------------------
// label table JSON file
// ---------------------------------------------------------------------------

void save_label_table(const LabelTable& table, const std::string& path,
                      std::uint64_t source_hash) {
    json doc;
    doc["format"] = "geopas-labels";
    doc["version"] = 1;
    doc["source_hash"] = source_hash;
    doc["algorithms"] = table.algorithms;
    doc["cap"] = table.cap;
    doc["warnings"] = table.warnings;
    json rows = json::array();
    for (const auto& row : table.rows) {
        json jrow;
        jrow["function_id"] = row.function_id;
        jrow["dimension"] = row.dimension;
        jrow["relert"] = row.relert;
        jrow["capped"] = row.capped;
        jrow["vbs"] = row.vbs;
        rows.push_back(std::move(jrow));
    }
    doc["rows"] = std::move(rows);
    std::ofstream out(path);
    if (!out) throw data_error("cannot write " + path);
    out << doc.dump(2) << "\n";
}

LabelTable load_label_table(const std::string& path, std::uint64_t* source_hash) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot read " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw data_error(path + ": " + e.what());
    }
    if (doc.value("format", "") != "geopas-labels")
        throw data_error(path + ": not a geopas label table");
    LabelTable table;
    table.algorithms = doc.at("algorithms").get<std::vector<std::string>>();
    table.cap = doc.at("cap").get<double>();
    if (doc.contains("warnings"))
        table.warnings = doc.at("warnings").get<std::vector<std::string>>();
    for (const auto& jrow : doc.at("rows")) {
        LabelRow row;
        row.function_id = jrow.at("function_id").get<int>();
        row.dimension = jrow.at("dimension").get<int>();
        row.relert = jrow.at("relert").get<std::vector<double>>();
        row.capped = jrow.at("capped").get<std::vector<bool>>();
        row.vbs = jrow.at("vbs").get<int>();
        table.rows.push_back(std::move(row));
    }
    if (source_hash != nullptr) *source_hash = doc.value("source_hash", 0ULL);
    return table;
}

}  // namespace geopas::labels
