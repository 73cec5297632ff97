#include "geopas/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "geopas/bbob.hpp"
#include "geopas/common.hpp"

namespace geopas::eval {

using nlohmann::json;

const char* protocol_name(Protocol p) {
    switch (p) {
        case Protocol::leave_instance_out: return "lio";
        case Protocol::grouped_random: return "random";
        case Protocol::leave_problem_out: return "lpo";
    }
    return "unknown";
}

Protocol protocol_from_name(const std::string& name) {
    if (name == "lio") return Protocol::leave_instance_out;
    if (name == "random") return Protocol::grouped_random;
    if (name == "lpo") return Protocol::leave_problem_out;
    throw config_error("unknown protocol '" + name + "' (expected lio|random|lpo)");
}

std::uint64_t datapoint_probe_seed(std::uint64_t base, const DatapointKey& key) {
    return derive_seed(base, static_cast<std::uint64_t>(key.function_id),
                       static_cast<std::uint64_t>(key.dimension) * 1000ULL +
                           static_cast<std::uint64_t>(key.instance_id),
                       static_cast<std::uint64_t>(key.repetition));
}

SplitPlan make_split(Protocol protocol, const std::vector<DatapointKey>& index,
                     std::uint64_t fold_seed) {
    if (index.empty()) throw input_error("make_split: empty dataset index");
    SplitPlan plan;
    plan.protocol = protocol;

    switch (protocol) {
        case Protocol::leave_instance_out: {
            // rank instances within each (f, d); fold j tests rank j everywhere
            std::map<std::pair<int, int>, std::vector<int>> instance_sets;
            for (const auto& key : index)
                instance_sets[{key.function_id, key.dimension}].push_back(key.instance_id);
            std::size_t fold_count = 0;
            for (auto& [problem, instances] : instance_sets) {
                std::sort(instances.begin(), instances.end());
                instances.erase(std::unique(instances.begin(), instances.end()), instances.end());
                fold_count = std::max(fold_count, instances.size());
            }
            plan.folds.resize(fold_count);
            for (std::size_t i = 0; i < index.size(); ++i) {
                const auto& key = index[i];
                const auto& instances = instance_sets[{key.function_id, key.dimension}];
                const auto rank = static_cast<std::size_t>(
                    std::find(instances.begin(), instances.end(), key.instance_id) -
                    instances.begin());
                for (std::size_t fold = 0; fold < fold_count; ++fold) {
                    if (rank == fold)
                        plan.folds[fold].test.push_back(i);
                    else
                        plan.folds[fold].train.push_back(i);
                }
            }
            break;
        }
        case Protocol::grouped_random: {
            // shuffle whole (f, d, i) groups, deal them round-robin into 5 folds
            std::map<std::tuple<int, int, int>, std::vector<std::size_t>> groups;
            for (std::size_t i = 0; i < index.size(); ++i)
                groups[{index[i].function_id, index[i].dimension, index[i].instance_id}].push_back(
                    i);
            std::vector<std::vector<std::size_t>> group_list;
            group_list.reserve(groups.size());
            for (auto& [key, members] : groups) group_list.push_back(members);

            Rng rng(fold_seed);
            for (std::size_t i = group_list.size(); i > 1; --i) {
                const auto j = static_cast<std::size_t>(rng.next_u64() % i);
                std::swap(group_list[i - 1], group_list[j]);
            }
            const std::size_t fold_count = std::min<std::size_t>(5, group_list.size());
            plan.folds.resize(fold_count);
            for (std::size_t g = 0; g < group_list.size(); ++g)
                for (std::size_t idx : group_list[g])
                    plan.folds[g % fold_count].test.push_back(idx);
            for (std::size_t fold = 0; fold < fold_count; ++fold) {
                std::set<std::size_t> test_set(plan.folds[fold].test.begin(),
                                               plan.folds[fold].test.end());
                for (std::size_t i = 0; i < index.size(); ++i)
                    if (!test_set.count(i)) plan.folds[fold].train.push_back(i);
                std::sort(plan.folds[fold].test.begin(), plan.folds[fold].test.end());
            }
            break;
        }
        case Protocol::leave_problem_out: {
            std::set<int> functions;
            for (const auto& key : index) functions.insert(key.function_id);
            for (int f : functions) {
                SplitPlan::Fold fold;
                for (std::size_t i = 0; i < index.size(); ++i) {
                    if (index[i].function_id == f)
                        fold.test.push_back(i);
                    else
                        fold.train.push_back(i);
                }
                plan.folds.push_back(std::move(fold));
            }
            break;
        }
    }
    return plan;
}

Statistics statistics(const std::vector<double>& relert_values) {
    if (relert_values.empty()) throw input_error("statistics: empty value list");
    Statistics s;
    s.mean = mean_of(relert_values);
    s.median = quantile_linear(relert_values, 0.5);
    s.p90 = quantile_linear(relert_values, 0.9);
    return s;
}

double gap_closure(double sbs_stat, double as_stat) {
    if (sbs_stat == 1.0) return 0.0;  // degenerate denominator
    return (sbs_stat - as_stat) / (sbs_stat - 1.0);
}

QuadrantCounts tail_quadrants(const std::vector<double>& as_values,
                              const std::vector<double>& sbs_values, double threshold) {
    if (as_values.size() != sbs_values.size())
        throw input_error("tail_quadrants: length mismatch");
    QuadrantCounts counts;
    for (std::size_t i = 0; i < as_values.size(); ++i) {
        const bool as_tail = as_values[i] > threshold;
        const bool sbs_tail = sbs_values[i] > threshold;
        if (as_tail && sbs_tail)
            ++counts.both;
        else if (as_tail)
            ++counts.as_only;
        else if (sbs_tail)
            ++counts.sbs_only;
        else
            ++counts.neither;
    }
    return counts;
}

namespace {

std::string dim_label(int dimension) { return std::to_string(dimension); }

SummaryCell make_cell(const std::string& group, const std::string& dim,
                      const std::vector<double>& as_vals, const std::vector<double>& sbs_vals) {
    SummaryCell cell;
    cell.group = group;
    cell.dimension = dim;
    cell.count = as_vals.size();
    cell.selector = statistics(as_vals);
    cell.sbs = statistics(sbs_vals);
    cell.closure_mean = gap_closure(cell.sbs.mean, cell.selector.mean);
    cell.closure_median = gap_closure(cell.sbs.median, cell.selector.median);
    cell.closure_p90 = gap_closure(cell.sbs.p90, cell.selector.p90);
    return cell;
}

}  // namespace

void summarize(Report& report) {
    report.cells.clear();
    if (report.records.empty()) throw input_error("summarize: no records");

    std::set<int> dims;
    for (const auto& rec : report.records) dims.insert(rec.key.dimension);

    auto collect = [&report](int group, int dim, std::vector<double>& as_vals,
                             std::vector<double>& sbs_vals) {
        for (const auto& rec : report.records) {
            if (group >= 0 && bbob::function_group(rec.key.function_id) != group) continue;
            if (dim > 0 && rec.key.dimension != dim) continue;
            as_vals.push_back(rec.as_relert);
            sbs_vals.push_back(rec.sbs_relert);
        }
    };

    for (int group = 0; group < bbob::kGroupCount; ++group) {
        bool group_present = false;
        for (const auto& rec : report.records)
            if (bbob::function_group(rec.key.function_id) == group) group_present = true;
        if (!group_present) continue;
        for (int dim : dims) {
            std::vector<double> as_vals, sbs_vals;
            collect(group, dim, as_vals, sbs_vals);
            if (!as_vals.empty())
                report.cells.push_back(
                    make_cell(bbob::group_label(group), dim_label(dim), as_vals, sbs_vals));
        }
        std::vector<double> as_vals, sbs_vals;
        collect(group, -1, as_vals, sbs_vals);
        report.cells.push_back(make_cell(bbob::group_label(group), "all", as_vals, sbs_vals));
    }
    for (int dim : dims) {
        std::vector<double> as_vals, sbs_vals;
        collect(-1, dim, as_vals, sbs_vals);
        report.cells.push_back(make_cell("all", dim_label(dim), as_vals, sbs_vals));
    }
    std::vector<double> all_as, all_sbs;
    collect(-1, -1, all_as, all_sbs);
    report.cells.push_back(make_cell("all", "all", all_as, all_sbs));

    std::size_t hits = 0;
    for (const auto& rec : report.records)
        if (rec.chosen == rec.vbs) ++hits;
    report.selection_accuracy = static_cast<double>(hits) / static_cast<double>(report.records.size());

    report.sbs_q90_threshold = quantile_linear(all_sbs, 0.9);
    report.quadrants_q90 = tail_quadrants(all_as, all_sbs, report.sbs_q90_threshold);
    report.quadrants_1000 = tail_quadrants(all_as, all_sbs, 1000.0);

    const auto width = report.algorithms.size();
    report.pick_frequency.assign(width, 0.0);
    report.vbs_frequency.assign(width, 0.0);
    const double inv = 1.0 / static_cast<double>(report.records.size());
    for (const auto& rec : report.records) {
        report.pick_frequency[static_cast<std::size_t>(rec.chosen)] += inv;
        report.vbs_frequency[static_cast<std::size_t>(rec.vbs)] += inv;
    }
}

Report run_protocol(const Dataset& dataset, const labels::LabelTable& table, Protocol protocol,
                    const RunOptions& options) {
    return run_protocol_modes(dataset, table, protocol, options, {options.mode})[0];
}

std::vector<Report> run_protocol_modes(const Dataset& dataset, const labels::LabelTable& table,
                                       Protocol protocol, const RunOptions& options,
                                       const std::vector<selector::Mode>& modes) {
    if (dataset.slice_sets.size() != dataset.index.size() || dataset.index.empty())
        throw input_error("run_protocol: dataset is empty or inconsistent");
    if (modes.empty()) throw input_error("run_protocol: no selection modes");

    // every datapoint needs a label row
    std::vector<const labels::LabelRow*> row_of(dataset.index.size(), nullptr);
    for (std::size_t i = 0; i < dataset.index.size(); ++i) {
        row_of[i] = table.find(dataset.index[i].function_id, dataset.index[i].dimension);
        if (row_of[i] == nullptr)
            throw data_error("run_protocol: no label row for f" +
                             std::to_string(dataset.index[i].function_id) + " d" +
                             std::to_string(dataset.index[i].dimension));
    }

    const SplitPlan plan = make_split(protocol, dataset.index,
                                      derive_seed(options.seed, 0x666f6c64ULL,
                                                  static_cast<std::uint64_t>(protocol)));

    std::vector<Report> reports(modes.size());
    for (auto& report : reports) {
        report.protocol = protocol_name(protocol);
        report.algorithms = table.algorithms;
        report.cap = table.cap;
        report.seed = options.seed;
        report.fold_sbs.assign(plan.folds.size(), 0);
    }

    // fold_records[mode][fold]
    std::vector<std::vector<std::vector<EvalRecord>>> fold_records(
        modes.size(), std::vector<std::vector<EvalRecord>>(plan.folds.size()));

    auto run_fold = [&](std::size_t fold_idx) {
        const auto& fold = plan.folds[fold_idx];
        if (fold.train.empty() || fold.test.empty())
            throw data_error("run_protocol: fold " + std::to_string(fold_idx) +
                             " has an empty train or test side");

        // fold-local SBS and tail prior, strictly from the training rows
        std::vector<const labels::LabelRow*> train_rows;
        {
            std::set<std::pair<int, int>> seen;
            for (std::size_t idx : fold.train) {
                const auto key = std::make_pair(dataset.index[idx].function_id,
                                                dataset.index[idx].dimension);
                if (seen.insert(key).second) train_rows.push_back(row_of[idx]);
            }
        }
        const auto [sbs_algo, sbs_q90] = labels::identify_sbs(train_rows, options.sbs_aggregate);
        const labels::TailPrior prior = labels::tail_prior(train_rows, sbs_q90);
        for (auto& report : reports) report.fold_sbs[fold_idx] = sbs_algo;

        // train on the fold's training datapoints
        std::vector<model::Datapoint> train_set;
        train_set.reserve(fold.train.size());
        for (std::size_t idx : fold.train) {
            model::Datapoint dp;
            dp.slices = &dataset.slice_sets[idx];
            dp.log_relert.reserve(row_of[idx]->relert.size());
            for (double v : row_of[idx]->relert) dp.log_relert.push_back(std::log(v));
            dp.catastrophe.reserve(row_of[idx]->capped.size());
            for (bool c : row_of[idx]->capped) dp.catastrophe.push_back(c ? 1.0 : 0.0);
            train_set.push_back(std::move(dp));
        }

        model::TrainConfig tc = options.train;
        tc.seed = derive_seed(options.seed, static_cast<std::uint64_t>(protocol), fold_idx,
                              0x7365656eULL);
        const model::TrainResult trained = model::train(train_set, options.model, tc);
        if (!options.model_save_dir.empty())
            model::save_model(trained.params, tc.seed,
                              options.model_save_dir + "/fold_" + std::to_string(fold_idx) +
                                  ".ckpt");

        for (std::size_t idx : fold.test) {
            const model::Prediction pred =
                model::predict(trained.params, dataset.slice_sets[idx]);
            for (std::size_t m = 0; m < modes.size(); ++m) {
                const selector::SelectionResult sel = selector::select(
                    pred.regression, pred.catastrophe_logits, &prior, table.cap, modes[m]);

                EvalRecord rec;
                rec.key = dataset.index[idx];
                rec.fold = static_cast<int>(fold_idx);
                rec.chosen = sel.chosen;
                rec.vbs = row_of[idx]->vbs;
                rec.as_relert = row_of[idx]->relert[static_cast<std::size_t>(sel.chosen)];
                rec.sbs_relert = row_of[idx]->relert[static_cast<std::size_t>(sbs_algo)];
                fold_records[m][fold_idx].push_back(rec);
            }
        }
    };

    // folds are independent jobs; records are merged in fold order
    const int jobs = std::max(1, std::min<int>(options.jobs,
                                               static_cast<int>(plan.folds.size())));
    if (jobs == 1) {
        for (std::size_t f = 0; f < plan.folds.size(); ++f) run_fold(f);
    } else {
        std::vector<std::thread> workers;
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
        for (int w = 0; w < jobs; ++w) {
            workers.emplace_back([&, w]() {
                try {
                    for (std::size_t f = static_cast<std::size_t>(w); f < plan.folds.size();
                         f += static_cast<std::size_t>(jobs))
                        run_fold(f);
                } catch (...) {
                    errors[static_cast<std::size_t>(w)] = std::current_exception();
                }
            });
        }
        for (auto& t : workers) t.join();
        for (const auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    for (std::size_t m = 0; m < modes.size(); ++m) {
        for (auto& recs : fold_records[m])
            reports[m].records.insert(reports[m].records.end(), recs.begin(), recs.end());
        summarize(reports[m]);
    }
    return reports;
}

SweepGrid budget_sweep(const std::vector<DatapointKey>& index, const labels::LabelTable& table,
                       Protocol protocol, const RunOptions& options,
                       const std::vector<int>& slice_counts, const std::vector<int>& resolutions,
                       std::uint64_t probe_seed) {
    for (int r : resolutions)
        if (r % 4 != 0) throw config_error("budget_sweep: every resolution must be divisible by 4");

    SweepGrid grid;
    grid.slice_counts = slice_counts;
    grid.resolutions = resolutions;

    for (int k : slice_counts) {
        for (int r : resolutions) {
            Dataset dataset;
            dataset.index = index;
            dataset.slice_sets.reserve(index.size());
            double probe_seconds = 0.0;
            for (const auto& key : index) {
                const auto instance =
                    bbob::make_instance(key.function_id, key.dimension, key.instance_id);
                const std::uint64_t seed = datapoint_probe_seed(probe_seed, key);
                const auto t0 = std::chrono::steady_clock::now();
                auto set = probing::build_probe_set(instance, k, r, seed);
                const auto t1 = std::chrono::steady_clock::now();
                probe_seconds += std::chrono::duration<double>(t1 - t0).count();
                set.provenance.repetition = key.repetition;
                dataset.slice_sets.push_back(std::move(set));
            }

            const Report report = run_protocol(dataset, table, protocol, options);
            SweepCell cell;
            cell.slice_count = k;
            cell.resolution = r;
            cell.stats = report.cells.back().selector;  // the all/all cell
            cell.evaluations_per_datapoint =
                static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(r) *
                static_cast<std::uint64_t>(r);
            cell.probe_seconds_per_set = probe_seconds / static_cast<double>(index.size());
            grid.cells.push_back(cell);
        }
    }
    return grid;
}

// ---------------------------------------------------------------------------
// report serialization
// ---------------------------------------------------------------------------

std::string report_to_json(const Report& report) {
    json doc;
    doc["format"] = "geopas-report";
    doc["version"] = 1;
    doc["protocol"] = report.protocol;
    doc["algorithms"] = report.algorithms;
    doc["cap"] = report.cap;
    doc["seed"] = report.seed;
    doc["selection_accuracy"] = report.selection_accuracy;
    doc["sbs_q90_threshold"] = report.sbs_q90_threshold;
    doc["fold_sbs"] = report.fold_sbs;
    doc["pick_frequency"] = report.pick_frequency;
    doc["vbs_frequency"] = report.vbs_frequency;

    auto quadrants = [](const QuadrantCounts& q) {
        return json{{"neither", q.neither},
                    {"sbs_only", q.sbs_only},
                    {"both", q.both},
                    {"as_only", q.as_only}};
    };
    doc["quadrants_q90"] = quadrants(report.quadrants_q90);
    doc["quadrants_1000"] = quadrants(report.quadrants_1000);

    json records = json::array();
    for (const auto& rec : report.records) {
        records.push_back(json{{"f", rec.key.function_id},
                               {"d", rec.key.dimension},
                               {"i", rec.key.instance_id},
                               {"rep", rec.key.repetition},
                               {"fold", rec.fold},
                               {"chosen", rec.chosen},
                               {"vbs", rec.vbs},
                               {"as_relert", rec.as_relert},
                               {"sbs_relert", rec.sbs_relert}});
    }
    doc["records"] = std::move(records);

    json cells = json::array();
    for (const auto& cell : report.cells) {
        cells.push_back(json{{"group", cell.group},
                             {"dimension", cell.dimension},
                             {"count", cell.count},
                             {"sbs", {cell.sbs.mean, cell.sbs.median, cell.sbs.p90}},
                             {"selector",
                              {cell.selector.mean, cell.selector.median, cell.selector.p90}},
                             {"closure",
                              {cell.closure_mean, cell.closure_median, cell.closure_p90}}});
    }
    doc["cells"] = std::move(cells);
    return doc.dump(2) + "\n";
}

Report report_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw data_error(std::string("report parse error: ") + e.what());
    }
    if (doc.value("format", "") != "geopas-report") throw data_error("not a geopas report");

    Report report;
    report.protocol = doc.at("protocol").get<std::string>();
    report.algorithms = doc.at("algorithms").get<std::vector<std::string>>();
    report.cap = doc.at("cap").get<double>();
    report.seed = doc.at("seed").get<std::uint64_t>();
    report.fold_sbs = doc.at("fold_sbs").get<std::vector<int>>();
    for (const auto& jrec : doc.at("records")) {
        EvalRecord rec;
        rec.key.function_id = jrec.at("f").get<int>();
        rec.key.dimension = jrec.at("d").get<int>();
        rec.key.instance_id = jrec.at("i").get<int>();
        rec.key.repetition = jrec.at("rep").get<int>();
        rec.fold = jrec.at("fold").get<int>();
        rec.chosen = jrec.at("chosen").get<int>();
        rec.vbs = jrec.at("vbs").get<int>();
        rec.as_relert = jrec.at("as_relert").get<double>();
        rec.sbs_relert = jrec.at("sbs_relert").get<double>();
        report.records.push_back(rec);
    }
    summarize(report);
    return report;
}

std::string report_to_csv(const Report& report) {
    std::ostringstream out;
    out << "group,dimension,count,sbs_mean,as_mean,closure_mean,sbs_median,as_median,"
           "closure_median,sbs_p90,as_p90,closure_p90\n";
    out.setf(std::ios::fixed);
    out.precision(6);
    for (const auto& cell : report.cells) {
        out << cell.group << ',' << cell.dimension << ',' << cell.count << ',' << cell.sbs.mean
            << ',' << cell.selector.mean << ',' << cell.closure_mean << ',' << cell.sbs.median
            << ',' << cell.selector.median << ',' << cell.closure_median << ',' << cell.sbs.p90
            << ',' << cell.selector.p90 << ',' << cell.closure_p90 << '\n';
    }
    return out.str();
}

}  // namespace geopas::eval
