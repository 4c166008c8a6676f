#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "frlbench/criteria.hpp"
#include "frlbench/encoder.hpp"
#include "frlbench/errors.hpp"
#include "frlbench/ingest.hpp"
#include "frlbench/protocol.hpp"
#include "frlbench/report.hpp"
#include "frlbench/sweep.hpp"
#include "frlbench/synth.hpp"
#include "frlbench/tabular.hpp"

namespace frlbench::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kCriteria = 3 };

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline ClassifierParams classifier_from(const std::string& path) {
    if (path.empty()) return {};
    return classifier_params_from_json(read_json_file(path));
}

}  // namespace detail

// Entry point shared by the executable and the tests. Returns the exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Fair representation transfer benchmark toolkit", "frlbench"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolkitVersion);

    std::string spec_file, out_dir, csv_file, data_dir, proxy, thresholds_file, encoder, task, params_file,
        model_out, model_file, reps_train, reps_test, config_file, records_dir, classifier_file, result_file,
        age_column = "Age";
    double test_fraction = 0.3;
    std::uint64_t seed = 0;
    std::size_t runs = 5, workers = 1;
    std::vector<std::string> tasks;
    bool no_svg = false;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic benchmark dataset");
    synth->add_option("--spec", spec_file, "Synthetic spec JSON")->required();
    synth->add_option("--out", out_dir, "Output dataset directory")->required();
    synth->add_option("--workers", workers, "Generator threads");

    auto* acs = app.add_subcommand("ingest-acs", "Build ACS-Transfer from a PUMS person CSV");
    acs->add_option("--csv", csv_file, "PUMS person CSV")->required();
    acs->add_option("--out", out_dir, "Output dataset directory")->required();

    auto* health = app.add_subcommand("ingest-health", "Build Heritage-Health-Transfer from a per-patient CSV");
    health->add_option("--csv", csv_file, "Per-patient CSV")->required();
    health->add_option("--out", out_dir, "Output dataset directory")->required();
    health->add_option("--age-column", age_column, "Column holding patient age");

    auto* split_cmd = app.add_subcommand("split", "Persist a seeded train/test split");
    split_cmd->add_option("--data", data_dir, "Dataset directory")->required();
    split_cmd->add_option("--test-fraction", test_fraction, "Fraction of rows in the test split")->required();
    split_cmd->add_option("--seed", seed, "Split seed")->required();

    auto* validate = app.add_subcommand("validate", "Check candidate tasks against the benchmark criteria");
    validate->add_option("--data", data_dir, "Split dataset directory")->required();
    validate->add_option("--proxy", proxy, "Proxy task")->required();
    validate->add_option("--thresholds", thresholds_file, "Threshold overrides JSON");
    validate->add_option("--classifier", classifier_file, "Classifier parameter JSON");
    validate->add_option("--runs", runs, "Classifier runs per task");
    validate->add_option("--workers", workers, "Tasks evaluated in parallel");

    auto* train = app.add_subcommand("train", "Fit a tree encoder on the train split");
    train->add_option("--data", data_dir, "Split dataset directory")->required();
    train->add_option("--encoder", encoder, "FARE, FARE_Rec or FARE_RecAbs")->required();
    train->add_option("--task", task, "Training task (label used by the criterion)");
    train->add_option("--params", params_file, "Encoder hyperparameter JSON")->required();
    train->add_option("--out", model_out, "Model JSON to write")->required();

    auto* evaluate = app.add_subcommand("evaluate", "Score representations with the downstream protocol");
    evaluate->add_option("--data", data_dir, "Split dataset directory")->required();
    auto* model_opt = evaluate->add_option("--model", model_file, "Model JSON from train");
    auto* rtr = evaluate->add_option("--reps-train", reps_train, "Train representations CSV");
    auto* rte = evaluate->add_option("--reps-test", reps_test, "Test representations CSV");
    evaluate->add_option("--tasks", tasks, "Comma-separated evaluation tasks")->required()->delimiter(',');
    evaluate->add_option("--classifier", classifier_file, "Classifier parameter JSON");
    evaluate->add_option("--runs", runs, "Classifier runs per task");
    evaluate->add_option("--result", result_file, "Also write the JSON result here");
    model_opt->excludes(rtr)->excludes(rte);
    rtr->needs(rte);
    rte->needs(rtr);

    auto* sweep = app.add_subcommand("sweep", "Run a resumable hyperparameter sweep");
    sweep->add_option("--config", config_file, "Sweep config JSON")->required();

    auto* pareto = app.add_subcommand("pareto", "Extract Pareto fronts and write plot-ready reports");
    pareto->add_option("--records", records_dir, "Sweep output directory")->required();
    pareto->add_option("--out", out_dir, "Report directory")->required();
    pareto->add_flag("--no-svg", no_svg, "Skip the SVG rendering");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (synth->parsed()) {
            const auto spec = synth::spec_from_json(read_json_file(spec_file));
            const auto d = synth::synth_generate(spec, workers);
            save_dataset_dir(out_dir, d);
            out << "wrote " << d.n() << " rows x " << d.dim() << " features, tasks";
            for (const auto& t : d.task_names()) out << ' ' << t;
            out << " to " << out_dir << '\n';
        } else if (acs->parsed()) {
            const auto d = ingest::ingest_acs(csv_file);
            save_dataset_dir(out_dir, d);
            out << "wrote " << d.n() << " rows x " << d.dim() << " features to " << out_dir << '\n';
        } else if (health->parsed()) {
            ingest::HealthSpec hs;
            hs.age_column = age_column;
            const auto d = ingest::ingest_health(csv_file, hs);
            save_dataset_dir(out_dir, d);
            out << "wrote " << d.n() << " rows x " << d.dim() << " features to " << out_dir << '\n';
        } else if (split_cmd->parsed()) {
            const auto d = load_dataset_dir(data_dir);
            const auto s = split(d, test_fraction, seed);
            save_split(data_dir, s);
            out << "split " << d.n() << " rows: " << s.train.n() << " train, " << s.test.n() << " test\n";
        } else if (validate->parsed()) {
            const auto s = load_split(data_dir);
            CriteriaThresholds th;
            if (!thresholds_file.empty()) th = thresholds_from_json(read_json_file(thresholds_file));
            const auto report = evaluate_criteria(s, proxy, th, detail::classifier_from(classifier_file), runs, workers);
            write_json_file(std::filesystem::path(data_dir) / "criteria.json", to_json(report));
            {
                std::ofstream csv_out(std::filesystem::path(data_dir) / "criteria.csv", std::ios::binary);
                render_table_csv(report, csv_out);
            }
            render_table_text(report, out);
            out << "C1 " << (report.c1 ? "pass" : "fail") << ", C3 " << (report.c3 ? "pass" : "fail")
                << "; accepted tasks:";
            for (const auto& t : select_tasks(report)) out << ' ' << t;
            out << '\n';
            if (!report.accepted()) {
                err << "benchmark rejected by the criteria\n";
                return kCriteria;
            }
        } else if (train->parsed()) {
            const auto kind = encoder_kind_from_string(encoder);
            if (!is_tree_encoder(kind)) throw UsageError("--encoder must be FARE, FARE_Rec or FARE_RecAbs");
            const auto hyper = hyper_from_json(read_json_file(params_file));
            const auto s = load_split(data_dir);
            std::optional<std::string> t;
            if (!task.empty()) t = task;
            if (kind == EncoderKind::FARE && !t) throw UsageError("--task is required for FARE");
            const auto enc = train_encoder(s.train, kind, t, hyper);
            write_json_file(model_out, enc.to_json());
            out << "trained " << to_string(kind) << " with " << enc.tree().leaf_count() << " leaves -> " << model_out
                << '\n';
        } else if (evaluate->parsed()) {
            if (model_file.empty() && reps_train.empty())
                throw UsageError("evaluate needs --model or --reps-train/--reps-test");
            const auto s = load_split(data_dir);
            Matrix ztr, zte;
            nlohmann::json config;
            if (!model_file.empty()) {
                const auto enc = FareEncoder::from_json(read_json_file(model_file));
                ztr = enc.encode(s.train.features);
                zte = enc.encode(s.test.features);
                config = {{"encoder", to_string(enc.kind())}, {"model", model_file}};
            } else {
                ztr = read_representations(reps_train);
                zte = read_representations(reps_test);
                if (ztr.rows() != s.train.n() || zte.rows() != s.test.n())
                    throw DimensionError("representation row counts do not match the split");
                config = {{"encoder", "ExternalReps"}, {"reps_train", reps_train}, {"reps_test", reps_test}};
            }
            const auto cp = detail::classifier_from(classifier_file);
            nlohmann::json result = nlohmann::json::array();
            for (const auto& t : tasks) {
                auto p = evaluate_protocol(t, ztr, zte, s.train.task(t), s.test.task(t), s.test.sensitive,
                                           s.train.n_groups, runs, cp);
                p.encoder_config = config;
                result.push_back(to_json(p));
            }
            if (!result_file.empty()) write_json_file(result_file, result);
            out << result.dump(2) << '\n';
        } else if (sweep->parsed()) {
            const auto cfg = sweep_config_from_json(read_json_file(config_file));
            const auto r = run_sweep(cfg);
            out << r.records.size() << " trials (" << r.executed << " executed, " << r.failed << " failed) in "
                << cfg.out << '\n';
        } else if (pareto->parsed()) {
            const auto [records, baselines] = load_record_store(records_dir);
            const auto tasks_out = emit_report(records, baselines, out_dir, !no_svg);
            for (const auto& t : tasks_out) out << t.csv_file << '\n';
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return kData;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kData;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "data error: " << e.what() << '\n';
        return kData;
    }
    return kOk;
}

}  // namespace frlbench::cli
