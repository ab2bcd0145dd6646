// Command-line front end: validate inputs, estimate conditional
// probabilities with a full elimination trace, choose max-expected-utility
// actions, and run the simulation experiments.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 starved estimate.
// Result documents go to stdout (or --out); diagnostics go to stderr.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "poolest/io.hpp"

namespace {

using nlohmann::ordered_json;
using namespace poolest;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitStarved = 3;

struct CommonFlags {
    std::string schema_path;
    std::string data_path;
    std::string config_path;
    std::string out_path;
    bool tsv = false;
};

void emit(const std::string& document, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << document;
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw DataError("cannot write '" + out_path + "'");
    out << document;
}

std::string dump(const ordered_json& doc) { return doc.dump(2) + "\n"; }

EstimatorConfig load_config_or_default(const std::string& path, const AttributeSchema* schema) {
    if (path.empty()) return EstimatorConfig{};
    return io::load_estimator_config_file(path, schema);
}

Dataset load_data(const std::string& path, const AttributeSchema& schema,
                  std::size_t* rejected_out = nullptr) {
    io::IngestResult result = io::ingest_file(path, schema);
    for (const io::IngestIssue& issue : result.rejected)
        std::cerr << path << ":" << issue.line << ": record rejected: " << issue.message
                  << "\n";
    if (rejected_out) *rejected_out = result.rejected.size();
    return std::move(result.dataset);
}

std::vector<double> parse_probability_list(const std::string& text) {
    std::vector<double> probs;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t comma = text.find(',', start);
        if (comma == std::string::npos) comma = text.size();
        const std::string token = text.substr(start, comma - start);
        try {
            std::size_t used = 0;
            probs.push_back(std::stod(token, &used));
            if (used != token.size()) throw std::invalid_argument(token);
        } catch (const std::exception&) {
            throw DataError("override: bad probability '" + token + "'");
        }
        start = comma + 1;
    }
    return probs;
}

int run_validate(const CommonFlags& flags, const std::string& matrix_path) {
    ordered_json doc;
    bool clean = true;

    const AttributeSchema schema = io::load_schema_file(flags.schema_path);
    doc["schema"] = {{"path", flags.schema_path},
                     {"attributes", schema.size()},
                     {"status", "ok"}};

    if (!flags.data_path.empty()) {
        std::size_t rejected = 0;
        const Dataset data = load_data(flags.data_path, schema, &rejected);
        doc["data"] = {{"path", flags.data_path},
                       {"accepted", data.size()},
                       {"rejected", rejected}};
        if (rejected > 0) clean = false;
    }
    if (!matrix_path.empty()) {
        const DecisionMatrix matrix = io::load_matrix_file(matrix_path, schema);
        doc["matrix"] = {{"path", matrix_path},
                         {"actions", matrix.actions.size()},
                         {"columns", matrix.columns.size()},
                         {"status", "ok"}};
    }
    if (!flags.config_path.empty()) {
        (void)io::load_estimator_config_file(flags.config_path, &schema);
        doc["config"] = {{"path", flags.config_path}, {"status", "ok"}};
    }

    if (flags.tsv) {
        std::string out = "file\tstatus\n";
        out += flags.schema_path + "\tok\n";
        if (!flags.data_path.empty())
            out += flags.data_path + "\t" +
                   (doc["data"]["rejected"].get<std::size_t>() == 0 ? "ok" : "rejected-records") +
                   "\n";
        if (!matrix_path.empty()) out += matrix_path + "\tok\n";
        if (!flags.config_path.empty()) out += flags.config_path + "\tok\n";
        emit(out, flags.out_path);
    } else {
        emit(dump(doc), flags.out_path);
    }
    return clean ? 0 : kExitData;
}

int run_estimate(const CommonFlags& flags, const std::string& target_literal,
                 const std::string& given_literal) {
    const AttributeSchema schema = io::load_schema_file(flags.schema_path);
    const Dataset data = load_data(flags.data_path, schema);
    const EstimatorConfig config = load_config_or_default(flags.config_path, &schema);
    const Event target = Event::parse(schema, target_literal);
    const Event given = Event::parse(schema, given_literal);

    const EstimateResult result = estimate(data, target, given, config);
    if (!result.probability)
        throw StarvedError("no observations match '" +
                           result.effective_condition.to_string(schema) +
                           "' (after eliminating " +
                           std::to_string(given.size() - result.effective_condition.size()) +
                           " of " + std::to_string(given.size()) + " condition attributes)");

    emit(flags.tsv ? io::estimate_tsv(schema, result)
                   : dump(io::estimate_json(schema, target, given, result)),
         flags.out_path);
    return 0;
}

int run_decide(const CommonFlags& flags, const std::string& matrix_path,
               const std::string& given_literal, const std::string& override_list) {
    const AttributeSchema schema = io::load_schema_file(flags.schema_path);
    const Dataset data = load_data(flags.data_path, schema);
    const EstimatorConfig config = load_config_or_default(flags.config_path, &schema);
    const DecisionMatrix matrix = io::load_matrix_file(matrix_path, schema);
    const Event given = Event::parse(schema, given_literal);

    std::optional<std::vector<double>> override_probs;
    if (!override_list.empty()) override_probs = parse_probability_list(override_list);

    const DecisionReport report =
        decide(matrix, data, given, config,
               override_probs ? std::optional<std::span<const double>>(*override_probs)
                              : std::nullopt);
    emit(flags.tsv ? io::decision_tsv(schema, matrix, report)
                   : dump(io::decision_json(schema, matrix, report)),
         flags.out_path);
    return 0;
}

// The experiment spec document: {"experiment": ..., "seed": ..., "config":
// {estimator config}, ...per-experiment parameters}.  --seed/--trials
// override the document.
sim::ExperimentReport run_experiment_spec(const ordered_json& doc,
                                          std::optional<std::uint64_t> seed_override,
                                          std::optional<unsigned> trials_override) {
    if (!doc.is_object()) throw DataError("experiment spec: document must be a JSON object");
    const std::string kind = doc.value("experiment", "");
    auto check_keys = [&](std::initializer_list<std::string_view> allowed) {
        for (const auto& [key, _] : doc.items()) {
            bool ok = key == "experiment" || key == "seed" || key == "config";
            for (std::string_view a : allowed) ok = ok || key == a;
            if (!ok) throw DataError("experiment spec: unknown key '" + key + "'");
        }
    };

    const EstimatorConfig config =
        doc.contains("config") ? io::load_estimator_config(doc.at("config"), nullptr)
                               : EstimatorConfig{};
    const std::uint64_t seed =
        seed_override ? *seed_override : doc.value("seed", std::uint64_t{0});

    try {
        if (kind == "pool_rate") {
            check_keys({"cells", "p", "points_per_cell", "trials", "checkpoint_every"});
            sim::PoolRateParams params;
            params.cells = doc.value("cells", params.cells);
            params.p = doc.value("p", params.p);
            params.points_per_cell = doc.value("points_per_cell", params.points_per_cell);
            params.trials = trials_override ? *trials_override : doc.value("trials", params.trials);
            params.checkpoint_every = doc.value("checkpoint_every", params.checkpoint_every);
            return sim::run_pool_rate_experiment(params, config, seed);
        }
        if (kind == "stabilization") {
            check_keys({"cell_probs", "trials", "checkpoint_every", "max_points_per_cell"});
            sim::StabilizationParams params;
            params.cell_probs = doc.at("cell_probs").get<std::vector<double>>();
            params.trials = trials_override ? *trials_override : doc.value("trials", params.trials);
            params.checkpoint_every = doc.value("checkpoint_every", params.checkpoint_every);
            params.max_points_per_cell =
                doc.value("max_points_per_cell", params.max_points_per_cell);
            return sim::run_stabilization_experiment(params, config, seed);
        }
        if (kind == "moments") {
            check_keys({"cell_probs", "cell_sizes", "trials"});
            sim::MomentParams params;
            params.cell_probs = doc.at("cell_probs").get<std::vector<double>>();
            params.cell_sizes = doc.at("cell_sizes").get<std::vector<unsigned>>();
            params.trials = trials_override ? *trials_override : doc.value("trials", params.trials);
            return sim::run_moment_experiment(params, config, seed);
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("experiment spec: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("experiment spec: ") + e.what());
    }
    throw DataError(
        "experiment spec: 'experiment' must be pool_rate, stabilization, or moments");
}

int run_simulate(const CommonFlags& flags, std::optional<std::uint64_t> seed_override,
                 std::optional<unsigned> trials_override) {
    auto in = std::ifstream(flags.config_path);
    if (!in) throw DataError("cannot read '" + flags.config_path + "'");
    ordered_json doc;
    try {
        doc = ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(flags.config_path + ": " + e.what());
    }

    const sim::ExperimentReport report =
        run_experiment_spec(doc, seed_override, trials_override);

    if (!flags.out_path.empty()) {
        std::ofstream tsv(flags.out_path + ".trials.tsv");
        std::ofstream summary(flags.out_path + ".summary.json");
        if (!tsv || !summary)
            throw DataError("cannot write '" + flags.out_path + ".trials.tsv/.summary.json'");
        tsv << io::report_trials_tsv(report);
        summary << dump(io::report_summary_json(report));
    }
    std::cout << (flags.tsv ? io::report_trials_tsv(report)
                            : dump(io::report_summary_json(report)));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"conditional probability estimation with irrelevance pooling"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string matrix_path, target_literal, given_literal, override_list;
    std::optional<std::uint64_t> seed_override;
    std::optional<unsigned> trials_override;

    CLI::App* validate = app.add_subcommand("validate", "check schema/data/matrix/config files");
    validate->add_option("--schema", flags.schema_path, "schema file")->required();
    validate->add_option("--data", flags.data_path, "observation file");
    validate->add_option("--matrix", matrix_path, "decision matrix file");
    validate->add_option("--config", flags.config_path, "estimator config file");
    validate->add_option("--out", flags.out_path, "write the report here instead of stdout");
    validate->add_flag("--tsv", flags.tsv, "tabular output");

    CLI::App* estimate_cmd = app.add_subcommand("estimate", "estimate Pr(target | given)");
    estimate_cmd->add_option("--schema", flags.schema_path, "schema file")->required();
    estimate_cmd->add_option("--data", flags.data_path, "observation file")->required();
    estimate_cmd->add_option("--target", target_literal, "target event (attr=value,...)")
        ->required();
    estimate_cmd->add_option("--given", given_literal,
                             "initial information event (default: none)");
    estimate_cmd->add_option("--config", flags.config_path, "estimator config file");
    estimate_cmd->add_option("--out", flags.out_path, "write the result here instead of stdout");
    estimate_cmd->add_flag("--tsv", flags.tsv, "tabular output");

    CLI::App* decide_cmd = app.add_subcommand("decide", "choose the max-expected-utility action");
    decide_cmd->add_option("--schema", flags.schema_path, "schema file")->required();
    decide_cmd->add_option("--data", flags.data_path, "observation file")->required();
    decide_cmd->add_option("--matrix", matrix_path, "decision matrix file")->required();
    decide_cmd->add_option("--given", given_literal, "initial information event");
    decide_cmd->add_option("--config", flags.config_path, "estimator config file");
    decide_cmd->add_option("--override", override_list,
                           "comma-separated column probabilities (bypasses estimation)");
    decide_cmd->add_option("--out", flags.out_path, "write the report here instead of stdout");
    decide_cmd->add_flag("--tsv", flags.tsv, "tabular output");

    CLI::App* simulate = app.add_subcommand("simulate", "run a seeded experiment");
    simulate->add_option("--config", flags.config_path, "experiment spec file")->required();
    simulate->add_option("--seed", seed_override, "override the spec's seed");
    simulate->add_option("--trials", trials_override, "override the spec's trial count");
    simulate->add_option("--out", flags.out_path,
                         "file prefix for .trials.tsv and .summary.json");
    simulate->add_flag("--tsv", flags.tsv, "print per-trial rows instead of the summary");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (validate->parsed()) return run_validate(flags, matrix_path);
        if (estimate_cmd->parsed()) return run_estimate(flags, target_literal, given_literal);
        if (decide_cmd->parsed())
            return run_decide(flags, matrix_path, given_literal, override_list);
        if (simulate->parsed()) return run_simulate(flags, seed_override, trials_override);
    } catch (const StarvedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitStarved;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return 0;
}
