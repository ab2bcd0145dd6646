#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <json.hpp>

// Drives the installed binary end to end through a shell, checking exit
// codes (0 ok, 1 usage, 2 data, 3 starved) and the emitted documents.

namespace fs = std::filesystem;

namespace {

struct CliRun {
    int exit_code = -1;
    std::string out;
    std::string err;
};

const fs::path& work_dir() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "poolest_cli_tests";
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string write_file(const std::string& name, const std::string& content) {
    const fs::path path = work_dir() / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path.string();
}

CliRun run_cli(const std::string& args) {
    static int counter = 0;
    const fs::path out_path = work_dir() / ("stdout." + std::to_string(counter));
    const fs::path err_path = work_dir() / ("stderr." + std::to_string(counter));
    ++counter;
    const std::string command = std::string(POOLEST_CLI_PATH) + " " + args + " >" +
                                out_path.string() + " 2>" + err_path.string();
    const int status = std::system(command.c_str());
    CliRun r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    return r;
}

bool contains(const std::string& haystack, std::string_view needle) {
    return haystack.find(needle) != std::string::npos;
}

std::string town_schema_path() {
    return write_file("town.schema",
                      "weather: fine rain\n"
                      "traffic: light heavy\n"
                      "day: mon tue sat\n");
}

// 30/20/30/20 split over weather x traffic; under weather=fine the traffic
// proportions differ decisively from weather=rain, keeping the condition.
std::string shifted_data_path() {
    std::string rows;
    auto push = [&rows](const char* line, int count) {
        for (int i = 0; i < count; ++i) {
            rows += line;
            rows += '\n';
        }
    };
    push("fine,light,mon", 10);
    push("fine,heavy,mon", 30);
    push("rain,light,mon", 30);
    push("rain,heavy,mon", 10);
    return write_file("shifted.csv", rows);
}

std::string balanced_data_path() {
    std::string rows;
    auto push = [&rows](const char* line, int count) {
        for (int i = 0; i < count; ++i) {
            rows += line;
            rows += '\n';
        }
    };
    push("fine,light,mon", 10);
    push("fine,heavy,mon", 30);
    push("rain,light,mon", 10);
    push("rain,heavy,mon", 30);
    return write_file("balanced.csv", rows);
}

std::string courier_matrix_path() {
    return write_file("courier.matrix",
                      "columns: weather traffic\n"
                      "actions: go wait\n"
                      "go: 10 0 0 0\n"
                      "wait: 1 1 1 1\n");
}

nlohmann::ordered_json parse_json(const std::string& text) {
    return nlohmann::ordered_json::parse(text);
}

} // namespace

TEST_CASE("usage errors exit with code 1") {
    CHECK(run_cli("").exit_code == 1);
    CHECK(run_cli("frobnicate").exit_code == 1);
    CHECK(run_cli("estimate --schema x").exit_code == 1); // required options missing

    const CliRun help = run_cli("--help");
    CHECK(help.exit_code == 0);
    CHECK(contains(help.out, "estimate"));
    CHECK(contains(help.out, "simulate"));
}

TEST_CASE("validate checks every file it is given") {
    const std::string schema = town_schema_path();
    const std::string data = shifted_data_path();
    const std::string matrix = courier_matrix_path();
    const std::string config =
        write_file("estimator.json", R"({"alpha": {"kind": "fixed", "value": 0.05}})");

    SUBCASE("clean inputs exit 0 with a JSON report") {
        const CliRun r = run_cli("validate --schema " + schema + " --data " + data +
                                 " --matrix " + matrix + " --config " + config);
        REQUIRE(r.exit_code == 0);
        const auto doc = parse_json(r.out);
        CHECK(doc.at("schema").at("attributes").get<int>() == 3);
        CHECK(doc.at("schema").at("status").get<std::string>() == "ok");
        CHECK(doc.at("data").at("accepted").get<int>() == 80);
        CHECK(doc.at("data").at("rejected").get<int>() == 0);
        CHECK(doc.at("matrix").at("actions").get<int>() == 2);
        CHECK(doc.at("matrix").at("columns").get<int>() == 4);
        CHECK(doc.at("config").at("status").get<std::string>() == "ok");
    }
    SUBCASE("rejected records flip the exit code but the report still lands") {
        const std::string dirty =
            write_file("dirty.csv", "fine,light,mon\nfine,light\nrain,wet,sat\n");
        const CliRun r = run_cli("validate --schema " + schema + " --data " + dirty);
        CHECK(r.exit_code == 2);
        const auto doc = parse_json(r.out);
        CHECK(doc.at("data").at("accepted").get<int>() == 1);
        CHECK(doc.at("data").at("rejected").get<int>() == 2);
        CHECK(contains(r.err, ":2: record rejected"));
        CHECK(contains(r.err, ":3: record rejected"));

        const CliRun tsv =
            run_cli("validate --tsv --schema " + schema + " --data " + dirty);
        CHECK(tsv.exit_code == 2);
        CHECK(contains(tsv.out, "file\tstatus"));
        CHECK(contains(tsv.out, "rejected-records"));
    }
    SUBCASE("unreadable or malformed files exit 2") {
        CHECK(run_cli("validate --schema /no/such.schema").exit_code == 2);
        const std::string bad_matrix = write_file("bad.matrix", "columns: weather\n");
        const CliRun r =
            run_cli("validate --schema " + schema + " --matrix " + bad_matrix);
        CHECK(r.exit_code == 2);
        CHECK(contains(r.err, "error:"));
        const std::string bad_config = write_file("bad.json", "{nope");
        CHECK(run_cli("validate --schema " + schema + " --config " + bad_config)
                  .exit_code == 2);
    }
}

TEST_CASE("estimate reports the probability with its trace") {
    const std::string schema = town_schema_path();
    const std::string shifted = shifted_data_path();
    const std::string balanced = balanced_data_path();

    SUBCASE("a decisive split keeps the condition") {
        const CliRun r = run_cli("estimate --schema " + schema + " --data " + shifted +
                                 " --target traffic=light --given weather=fine");
        REQUIRE(r.exit_code == 0);
        const auto doc = parse_json(r.out);
        CHECK(doc.at("probability").get<double>() == 0.25);
        CHECK(doc.at("effective_condition").get<std::string>() == "weather=fine");
        CHECK(doc.at("effective_n").get<int>() == 40);
        CHECK(doc.at("passes").get<int>() == 1);
        REQUIRE(doc.at("trace").size() == 1);
        CHECK(doc.at("trace").at(0).at("decision").get<std::string>() == "no_pool");
    }
    SUBCASE("balanced data pools the condition away") {
        const CliRun r = run_cli("estimate --tsv --schema " + schema + " --data " +
                                 balanced + " --target traffic=light --given weather=fine");
        REQUIRE(r.exit_code == 0);
        std::istringstream lines(r.out);
        std::string header, summary;
        std::getline(lines, header);
        std::getline(lines, summary);
        CHECK(header == "probability\teffective_condition\teffective_n\tsuccesses\tpasses");
        CHECK(summary == "0.25\t\t80\t20\t1");
    }
    SUBCASE("the config file changes the verdict") {
        const std::string strict =
            write_file("strict.json", R"({"alpha": {"kind": "fixed", "value": 1e-12}})");
        const CliRun r = run_cli("estimate --schema " + schema + " --data " + shifted +
                                 " --target traffic=light --given weather=fine --config " +
                                 strict);
        REQUIRE(r.exit_code == 0);
        const auto doc = parse_json(r.out);
        CHECK(doc.at("probability").get<double>() == 0.5); // pooled marginal 40/80
        CHECK(doc.at("effective_condition").get<std::string>() == "");
        CHECK(doc.at("trace").at(0).at("decision").get<std::string>() == "pool");
    }
    SUBCASE("a condition with no support exits 3") {
        const CliRun r = run_cli("estimate --schema " + schema + " --data " + shifted +
                                 " --target traffic=light --given day=sat");
        CHECK(r.exit_code == 3);
        CHECK(contains(r.err, "error:"));
        CHECK(contains(r.err, "day=sat"));
    }
    SUBCASE("bad event literals exit 2") {
        CHECK(run_cli("estimate --schema " + schema + " --data " + shifted +
                      " --target traffic=wet")
                  .exit_code == 2);
        CHECK(run_cli("estimate --schema " + schema + " --data " + shifted +
                      " --target nonsense")
                  .exit_code == 2);
    }
    SUBCASE("--out writes the same document to a file") {
        const CliRun direct = run_cli("estimate --schema " + schema + " --data " + shifted +
                                      " --target traffic=light --given weather=fine");
        const std::string out_path = (work_dir() / "estimate_result.json").string();
        const CliRun filed = run_cli("estimate --schema " + schema + " --data " + shifted +
                                     " --target traffic=light --given weather=fine --out " +
                                     out_path);
        REQUIRE(filed.exit_code == 0);
        CHECK(filed.out.empty());
        CHECK(slurp(out_path) == direct.out);
    }
}

TEST_CASE("decide picks the best action from data or overrides") {
    const std::string schema = town_schema_path();
    const std::string data = shifted_data_path();
    const std::string matrix = courier_matrix_path();

    SUBCASE("estimated probabilities") {
        const CliRun r = run_cli("decide --schema " + schema + " --data " + data +
                                 " --matrix " + matrix);
        REQUIRE(r.exit_code == 0);
        const auto doc = parse_json(r.out);
        // go earns 10 * Pr(fine,light) = 1.25 against wait's flat 1.0
        CHECK(doc.at("chosen").get<std::string>() == "go");
        CHECK(doc.at("source").get<std::string>() == "estimated");
        CHECK(doc.at("columns").size() == 4);
    }
    SUBCASE("supplied probabilities bypass the data") {
        const CliRun r = run_cli("decide --schema " + schema + " --data " + data +
                                 " --matrix " + matrix + " --override 0,0,0,1");
        REQUIRE(r.exit_code == 0);
        const auto doc = parse_json(r.out);
        CHECK(doc.at("chosen").get<std::string>() == "wait");
        CHECK(doc.at("source").get<std::string>() == "supplied");

        const CliRun tsv = run_cli("decide --tsv --schema " + schema + " --data " + data +
                                   " --matrix " + matrix + " --override 0,0,0,1");
        CHECK(contains(tsv.out, "chosen\tsource"));
        CHECK(contains(tsv.out, "wait\tsupplied"));
    }
    SUBCASE("bad overrides exit 2") {
        CHECK(run_cli("decide --schema " + schema + " --data " + data + " --matrix " +
                      matrix + " --override 0.4,x,0.3,0.2")
                  .exit_code == 2);
        CHECK(run_cli("decide --schema " + schema + " --data " + data + " --matrix " +
                      matrix + " --override 0.5,0.5")
                  .exit_code == 2);
    }
    SUBCASE("columns with no usable observations exit 3") {
        const std::string blind = write_file("blind.csv", "fine,?,mon\nrain,?,tue\n");
        const CliRun r = run_cli("decide --schema " + schema + " --data " + blind +
                                 " --matrix " + matrix);
        CHECK(r.exit_code == 3);
        CHECK(contains(r.err, "error:"));
        CHECK(contains(r.err, "weather=fine,traffic=light"));
    }
}

TEST_CASE("simulate runs seeded experiment specs") {
    const std::string spec = write_file("pool_rate.spec.json", R"({
        "experiment": "pool_rate",
        "cells": 2,
        "p": 0.5,
        "points_per_cell": 20,
        "trials": 4,
        "checkpoint_every": 0,
        "seed": 7
    })");

    SUBCASE("summary document") {
        const CliRun r = run_cli("simulate --config " + spec);
        REQUIRE(r.exit_code == 0);
        const auto doc = parse_json(r.out);
        CHECK(doc.at("experiment").get<std::string>() == "pool_rate");
        CHECK(doc.at("seed").get<int>() == 7);
        CHECK(doc.at("params").at("trials").get<int>() == 4);
        CHECK(doc.at("aggregates").at("trials").get<double>() == 4.0);
        CHECK(doc.at("aggregates").contains("no_pool_rate"));
    }
    SUBCASE("the same spec twice produces byte-identical output") {
        const CliRun a = run_cli("simulate --config " + spec);
        const CliRun b = run_cli("simulate --config " + spec);
        REQUIRE(a.exit_code == 0);
        REQUIRE(b.exit_code == 0);
        CHECK(a.out == b.out);

        const CliRun tsv_a = run_cli("simulate --tsv --config " + spec);
        const CliRun tsv_b = run_cli("simulate --tsv --config " + spec);
        CHECK(tsv_a.out == tsv_b.out);
        CHECK(contains(tsv_a.out, "trial\ttests\tvalid\tinvalid\tno_pool"));
    }
    SUBCASE("--seed and --trials override the spec") {
        const CliRun r = run_cli("simulate --config " + spec + " --seed 9 --trials 2");
        REQUIRE(r.exit_code == 0);
        const auto doc = parse_json(r.out);
        CHECK(doc.at("seed").get<int>() == 9);
        CHECK(doc.at("aggregates").at("trials").get<double>() == 2.0);

        const CliRun base = run_cli("simulate --config " + spec);
        CHECK(parse_json(base.out).at("seed").get<int>() == 7);
    }
    SUBCASE("--out writes the trial table and the summary") {
        const std::string prefix = (work_dir() / "experiment_run").string();
        const CliRun r = run_cli("simulate --config " + spec + " --out " + prefix);
        REQUIRE(r.exit_code == 0);
        const std::string summary = slurp(prefix + ".summary.json");
        const std::string trials = slurp(prefix + ".trials.tsv");
        CHECK(summary == r.out); // stdout keeps the summary
        CHECK(contains(trials, "trial\ttests\tvalid\tinvalid\tno_pool"));
        const CliRun tsv = run_cli("simulate --tsv --config " + spec);
        CHECK(trials == tsv.out);
    }
    SUBCASE("other experiment kinds parse and run") {
        const std::string stab = write_file("stab.spec.json", R"({
            "experiment": "stabilization",
            "cell_probs": [0.0, 1.0],
            "trials": 3,
            "checkpoint_every": 10,
            "max_points_per_cell": 80,
            "seed": 11
        })");
        const CliRun r = run_cli("simulate --config " + stab);
        REQUIRE(r.exit_code == 0);
        const auto doc = parse_json(r.out);
        CHECK(doc.at("experiment").get<std::string>() == "stabilization");
        CHECK(doc.at("aggregates").at("resolved").get<double>() == 3.0);

        const std::string moments = write_file("moments.spec.json", R"({
            "experiment": "moments",
            "cell_probs": [0.5, 0.5],
            "cell_sizes": [50, 50],
            "trials": 1000,
            "seed": 13
        })");
        const CliRun m = run_cli("simulate --config " + moments);
        REQUIRE(m.exit_code == 0);
        CHECK(parse_json(m.out).at("experiment").get<std::string>() == "moments");
    }
    SUBCASE("bad specs exit 2") {
        const std::string unknown =
            write_file("unknown.spec.json", R"({"experiment": "nope"})");
        CHECK(run_cli("simulate --config " + unknown).exit_code == 2);
        const std::string extra = write_file(
            "extra.spec.json", R"({"experiment": "pool_rate", "bogus": 1})");
        CHECK(run_cli("simulate --config " + extra).exit_code == 2);
        const std::string bad_p = write_file(
            "bad_p.spec.json", R"({"experiment": "pool_rate", "p": 1.5})");
        CHECK(run_cli("simulate --config " + bad_p).exit_code == 2);
        const std::string mangled = write_file("mangled.spec.json", "{oops");
        CHECK(run_cli("simulate --config " + mangled).exit_code == 2);
        CHECK(run_cli("simulate --config /no/such.spec.json").exit_code == 2);
    }
}
