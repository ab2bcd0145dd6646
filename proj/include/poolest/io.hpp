#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "poolest/dataset.hpp"
#include "poolest/decision.hpp"
#include "poolest/estimator.hpp"
#include "poolest/simulation.hpp"

// File formats and result documents.  Byte-level grammar for every format
// lives in docs/formats.md; loaders throw DataError with file/line context,
// writers emit canonical forms that reload to equal values.

namespace poolest::io {

// --- schema files: one "name: value value ..." entry per attribute ---
AttributeSchema load_schema(std::istream& in, const std::string& source_name = "<schema>");
AttributeSchema load_schema_file(const std::string& path);
std::string write_schema(const AttributeSchema& schema);

// --- observation files ---
enum class ObservationFormat {
    delimited, // one row per observation, one column per attribute, "?" = unobserved
    pairs,     // attr=value tokens, optional @episode tag
    auto_detect // by extension: .csv/.tsv delimited, anything else pairs
};

struct IngestIssue {
    std::size_t line = 0;
    std::string message;
};

struct IngestResult {
    Dataset dataset;
    std::size_t accepted = 0;
    std::vector<IngestIssue> rejected; // per-record diagnostics, source order
};

IngestResult ingest(std::istream& in, const AttributeSchema& schema, ObservationFormat format,
                    char delimiter = ',', std::string_view missing_token = "?");
IngestResult ingest_file(const std::string& path, const AttributeSchema& schema,
                         ObservationFormat format = ObservationFormat::auto_detect);

// --- decision matrix files ---
DecisionMatrix load_matrix(std::istream& in, const AttributeSchema& schema,
                           const std::string& source_name = "<matrix>");
DecisionMatrix load_matrix_file(const std::string& path, const AttributeSchema& schema);

// --- estimator configuration (JSON document) ---
// `schema` may be null when the config cannot reference schema names
// (known_irrelevant / class_partitions are then rejected).
EstimatorConfig load_estimator_config(const nlohmann::ordered_json& doc,
                                      const AttributeSchema* schema);
EstimatorConfig load_estimator_config_file(const std::string& path,
                                           const AttributeSchema* schema);
nlohmann::ordered_json estimator_config_json(const EstimatorConfig& config,
                                             const AttributeSchema* schema = nullptr);

// --- result documents ---
nlohmann::ordered_json estimate_json(const AttributeSchema& schema, const Event& target,
                                     const Event& condition, const EstimateResult& result);
std::string estimate_tsv(const AttributeSchema& schema, const EstimateResult& result);

nlohmann::ordered_json decision_json(const AttributeSchema& schema, const DecisionMatrix& matrix,
                                     const DecisionReport& report);
std::string decision_tsv(const AttributeSchema& schema, const DecisionMatrix& matrix,
                         const DecisionReport& report);

nlohmann::ordered_json report_summary_json(const sim::ExperimentReport& report);
std::string report_trials_tsv(const sim::ExperimentReport& report);

// Shortest decimal form that parses back to the same double ("%.17g"
// trimmed would not be shorter-stable; this is what the TSV writers use).
std::string format_double(double value);

} // namespace poolest::io
