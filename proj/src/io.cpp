#include "poolest/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace poolest::io {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

bool skippable(std::string_view line) { return line.empty() || line.front() == '#'; }

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

std::vector<std::string_view> split_char(std::string_view s, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

double parse_double(std::string_view token, const std::string& context) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size())
        throw DataError(context + ": bad number '" + std::string(token) + "'");
    return value;
}

std::ifstream open_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read '" + path + "'");
    return in;
}

} // namespace

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    (void)ec;
    return std::string(buf, ptr);
}

AttributeSchema load_schema(std::istream& in, const std::string& source_name) {
    std::vector<Attribute> attrs;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (skippable(line)) continue;
        const std::size_t colon = line.find(':');
        if (colon == std::string_view::npos)
            throw DataError(source_name + ":" + std::to_string(line_no) +
                            ": expected 'name: value value ...'");
        Attribute a;
        a.name = std::string(trim(line.substr(0, colon)));
        for (std::string_view v : split_ws(line.substr(colon + 1)))
            a.values.emplace_back(v);
        if (a.values.empty())
            throw DataError(source_name + ":" + std::to_string(line_no) +
                            ": attribute '" + a.name + "' lists no values");
        attrs.push_back(std::move(a));
    }
    try {
        return AttributeSchema(std::move(attrs));
    } catch (const DataError& e) {
        throw DataError(source_name + ": " + e.what());
    }
}

AttributeSchema load_schema_file(const std::string& path) {
    auto in = open_file(path);
    return load_schema(in, path);
}

std::string write_schema(const AttributeSchema& schema) {
    std::ostringstream out;
    for (const Attribute& a : schema.attributes()) {
        out << a.name << ':';
        for (const std::string& v : a.values) out << ' ' << v;
        out << '\n';
    }
    return out.str();
}

IngestResult ingest(std::istream& in, const AttributeSchema& schema, ObservationFormat format,
                    char delimiter, std::string_view missing_token) {
    if (format == ObservationFormat::auto_detect)
        throw std::invalid_argument("ingest: auto_detect is only meaningful for files");

    std::vector<Observation> accepted;
    std::vector<IngestIssue> rejected;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (skippable(line)) continue;

        try {
            Observation obs;
            std::vector<Binding> bindings;
            if (format == ObservationFormat::delimited) {
                const auto fields = split_char(line, delimiter);
                if (fields.size() != schema.size())
                    throw DataError("expected " + std::to_string(schema.size()) +
                                    " fields, found " + std::to_string(fields.size()));
                for (std::uint32_t a = 0; a < schema.size(); ++a) {
                    const std::string_view field = trim(fields[a]);
                    if (field == missing_token) continue;
                    bindings.push_back(Binding{a, schema.require_value(a, field)});
                }
            } else {
                for (std::string_view token : split_ws(line)) {
                    if (token.front() == '@') {
                        if (!obs.episode.empty())
                            throw DataError("more than one episode tag");
                        obs.episode = std::string(token.substr(1));
                        if (obs.episode.empty()) throw DataError("empty episode tag");
                        continue;
                    }
                    const std::size_t eq = token.find('=');
                    if (eq == std::string_view::npos || eq == 0 || eq + 1 >= token.size())
                        throw DataError("bad token '" + std::string(token) +
                                        "' (expected attr=value)");
                    const std::uint32_t attr = schema.require(token.substr(0, eq));
                    bindings.push_back(
                        Binding{attr, schema.require_value(attr, token.substr(eq + 1))});
                }
            }
            obs.values = Event::from_bindings(schema, std::move(bindings));
            accepted.push_back(std::move(obs));
        } catch (const DataError& e) {
            rejected.push_back(IngestIssue{line_no, e.what()});
        }
    }

    IngestResult result{Dataset(schema, accepted), accepted.size(), std::move(rejected)};
    return result;
}

IngestResult ingest_file(const std::string& path, const AttributeSchema& schema,
                         ObservationFormat format) {
    const bool csv = path.size() >= 4 && path.ends_with(".csv");
    const bool tsv = path.size() >= 4 && path.ends_with(".tsv");
    if (format == ObservationFormat::auto_detect)
        format = (csv || tsv) ? ObservationFormat::delimited : ObservationFormat::pairs;
    auto in = open_file(path);
    return ingest(in, schema, format, tsv ? '\t' : ',');
}

DecisionMatrix load_matrix(std::istream& in, const AttributeSchema& schema,
                           const std::string& source_name) {
    std::vector<std::string> column_attrs;
    std::vector<std::string> actions;
    std::vector<std::pair<std::string, std::vector<double>>> rows;
    std::string raw;
    std::size_t line_no = 0;
    auto context = [&] { return source_name + ":" + std::to_string(line_no); };
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (skippable(line)) continue;
        const std::size_t colon = line.find(':');
        if (colon == std::string_view::npos)
            throw DataError(context() + ": expected 'key: ...'");
        const std::string key{trim(line.substr(0, colon))};
        const auto tokens = split_ws(line.substr(colon + 1));
        if (key == "columns") {
            if (!column_attrs.empty()) throw DataError(context() + ": duplicate 'columns:'");
            for (auto t : tokens) column_attrs.emplace_back(t);
        } else if (key == "actions") {
            if (!actions.empty()) throw DataError(context() + ": duplicate 'actions:'");
            for (auto t : tokens) actions.emplace_back(t);
        } else {
            if (actions.empty())
                throw DataError(context() + ": utility row before 'actions:' line");
            if (std::find(actions.begin(), actions.end(), key) == actions.end())
                throw DataError(context() + ": unknown action '" + key + "'");
            for (const auto& [name, _] : rows)
                if (name == key)
                    throw DataError(context() + ": duplicate utility row for '" + key + "'");
            std::vector<double> utilities;
            for (auto t : tokens) utilities.push_back(parse_double(t, context()));
            rows.emplace_back(key, std::move(utilities));
        }
    }
    if (column_attrs.empty()) throw DataError(source_name + ": missing 'columns:' line");
    if (actions.empty()) throw DataError(source_name + ": missing 'actions:' line");
    std::vector<std::vector<double>> utilities;
    for (const std::string& action : actions) {
        auto it = std::find_if(rows.begin(), rows.end(),
                               [&](const auto& r) { return r.first == action; });
        if (it == rows.end())
            throw DataError(source_name + ": no utility row for action '" + action + "'");
        utilities.push_back(std::move(it->second));
    }
    try {
        return DecisionMatrix::create(schema, std::move(actions), column_attrs,
                                      std::move(utilities));
    } catch (const DataError& e) {
        throw DataError(source_name + ": " + e.what());
    }
}

DecisionMatrix load_matrix_file(const std::string& path, const AttributeSchema& schema) {
    auto in = open_file(path);
    return load_matrix(in, schema, path);
}

namespace {

stats::AlphaPolicy load_alpha(const nlohmann::ordered_json& doc) {
    if (!doc.is_object()) throw DataError("config: 'alpha' must be an object");
    const std::string kind = doc.value("kind", "");
    try {
        if (kind == "fixed") return stats::AlphaPolicy::fixed(doc.at("value").get<double>());
        if (kind == "scheduled")
            return stats::AlphaPolicy::scheduled(doc.at("d").get<double>(),
                                                 doc.at("cap").get<double>());
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("config: bad 'alpha': ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("config: bad 'alpha': ") + e.what());
    }
    throw DataError("config: 'alpha.kind' must be 'fixed' or 'scheduled'");
}

} // namespace

EstimatorConfig load_estimator_config(const nlohmann::ordered_json& doc,
                                      const AttributeSchema* schema) {
    if (!doc.is_object()) throw DataError("config: document must be a JSON object");
    static const std::vector<std::string> known_keys = {
        "alpha", "validity_threshold", "on_invalid", "known_irrelevant", "class_partitions"};
    for (const auto& [key, _] : doc.items())
        if (std::find(known_keys.begin(), known_keys.end(), key) == known_keys.end())
            throw DataError("config: unknown key '" + key + "'");

    EstimatorConfig config;
    try {
        if (doc.contains("alpha")) config.alpha_policy = load_alpha(doc.at("alpha"));
        if (doc.contains("validity_threshold")) {
            config.validity_threshold = doc.at("validity_threshold").get<double>();
            if (!(config.validity_threshold > 0.0))
                throw DataError("config: 'validity_threshold' must be positive");
        }
        if (doc.contains("on_invalid")) {
            const std::string v = doc.at("on_invalid").get<std::string>();
            if (v == "keep")
                config.on_invalid = OnInvalid::keep_attribute;
            else if (v == "pool")
                config.on_invalid = OnInvalid::pool_anyway;
            else
                throw DataError("config: 'on_invalid' must be 'keep' or 'pool'");
        }
        if (doc.contains("known_irrelevant") && !doc.at("known_irrelevant").empty()) {
            if (!schema)
                throw DataError("config: 'known_irrelevant' needs a schema to resolve names");
            for (const auto& entry : doc.at("known_irrelevant")) {
                KnownIrrelevanceRule rule;
                rule.attribute = schema->require(entry.at("attribute").get<std::string>());
                for (const auto& name : entry.at("target_attrs"))
                    rule.target_attrs.push_back(schema->require(name.get<std::string>()));
                std::sort(rule.target_attrs.begin(), rule.target_attrs.end());
                if (std::adjacent_find(rule.target_attrs.begin(), rule.target_attrs.end()) !=
                    rule.target_attrs.end())
                    throw DataError("config: duplicate attribute in 'target_attrs'");
                if (rule.target_attrs.empty())
                    throw DataError("config: 'target_attrs' must not be empty");
                config.known_irrelevant.push_back(std::move(rule));
            }
        }
        if (doc.contains("class_partitions") && !doc.at("class_partitions").empty()) {
            if (!schema)
                throw DataError("config: 'class_partitions' needs a schema to resolve names");
            for (const auto& [attr_name, classes] : doc.at("class_partitions").items()) {
                const std::uint32_t attr = schema->require(attr_name);
                ClassPartition part;
                part.class_of_code.assign(schema->domain_size(attr), 255);
                for (const auto& [class_name, values] : classes.items()) {
                    const auto cls = static_cast<std::uint8_t>(part.class_names.size());
                    part.class_names.push_back(class_name);
                    for (const auto& v : values) {
                        const std::uint8_t code =
                            schema->require_value(attr, v.get<std::string>());
                        if (part.class_of_code[code - 1] != 255)
                            throw DataError("config: value '" + v.get<std::string>() +
                                            "' appears in two classes of '" + attr_name + "'");
                        part.class_of_code[code - 1] = cls;
                    }
                }
                for (std::size_t i = 0; i < part.class_of_code.size(); ++i)
                    if (part.class_of_code[i] == 255)
                        throw DataError("config: partition of '" + attr_name +
                                        "' misses value '" +
                                        schema->attribute(attr).values[i] + "'");
                validate_partition(*schema, attr, part);
                config.class_partitions.emplace(attr, std::move(part));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("config: ") + e.what());
    }
    return config;
}

EstimatorConfig load_estimator_config_file(const std::string& path,
                                           const AttributeSchema* schema) {
    auto in = open_file(path);
    nlohmann::ordered_json doc;
    try {
        doc = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(path + ": " + e.what());
    }
    try {
        return load_estimator_config(doc, schema);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

nlohmann::ordered_json estimator_config_json(const EstimatorConfig& config,
                                             const AttributeSchema* schema) {
    nlohmann::ordered_json alpha;
    if (config.alpha_policy.kind == stats::AlphaPolicy::Kind::fixed)
        alpha = {{"kind", "fixed"}, {"value", config.alpha_policy.alpha}};
    else
        alpha = {{"kind", "scheduled"}, {"d", config.alpha_policy.d},
                 {"cap", config.alpha_policy.cap}};
    nlohmann::ordered_json doc = {
        {"alpha", std::move(alpha)},
        {"validity_threshold", config.validity_threshold},
        {"on_invalid", config.on_invalid == OnInvalid::keep_attribute ? "keep" : "pool"},
    };
    if (schema) {
        if (!config.known_irrelevant.empty()) {
            auto rules = nlohmann::ordered_json::array();
            for (const KnownIrrelevanceRule& rule : config.known_irrelevant) {
                auto targets = nlohmann::ordered_json::array();
                for (std::uint32_t a : rule.target_attrs)
                    targets.push_back(schema->attribute(a).name);
                rules.push_back({{"attribute", schema->attribute(rule.attribute).name},
                                 {"target_attrs", std::move(targets)}});
            }
            doc["known_irrelevant"] = std::move(rules);
        }
        if (!config.class_partitions.empty()) {
            nlohmann::ordered_json parts;
            for (const auto& [attr, part] : config.class_partitions) {
                nlohmann::ordered_json classes;
                for (std::size_t c = 0; c < part.class_names.size(); ++c) {
                    auto members = nlohmann::ordered_json::array();
                    for (std::size_t i = 0; i < part.class_of_code.size(); ++i)
                        if (part.class_of_code[i] == c)
                            members.push_back(schema->attribute(attr).values[i]);
                    classes[part.class_names[c]] = std::move(members);
                }
                parts[schema->attribute(attr).name] = std::move(classes);
            }
            doc["class_partitions"] = std::move(parts);
        }
    } else {
        if (!config.known_irrelevant.empty())
            doc["known_irrelevant_rules"] = config.known_irrelevant.size();
        if (!config.class_partitions.empty())
            doc["class_partition_count"] = config.class_partitions.size();
    }
    return doc;
}

namespace {

const char* decision_label(stats::Decision d) {
    switch (d) {
        case stats::Decision::pool: return "pool";
        case stats::Decision::no_pool: return "no_pool";
        case stats::Decision::invalid: return "invalid";
    }
    return "?";
}

nlohmann::ordered_json step_json(const AttributeSchema& schema, const EliminationStep& step) {
    nlohmann::ordered_json doc;
    doc["pass"] = step.pass;
    doc["attribute"] = schema.attribute(step.attribute).name;
    doc["action"] = step.action == StepAction::eliminated ? "eliminated" : "retained";
    if (step.skipped_known_irrelevant) {
        doc["decision"] = "skipped_known_irrelevant";
        return doc;
    }
    const stats::TestOutcome& o = *step.outcome;
    doc["decision"] = decision_label(o.decision);
    doc["alpha"] = o.alpha_used;
    doc["dof"] = o.dof;
    doc["statistic"] = o.statistic ? nlohmann::ordered_json(*o.statistic)
                                   : nlohmann::ordered_json(nullptr);
    doc["critical"] = o.critical ? nlohmann::ordered_json(*o.critical)
                                 : nlohmann::ordered_json(nullptr);
    auto cells = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < step.cells.size(); ++i)
        cells.push_back({{"label", step.cell_labels[i]},
                         {"n", step.cells[i].n},
                         {"successes", step.cells[i].successes},
                         {"ok", static_cast<bool>(o.cell_ok[i])}});
    doc["cells"] = std::move(cells);
    return doc;
}

} // namespace

nlohmann::ordered_json estimate_json(const AttributeSchema& schema, const Event& target,
                                     const Event& condition, const EstimateResult& result) {
    nlohmann::ordered_json doc;
    doc["target"] = target.to_string(schema);
    doc["condition"] = condition.to_string(schema);
    doc["probability"] = result.probability ? nlohmann::ordered_json(*result.probability)
                                            : nlohmann::ordered_json(nullptr);
    doc["successes"] = result.successes;
    doc["effective_n"] = result.effective_n;
    doc["effective_condition"] = result.effective_condition.to_string(schema);
    doc["passes"] = result.passes;
    auto trace = nlohmann::ordered_json::array();
    for (const EliminationStep& step : result.trace) trace.push_back(step_json(schema, step));
    doc["trace"] = std::move(trace);
    return doc;
}

std::string estimate_tsv(const AttributeSchema& schema, const EstimateResult& result) {
    std::ostringstream out;
    out << "probability\teffective_condition\teffective_n\tsuccesses\tpasses\n";
    out << (result.probability ? format_double(*result.probability) : "undefined") << '\t'
        << result.effective_condition.to_string(schema) << '\t' << result.effective_n << '\t'
        << result.successes << '\t' << result.passes << "\n\n";
    out << "pass\tattribute\tdecision\taction\talpha\tdof\tstatistic\tcritical\tcells\n";
    for (const EliminationStep& step : result.trace) {
        out << step.pass << '\t' << schema.attribute(step.attribute).name << '\t';
        if (step.skipped_known_irrelevant) {
            out << "skipped_known_irrelevant\teliminated\t\t\t\t\t\n";
            continue;
        }
        const stats::TestOutcome& o = *step.outcome;
        out << decision_label(o.decision) << '\t'
            << (step.action == StepAction::eliminated ? "eliminated" : "retained") << '\t'
            << format_double(o.alpha_used) << '\t' << o.dof << '\t'
            << (o.statistic ? format_double(*o.statistic) : "") << '\t'
            << (o.critical ? format_double(*o.critical) : "") << '\t';
        for (std::size_t i = 0; i < step.cells.size(); ++i) {
            if (i) out << ';';
            out << step.cell_labels[i] << '=' << step.cells[i].successes << '/'
                << step.cells[i].n;
        }
        out << '\n';
    }
    return out.str();
}

nlohmann::ordered_json decision_json(const AttributeSchema& schema, const DecisionMatrix& matrix,
                                     const DecisionReport& report) {
    nlohmann::ordered_json doc;
    doc["chosen"] = report.chosen;
    doc["chosen_index"] = report.chosen_index;
    doc["source"] =
        report.source == ProbabilitySource::estimated ? "estimated" : "supplied";
    doc["initial_info"] = report.initial_info.to_string(schema);
    auto actions = nlohmann::ordered_json::array();
    for (std::size_t a = 0; a < matrix.actions.size(); ++a)
        actions.push_back({{"action", matrix.actions[a]},
                           {"expected_utility", report.expected_utilities[a]}});
    doc["actions"] = std::move(actions);
    auto columns = nlohmann::ordered_json::array();
    for (std::size_t j = 0; j < matrix.columns.size(); ++j) {
        nlohmann::ordered_json col;
        col["column"] = matrix.columns[j].to_string(schema);
        col["probability"] = report.probabilities_used[j];
        if (report.estimates) {
            const EstimateResult& r = report.estimates->results[j];
            col["raw"] = report.estimates->raw[j]
                             ? nlohmann::ordered_json(*report.estimates->raw[j])
                             : nlohmann::ordered_json(nullptr);
            col["effective_condition"] = r.effective_condition.to_string(schema);
            col["effective_n"] = r.effective_n;
        }
        columns.push_back(std::move(col));
    }
    doc["columns"] = std::move(columns);
    if (report.estimates) {
        auto estimates = nlohmann::ordered_json::array();
        for (std::size_t j = 0; j < matrix.columns.size(); ++j)
            estimates.push_back(estimate_json(schema, matrix.columns[j], report.initial_info,
                                              report.estimates->results[j]));
        doc["estimates"] = std::move(estimates);
    }
    return doc;
}

std::string decision_tsv(const AttributeSchema& schema, const DecisionMatrix& matrix,
                         const DecisionReport& report) {
    std::ostringstream out;
    out << "chosen\tsource\n"
        << report.chosen << '\t'
        << (report.source == ProbabilitySource::estimated ? "estimated" : "supplied")
        << "\n\n";
    out << "action\texpected_utility\n";
    for (std::size_t a = 0; a < matrix.actions.size(); ++a)
        out << matrix.actions[a] << '\t' << format_double(report.expected_utilities[a]) << '\n';
    out << "\ncolumn\tprobability\traw\teffective_n\teffective_condition\n";
    for (std::size_t j = 0; j < matrix.columns.size(); ++j) {
        out << matrix.columns[j].to_string(schema) << '\t'
            << format_double(report.probabilities_used[j]) << '\t';
        if (report.estimates) {
            const EstimateResult& r = report.estimates->results[j];
            out << (report.estimates->raw[j] ? format_double(*report.estimates->raw[j]) : "")
                << '\t' << r.effective_n << '\t' << r.effective_condition.to_string(schema);
        } else {
            out << "\t\t";
        }
        out << '\n';
    }
    return out.str();
}

nlohmann::ordered_json report_summary_json(const sim::ExperimentReport& report) {
    nlohmann::ordered_json doc;
    doc["experiment"] = report.experiment;
    doc["rng"] = report.rng_algorithm;
    doc["seed"] = report.seed;
    doc["params"] = report.params;
    nlohmann::ordered_json aggregates;
    for (const auto& [name, value] : report.aggregates) aggregates[name] = value;
    doc["aggregates"] = std::move(aggregates);
    return doc;
}

std::string report_trials_tsv(const sim::ExperimentReport& report) {
    std::ostringstream out;
    for (std::size_t i = 0; i < report.trial_columns.size(); ++i) {
        if (i) out << '\t';
        out << report.trial_columns[i];
    }
    out << '\n';
    for (const std::vector<double>& row : report.trial_rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << '\t';
            out << format_double(row[i]);
        }
        out << '\n';
    }
    return out.str();
}

} // namespace poolest::io
