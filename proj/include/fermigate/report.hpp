#pragma once

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fermigate/errors.hpp"
#include "fermigate/verify.hpp"

namespace fermigate {

using Json = nlohmann::ordered_json;

inline constexpr const char* report_schema = "fermigate-report/1";

enum class ReportFormat { Json, Csv };

inline ReportFormat report_format_from_string(const std::string& s) {
    if (s == "json") return ReportFormat::Json;
    if (s == "csv") return ReportFormat::Csv;
    throw InvalidArgument("unknown format '" + s + "' (expected json or csv)");
}

/// 12-significant-digit JSON number; non-finite values become strings.
inline Json json_number(double x) {
    if (!std::isfinite(x)) return format12(x);
    return round12(x);
}

inline double number_from_json(const Json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "nan") return std::nan("");
        if (s == "inf") return HUGE_VAL;
        if (s == "-inf") return -HUGE_VAL;
    }
    throw InvalidArgument("expected a number in report, got " + j.dump());
}

inline Json to_json(const Check& c) {
    Json j;
    j["name"] = c.name;
    j["measured"] = json_number(c.measured);
    j["threshold"] = json_number(c.threshold);
    j["comparison"] = to_string(c.comparison);
    j["verdict"] = c.passed ? "pass" : "fail";
    j["note"] = c.note;
    return j;
}

inline Json to_json(const VerificationReport& r) {
    Json j;
    j["scenario"] = r.scenario;
    j["kind"] = r.kind;
    j["section"] = r.section;
    j["expected"] = r.expected;
    j["overall"] = r.overall() ? "pass" : "fail";
    j["flags"] = Json::array();
    if (r.no_checks()) j["flags"].push_back("no-checks");
    j["error"] = r.error.empty() ? Json(nullptr) : Json(r.error);
    Json env = Json::object();
    for (const auto& [k, v] : r.environment) env[k] = v;
    j["environment"] = std::move(env);
    j["checks"] = Json::array();
    for (const auto& c : r.checks) j["checks"].push_back(to_json(c));
    return j;
}

/// Whole verification document: reports grouped by section in first-seen order.
inline Json to_json(const std::vector<VerificationReport>& reports) {
    Json doc;
    doc["schema"] = report_schema;
    doc["manifest"] = manifest_version;
    bool all = true;
    for (const auto& r : reports) all = all && r.overall();
    doc["overall"] = all ? "pass" : "fail";
    std::size_t passed = 0;
    for (const auto& r : reports) passed += r.overall() ? 1 : 0;
    doc["summary"] = {{"scenarios", reports.size()}, {"passed", passed}, {"failed", reports.size() - passed}};
    doc["flags"] = Json::array();
    bool any_checks = false;
    for (const auto& r : reports) any_checks = any_checks || !r.checks.empty() || !r.error.empty();
    if (!any_checks) doc["flags"].push_back("no-checks");
    Json sections = Json::object();
    for (const auto& r : reports) {
        if (!sections.contains(r.section)) sections[r.section] = Json::array();
        sections[r.section].push_back(to_json(r));
    }
    doc["sections"] = std::move(sections);
    return doc;
}

inline Check check_from_json(const Json& j) {
    Check c;
    c.name = j.at("name").get<std::string>();
    c.measured = number_from_json(j.at("measured"));
    c.threshold = number_from_json(j.at("threshold"));
    const auto cmp = comparison_from_string(j.at("comparison").get<std::string>());
    require(cmp.has_value(), "unknown comparison in report");
    c.comparison = *cmp;
    c.passed = j.at("verdict").get<std::string>() == "pass";
    c.note = j.at("note").get<std::string>();
    return c;
}

inline VerificationReport report_from_json(const Json& j) {
    VerificationReport r;
    r.scenario = j.at("scenario").get<std::string>();
    r.kind = j.at("kind").get<std::string>();
    r.section = j.at("section").get<std::string>();
    r.expected = j.at("expected").get<std::string>();
    if (!j.at("error").is_null()) r.error = j.at("error").get<std::string>();
    for (const auto& [k, v] : j.at("environment").items()) r.environment.emplace_back(k, v.get<std::string>());
    for (const auto& c : j.at("checks")) r.checks.push_back(check_from_json(c));
    return r;
}

/// Inverse of to_json(vector): the reports in document order.
inline std::vector<VerificationReport> reports_from_json(const Json& doc) {
    require(doc.value("schema", std::string{}) == report_schema, "not a verification report document");
    std::vector<VerificationReport> out;
    for (const auto& [section, list] : doc.at("sections").items())
        for (const auto& r : list) out.push_back(report_from_json(r));
    return out;
}

inline std::vector<VerificationReport> parse_reports(const std::string& text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw InvalidArgument(std::string("report is not valid JSON: ") + e.what());
    }
    return reports_from_json(doc);
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline constexpr const char* report_csv_header = "section,scenario,check,measured,threshold,comparison,verdict,note";

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

/// One row per check; a scenario-level error becomes a row named "error".
inline std::string to_csv(const std::vector<VerificationReport>& reports) {
    std::ostringstream os;
    os << report_csv_header << '\n';
    for (const auto& r : reports) {
        const std::string lead = csv_field(r.section) + ',' + csv_field(r.scenario) + ',';
        for (const auto& c : r.checks)
            os << lead << csv_field(c.name) << ',' << format12(c.measured) << ',' << format12(c.threshold) << ','
               << csv_field(to_string(c.comparison)) << ',' << (c.passed ? "pass" : "fail") << ','
               << csv_field(c.note) << '\n';
        if (!r.error.empty()) os << lead << "error,,,,fail," << csv_field(r.error) << '\n';
    }
    return os.str();
}

inline std::string emit_reports(const std::vector<VerificationReport>& reports, ReportFormat format) {
    if (format == ReportFormat::Csv) return to_csv(reports);
    return to_json(reports).dump(2) + "\n";
}

inline std::string emit_report(const VerificationReport& report, ReportFormat format) {
    return emit_reports({report}, format);
}

}  // namespace fermigate
