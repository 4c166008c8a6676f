#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "frlbench/csv.hpp"
#include "frlbench/errors.hpp"
#include "frlbench/tabular.hpp"

namespace frlbench::ingest {

// ---------------------------------------------------------------------------
// ACS PUMS person records

// Row filter, applied conjunctively. Bounds follow the literal reading:
// 16 < age < 90, income > 100, hours >= 1, weight >= 1.
struct AcsFilterSpec {
    double age_above = 16;
    double age_below = 90;
    double income_above = 100;
    double min_hours = 1;
    double min_weight = 1;

    bool keep(double age, double income, double hours, double weight) const {
        return age > age_above && age < age_below && income > income_above && hours >= min_hours &&
               weight >= min_weight;
    }
};

struct AcsColumns {
    std::vector<std::string> features = {"AGEP", "ANC",  "CIT",      "COW",   "DEAR", "DEYE",
                                         "DIS",  "DREM", "ESP",      "JWTR",  "MAR",  "NATIVITY",
                                         "RAC1P", "RELP", "SCHL",    "WKHP",  "PUMA", "POWPUMA"};
    // Kept as numeric; every other feature is one-hot expanded.
    std::vector<std::string> numeric = {"AGEP", "SCHL", "WKHP"};
    std::string sex = "SEX";
    std::string age = "AGEP";
    std::string income = "PINCP";
    std::string earnings = "PERNP";
    std::string travel_time = "JWMNP";
    std::string weeks_worked = "WKW";
    std::string hours = "WKHP";
    std::string weight = "PWGTP";
};

// Label names produced by ingest_acs; the first is the proxy.
inline const std::vector<std::string>& acs_task_names() {
    static const std::vector<std::string> names = {"PINCP_50K", "PINCP_30K", "PERNP", "JWMNP", "WKW"};
    return names;
}

// Blank PUMS cells mean "not applicable": categorical blanks become code 0,
// blank earnings/travel time/weeks give label 0, and blank filter inputs fail
// the filter. A blank numeric feature on a kept row is an error.
inline Dataset ingest_acs(const std::string& path, const AcsFilterSpec& spec = {}, const AcsColumns& cols = {}) {
    std::vector<std::string> wanted = cols.features;
    for (const auto* c : {&cols.sex, &cols.income, &cols.earnings, &cols.travel_time, &cols.weeks_worked, &cols.weight})
        if (std::find(wanted.begin(), wanted.end(), *c) == wanted.end()) wanted.push_back(*c);
    csv::ReadOptions opts;
    opts.blank_value = std::numeric_limits<double>::quiet_NaN();
    const auto raw = csv::read_columns(path, wanted, opts);

    const auto& age = raw.at(cols.age);
    const auto& income = raw.at(cols.income);
    const auto& hours = raw.at(cols.hours);
    const auto& weight = raw.at(cols.weight);
    const auto& sex = raw.at(cols.sex);
    const auto& earnings = raw.at(cols.earnings);
    const auto& travel = raw.at(cols.travel_time);
    const auto& weeks = raw.at(cols.weeks_worked);

    std::vector<std::size_t> kept;
    for (std::size_t r = 0; r < raw.rows; ++r)
        if (spec.keep(age[r], income[r], hours[r], weight[r])) kept.push_back(r);
    if (kept.empty()) throw DataError(path + ": no rows pass the ACS filter");

    auto is_numeric = [&](const std::string& c) {
        return std::find(cols.numeric.begin(), cols.numeric.end(), c) != cols.numeric.end();
    };
    Dataset d;
    d.feature_names = cols.features;
    d.sensitive_name = cols.sex;
    d.n_groups = 2;
    d.features = Matrix(kept.size(), cols.features.size());
    for (std::size_t c = 0; c < cols.features.size(); ++c) {
        const auto& col = raw.at(cols.features[c]);
        const bool numeric = is_numeric(cols.features[c]);
        for (std::size_t i = 0; i < kept.size(); ++i) {
            double v = col[kept[i]];
            if (std::isnan(v)) {
                if (numeric) throw MissingValueError(kept[i] + 1, cols.features[c]);
                v = 0.0;
            }
            d.features(i, c) = v;
        }
    }
    d.sensitive.resize(kept.size());
    std::vector<Labels> y(acs_task_names().size(), Labels(kept.size()));
    auto above = [](double v, double t) { return !std::isnan(v) && v > t ? 1 : 0; };
    for (std::size_t i = 0; i < kept.size(); ++i) {
        const std::size_t r = kept[i];
        if (sex[r] != 1.0 && sex[r] != 2.0)
            throw ParseError(r + 1, cols.sex, std::isnan(sex[r]) ? "" : csv::format_number(sex[r]));
        d.sensitive[i] = static_cast<int>(sex[r]) - 1;
        y[0][i] = above(income[r], 50000);
        y[1][i] = above(income[r], 30000);
        y[2][i] = above(earnings[r], 70000);
        y[3][i] = above(travel[r], 20);
        y[4][i] = weeks[r] == 1.0 ? 1 : 0;
    }
    for (std::size_t t = 0; t < y.size(); ++t) d.tasks.emplace(acs_task_names()[t], std::move(y[t]));

    std::vector<std::string> categorical;
    for (const auto& c : cols.features)
        if (!is_numeric(c)) categorical.push_back(c);
    d = one_hot(d, categorical);
    d.validate();
    return d;
}

// ---------------------------------------------------------------------------
// Heritage Health per-patient table

inline const std::vector<std::string>& health_feature_columns() {
    static const std::vector<std::string> cols = {
        "LabCount_total", "LabCount_months", "DrugCount_total", "DrugCount_months", "no_Claims", "no_Providers",
        "no_Vendors", "no_PCPs", "PayDelay_total", "PayDelay_max", "PayDelay_min",
        "Specialty=Anesthesiology", "Specialty=Diagnostic Imaging", "Specialty=Emergency",
        "Specialty=General Practice", "Specialty=Internal", "Specialty=Laboratory",
        "Specialty=Obstetrics and Gynecology", "Specialty=Other", "Specialty=Pathology", "Specialty=Pediatrics",
        "Specialty=Rehabilitation", "Specialty=Specialty_?", "Specialty=Surgery", "ProcedureGroup=ANES",
        "ProcedureGroup=EM", "ProcedureGroup=MED", "ProcedureGroup=PL", "ProcedureGroup=ProcedureGroup_?",
        "ProcedureGroup=RAD", "ProcedureGroup=SAS", "ProcedureGroup=SCS", "ProcedureGroup=SDS",
        "ProcedureGroup=SEOA", "ProcedureGroup=SGS", "ProcedureGroup=SIS", "ProcedureGroup=SMCD",
        "ProcedureGroup=SMS", "ProcedureGroup=SNS", "ProcedureGroup=SO", "ProcedureGroup=SRS", "ProcedureGroup=SUS",
        "PlaceSvc=Ambulance", "PlaceSvc=Home", "PlaceSvc=Independent Lab", "PlaceSvc=Inpatient Hospital",
        "PlaceSvc=Office", "PlaceSvc=Other", "PlaceSvc=Outpatient Hospital", "PlaceSvc=PlaceSvc_?",
        "PlaceSvc=Urgent Care", "Sex"};
    return cols;
}

inline const std::vector<std::string>& health_condition_columns() {
    static const std::vector<std::string> cols = {"MSC2a3", "METAB3", "ARTHSPIN", "NEUMENT"};
    return cols;
}

struct HealthSpec {
    std::string age_column = "Age";
    double age_threshold = 60;  // sensitive = 1[age >= threshold]
    std::string proxy_column = "max_CharlsonIndex";
};

inline Dataset ingest_health(const std::string& path, const HealthSpec& spec = {}) {
    std::vector<std::string> wanted = health_feature_columns();
    wanted.push_back(spec.age_column);
    wanted.push_back(spec.proxy_column);
    for (const auto& c : health_condition_columns()) wanted.push_back(c);
    const auto raw = csv::read_columns(path, wanted);

    Dataset d;
    d.feature_names = health_feature_columns();
    d.sensitive_name = spec.age_column;
    d.n_groups = 2;
    d.features = Matrix(raw.rows, d.feature_names.size());
    for (std::size_t c = 0; c < d.feature_names.size(); ++c)
        for (std::size_t r = 0; r < raw.rows; ++r) d.features(r, c) = raw.columns[c][r];

    const auto& age = raw.at(spec.age_column);
    d.sensitive.resize(raw.rows);
    for (std::size_t r = 0; r < raw.rows; ++r) d.sensitive[r] = age[r] >= spec.age_threshold ? 1 : 0;

    const auto& charlson = raw.at(spec.proxy_column);
    Labels proxy(raw.rows);
    for (std::size_t r = 0; r < raw.rows; ++r) proxy[r] = charlson[r] > 0.0 ? 1 : 0;
    d.tasks.emplace(spec.proxy_column, std::move(proxy));
    for (const auto& c : health_condition_columns()) {
        const auto& col = raw.at(c);
        Labels y(raw.rows);
        for (std::size_t r = 0; r < raw.rows; ++r) {
            if (col[r] != 0.0 && col[r] != 1.0) throw NonBinaryColumnError(c, r + 1);
            y[r] = static_cast<int>(col[r]);
        }
        d.tasks.emplace(c, std::move(y));
    }
    d.validate();
    return d;
}

}  // namespace frlbench::ingest
