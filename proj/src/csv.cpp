#include "gfm/csv.hpp"

#include <cstdio>
#include <sstream>

#include "gfm/config_io.hpp"

namespace gfm {

namespace {

const std::vector<const std::vector<double> TimeSeries::*>& column_members() {
    static const std::vector<const std::vector<double> TimeSeries::*> members = {
        &TimeSeries::t,
        &TimeSeries::v_pcc_alpha, &TimeSeries::v_pcc_beta,
        &TimeSeries::v_pcc_a, &TimeSeries::v_pcc_b, &TimeSeries::v_pcc_c,
        &TimeSeries::i_g_alpha, &TimeSeries::i_g_beta,
        &TimeSeries::i_g_d, &TimeSeries::i_g_q,
        &TimeSeries::i_c_alpha, &TimeSeries::i_c_beta,
        &TimeSeries::i_c_d, &TimeSeries::i_c_q,
        &TimeSeries::i_ref_d_pre, &TimeSeries::i_ref_q_pre,
        &TimeSeries::i_ref_d, &TimeSeries::i_ref_q,
        &TimeSeries::p, &TimeSeries::q, &TimeSeries::p_ref, &TimeSeries::q_ref,
        &TimeSeries::omega, &TimeSeries::theta, &TimeSeries::e_mag,
        &TimeSeries::r_v_dyn, &TimeSeries::limiter, &TimeSeries::sf,
        &TimeSeries::fm, &TimeSeries::v_plus, &TimeSeries::v_minus,
    };
    return members;
}

void format_value(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    out += buf;
}

}  // namespace

const std::vector<std::string>& timeseries_columns() {
    static const std::vector<std::string> names = {
        "t",
        "v_pcc_alpha", "v_pcc_beta", "v_pcc_a", "v_pcc_b", "v_pcc_c",
        "i_g_alpha", "i_g_beta", "i_g_d", "i_g_q",
        "i_c_alpha", "i_c_beta", "i_c_d", "i_c_q",
        "i_ref_d_pre", "i_ref_q_pre", "i_ref_d", "i_ref_q",
        "p", "q", "p_ref", "q_ref",
        "omega", "theta", "e_mag", "r_v_dyn",
        "limiter", "sf", "fm", "v_plus", "v_minus",
    };
    return names;
}

std::string timeseries_to_csv(const TimeSeries& ts) {
    const auto& names = timeseries_columns();
    const auto& members = column_members();
    std::string out;
    out.reserve(64 * (ts.size() + 1));
    for (std::size_t c = 0; c < names.size(); ++c) {
        if (c) out += ',';
        out += names[c];
    }
    out += '\n';
    for (std::size_t r = 0; r < ts.size(); ++r) {
        for (std::size_t c = 0; c < members.size(); ++c) {
            if (c) out += ',';
            format_value(out, (ts.*members[c])[r]);
        }
        out += '\n';
    }
    return out;
}

const std::vector<double>& CsvTable::col(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return data[i];
    throw ConfigError("csv column not found: " + name);
}

CsvTable parse_timeseries_csv(const std::string& text, const std::string& origin) {
    CsvTable tab;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
        throw ConfigError(origin + ": empty csv");
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) tab.columns.push_back(cell);
    const auto& expect = timeseries_columns();
    if (tab.columns != expect)
        throw ConfigError(origin + ": csv header does not match the time-series schema");
    tab.data.assign(tab.columns.size(), {});
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::size_t c = 0;
        while (std::getline(ls, cell, ',')) {
            if (c >= tab.columns.size())
                throw ConfigError(origin + ": too many fields on row " + std::to_string(row));
            try {
                tab.data[c].push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ConfigError(origin + ": bad number on row " + std::to_string(row) +
                                  " column " + tab.columns[c]);
            }
            ++c;
        }
        if (c != tab.columns.size())
            throw ConfigError(origin + ": wrong field count on row " + std::to_string(row));
    }
    if (tab.rows() == 0) throw ConfigError(origin + ": csv has no data rows");
    return tab;
}

}  // namespace gfm
