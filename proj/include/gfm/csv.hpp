// Time-series CSV emission and ingestion. Fixed column order, '.' decimal
// point, '\n' line endings, locale-independent formatting — identical series
// always serialize to identical bytes.
#pragma once

#include <string>
#include <vector>

#include "gfm/harness.hpp"

namespace gfm {

// Column names in emission order.
const std::vector<std::string>& timeseries_columns();

std::string timeseries_to_csv(const TimeSeries& ts);

// Parsed CSV as named columns (used by the plot command).
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> data;  // data[col][row]

    const std::vector<double>& col(const std::string& name) const;
    std::size_t rows() const { return data.empty() ? 0 : data[0].size(); }
};

// Throws ConfigError on malformed content or a header that does not match
// the time-series schema.
CsvTable parse_timeseries_csv(const std::string& text, const std::string& origin);

}  // namespace gfm
