#pragma once

#include <filesystem>
#include <string>

#include "nimai/dataset.hpp"

namespace nimai {

// CSV is the only ingestion format: header row of feature names followed by
// the label column, '.' decimal separator, UTF-8. Errors carry 1-based
// row/column positions.
Dataset ingest_csv(const std::filesystem::path& path, const Schema& schema);

// Inverse of ingest_csv; label column holds class names. Floats are written
// with std::to_chars shortest form so a write/read round trip is exact.
void write_csv(const std::filesystem::path& path, const Dataset& data);

std::string format_double(double v);

}  // namespace nimai
