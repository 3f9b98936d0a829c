#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pass/types.hpp"

namespace pass::io {

struct CsvOptions {
  bool lenient = false;  // skip bad rows (counted) instead of failing
};

struct IngestResult {
  Dataset dataset;
  std::int64_t skipped_rows = 0;
};

/// RFC 4180 CSV with a required header row. Selected columns must parse as
/// finite doubles; in strict mode a bad cell fails with its row number.
IngestResult ingest_csv(const std::string& path,
                        const std::vector<std::string>& predicate_columns,
                        const std::string& aggregate_column,
                        const CsvOptions& options = {});

/// Parses CSV text (exposed for tests).
IngestResult ingest_csv_text(const std::string& text,
                             const std::vector<std::string>& predicate_columns,
                             const std::string& aggregate_column,
                             const CsvOptions& options = {});

}  // namespace pass::io
