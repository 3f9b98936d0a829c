#include "pass/csv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace pass::io {

namespace {

// One RFC 4180 record (quoted fields may contain commas, escaped quotes and
// newlines). Returns false at end of input.
bool read_record(const std::string& text, std::size_t& pos,
                 std::vector<std::string>& fields) {
  fields.clear();
  if (pos >= text.size()) return false;
  std::string field;
  bool quoted = false;
  while (pos < text.size()) {
    const char c = text[pos];
    if (quoted) {
      if (c == '"') {
        if (pos + 1 < text.size() && text[pos + 1] == '"') {
          field.push_back('"');
          pos += 2;
        } else {
          quoted = false;
          ++pos;
        }
      } else {
        field.push_back(c);
        ++pos;
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
      ++pos;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      ++pos;
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && pos + 1 < text.size() && text[pos + 1] == '\n') ++pos;
      ++pos;
      fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(c);
      ++pos;
    }
  }
  fields.push_back(std::move(field));
  return true;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE) return false;
  return std::isfinite(out);
}

}  // namespace

IngestResult ingest_csv_text(const std::string& text,
                             const std::vector<std::string>& predicate_columns,
                             const std::string& aggregate_column,
                             const CsvOptions& options) {
  if (predicate_columns.empty()) throw Error("ingest: no predicate columns");

  std::size_t pos = 0;
  std::vector<std::string> fields;
  if (!read_record(text, pos, fields))
    throw Error("ingest: missing header row");

  const auto column_index = [&](const std::string& name) {
    for (std::size_t i = 0; i < fields.size(); ++i)
      if (fields[i] == name) return i;
    throw Error("ingest: column not found: " + name);
  };
  std::vector<std::size_t> pred_idx;
  for (const auto& name : predicate_columns)
    pred_idx.push_back(column_index(name));
  const std::size_t agg_idx = column_index(aggregate_column);
  const std::size_t ncols = fields.size();

  IngestResult res{Dataset(static_cast<int>(predicate_columns.size())), 0};
  std::vector<double> pred(predicate_columns.size());
  std::int64_t row = 1;  // header was row 1
  while (read_record(text, pos, fields)) {
    ++row;
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    bool ok = fields.size() == ncols;
    double value = 0.0;
    if (ok) {
      for (std::size_t j = 0; ok && j < pred_idx.size(); ++j)
        ok = parse_double(fields[pred_idx[j]], pred[j]);
      ok = ok && parse_double(fields[agg_idx], value);
    }
    if (!ok) {
      if (options.lenient) {
        ++res.skipped_rows;
        continue;
      }
      std::ostringstream msg;
      msg << "ingest: bad row " << row;
      throw Error(msg.str());
    }
    res.dataset.add(pred, value);
  }
  if (res.dataset.size() == 0) throw Error("ingest: empty dataset");
  return res;
}

IngestResult ingest_csv(const std::string& path,
                        const std::vector<std::string>& predicate_columns,
                        const std::string& aggregate_column,
                        const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("ingest: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return ingest_csv_text(text, predicate_columns, aggregate_column, options);
}

}  // namespace pass::io
