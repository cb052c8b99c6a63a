#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pollerr/domain.hpp"

namespace pollerr::ingest {

// One poll row as it appears in source files, before joining to results.
struct RawPollRecord {
  std::string state;
  int year = 0;
  std::chrono::sys_days election_date{};
  std::optional<std::chrono::sys_days> field_start;
  std::chrono::sys_days field_end{};
  double rep_pct = 0.0;
  double dem_pct = 0.0;
  long long sample_size = 0;
  std::string pollster;  // empty = unknown

  bool operator==(const RawPollRecord&) const = default;
};

struct RowIssue {
  int row = 0;  // 1-based data row (header excluded)
  std::string field;
  std::string reason;
};

// Maps canonical RawPollRecord field names to source column headers.
// Unmapped fields default to their canonical names.
struct ColumnMapping {
  std::map<std::string, std::string> columns;

  std::string column_for(const std::string& field) const;
  static ColumnMapping identity() { return {}; }
  // JSON object {canonical field: source column}; unknown canonical
  // field names are fatal.
  static ColumnMapping from_json_file(const std::string& path);
};

struct ParseResult {
  std::vector<RawPollRecord> records;
  std::vector<RowIssue> issues;
};

// Reads a delimited UTF-8 poll file (RFC-4180 quoting, ISO-8601 dates).
// Rows violating record invariants are excluded and reported as issues;
// unreadable files and missing required columns throw IngestError.
ParseResult parse_polls(const std::string& path,
                        const ColumnMapping& mapping = {});

struct ElectionResultRow {
  std::string state;
  int year = 0;
  double rep = 0.0;  // votes or percentage; only the ratio matters
  double dem = 0.0;
};

// Reads official results (columns: state, year, rep, dem).
std::vector<ElectionResultRow> parse_results(const std::string& path);

// Joins polls to contests: y via two-party share, n rescaled to two-party
// respondents (half-up, floor 1), t via the median-field-day rule.
// Contests with zero polls are retained. Missing (state, year) results
// are fatal, listing every missing pair.
PollDataset build_dataset(const std::vector<RawPollRecord>& records,
                          const std::vector<ElectionResultRow>& results);

void write_polls_csv(const std::string& path,
                     const std::vector<RawPollRecord>& records);
void write_results_csv(const std::string& path,
                       const std::vector<ElectionResultRow>& rows);
void write_issues_csv(const std::string& path,
                      const std::vector<RowIssue>& issues);

// Canonical dataset serialization (JSON, full double precision).
void save_dataset(const std::string& path, const PollDataset& dataset);
PollDataset load_dataset(const std::string& path);

// Re-expresses a dataset in the source CSV shape (poll file + results
// file) for end-to-end pipeline tests: election day is taken as Nov 5 of
// the contest year, field dates reconstructed from t.
void write_dataset_as_source_csv(const std::string& polls_path,
                                 const std::string& results_path,
                                 const PollDataset& dataset);

// "YYYY-MM-DD" -> civil day; empty optional on malformed/invalid dates.
std::optional<std::chrono::sys_days> parse_date(const std::string& text);
std::string format_date(std::chrono::sys_days day);

// Minimal RFC-4180 reader: quoted fields, "" escapes, embedded commas and
// newlines, CR/LF tolerant. Returns rows of fields.
std::vector<std::vector<std::string>> read_csv(const std::string& path);
std::string csv_escape(const std::string& field);

}  // namespace pollerr::ingest
