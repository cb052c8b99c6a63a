#include "pollerr/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace pollerr::ingest {

namespace {

using json = nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("cannot write file: " + path);
  out << content;
  if (!out) throw IngestError("write failed: " + path);
}

std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  const std::string text = read_file(path);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool row_started = false;

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        row_started = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        row_started = true;
        break;
      case '\r':
        break;
      case '\n':
        if (row_started || !field.empty()) {
          row.push_back(std::move(field));
          field.clear();
          rows.push_back(std::move(row));
          row.clear();
        }
        row_started = false;
        break;
      default:
        field += c;
        row_started = true;
        break;
    }
  }
  if (in_quotes) throw IngestError("unterminated quoted field in " + path);
  if (row_started || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::optional<std::chrono::sys_days> parse_date(const std::string& text) {
  int y = 0, m = 0, d = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%d-%d-%d%c", &y, &m, &d, &tail) != 3)
    return std::nullopt;
  const std::chrono::year_month_day ymd{
      std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
      std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return std::chrono::sys_days{ymd};
}

std::string format_date(std::chrono::sys_days day) {
  const std::chrono::year_month_day ymd{day};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()));
  return buf;
}

std::string ColumnMapping::column_for(const std::string& field) const {
  const auto it = columns.find(field);
  return it == columns.end() ? field : it->second;
}

ColumnMapping ColumnMapping::from_json_file(const std::string& path) {
  static const std::set<std::string> known = {
      "state",   "year",    "election_date", "field_start",
      "field_end", "rep_pct", "dem_pct",     "sample_size",
      "pollster"};
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw IngestError("bad mapping file " + path + ": " + e.what());
  }
  if (!j.is_object())
    throw IngestError("mapping file must hold a JSON object: " + path);
  ColumnMapping m;
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key))
      throw IngestError("mapping file names unknown field '" + key + "'");
    if (!value.is_string())
      throw IngestError("mapping for '" + key + "' must be a string");
    m.columns[key] = value.get<std::string>();
  }
  return m;
}

namespace {

// Header lookup for one canonical field; -1 when the column is absent.
int find_column(const std::vector<std::string>& header,
                const std::string& column) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == column) return static_cast<int>(i);
  return -1;
}

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
    ++pos;
  if (pos != s.size()) return std::nullopt;
  return v;
}

std::optional<long long> parse_int(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
    ++pos;
  if (pos != s.size()) return std::nullopt;
  return v;
}

}  // namespace

ParseResult parse_polls(const std::string& path, const ColumnMapping& mapping) {
  const auto rows = read_csv(path);
  if (rows.empty()) throw IngestError("empty poll file: " + path);
  const auto& header = rows[0];

  struct Col {
    const char* field;
    bool required;
    int idx;
  };
  Col cols[] = {
      {"state", true, -1},       {"year", true, -1},
      {"election_date", true, -1}, {"field_start", false, -1},
      {"field_end", true, -1},   {"rep_pct", true, -1},
      {"dem_pct", true, -1},     {"sample_size", true, -1},
      {"pollster", false, -1},
  };
  std::string missing;
  for (auto& c : cols) {
    c.idx = find_column(header, mapping.column_for(c.field));
    if (c.idx < 0 && c.required) {
      if (!missing.empty()) missing += ", ";
      missing += mapping.column_for(c.field);
    }
  }
  if (!missing.empty())
    throw IngestError("poll file " + path + " lacks required columns: " +
                      missing);
  auto idx_of = [&cols](const std::string& field) {
    for (const auto& c : cols)
      if (field == c.field) return c.idx;
    return -1;
  };

  ParseResult out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const int rownum = static_cast<int>(r);
    auto cell = [&](const std::string& field) -> std::string {
      const int i = idx_of(field);
      if (i < 0 || static_cast<std::size_t>(i) >= row.size()) return "";
      return row[static_cast<std::size_t>(i)];
    };
    auto reject = [&](const std::string& field, const std::string& reason) {
      out.issues.push_back({rownum, field, reason});
    };

    RawPollRecord rec;
    rec.state = cell("state");
    if (rec.state.empty()) {
      reject("state", "missing state");
      continue;
    }
    const auto year = parse_int(cell("year"));
    if (!year) {
      reject("year", "unparseable year");
      continue;
    }
    rec.year = static_cast<int>(*year);

    const auto edate = parse_date(cell("election_date"));
    if (!edate) {
      reject("election_date", "unparseable date");
      continue;
    }
    rec.election_date = *edate;

    const std::string fs = cell("field_start");
    if (!fs.empty()) {
      const auto d = parse_date(fs);
      if (!d) {
        reject("field_start", "unparseable date");
        continue;
      }
      rec.field_start = *d;
    }
    const auto fend = parse_date(cell("field_end"));
    if (!fend) {
      reject("field_end", "unparseable date");
      continue;
    }
    rec.field_end = *fend;

    const auto rep = parse_double(cell("rep_pct"));
    const auto dem = parse_double(cell("dem_pct"));
    if (!rep || !dem) {
      reject(!rep ? "rep_pct" : "dem_pct", "unparseable percentage");
      continue;
    }
    rec.rep_pct = *rep;
    rec.dem_pct = *dem;

    const auto sample = parse_int(cell("sample_size"));
    if (!sample) {
      reject("sample_size", "unparseable sample size");
      continue;
    }
    rec.sample_size = *sample;
    rec.pollster = cell("pollster");

    // Record-level invariants.
    if (rec.rep_pct < 0.0 || rec.dem_pct < 0.0) {
      reject(rec.rep_pct < 0.0 ? "rep_pct" : "dem_pct",
             "negative percentage");
      continue;
    }
    if (rec.rep_pct + rec.dem_pct == 0.0) {
      reject("rep_pct", "no two-party support");
      continue;
    }
    if (rec.sample_size <= 0) {
      reject("sample_size", "nonpositive sample size");
      continue;
    }
    if (rec.field_end > rec.election_date) {
      reject("field_end", "post-election field date");
      continue;
    }
    if (rec.field_start && *rec.field_start > rec.field_end) {
      reject("field_start", "field window reversed");
      continue;
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

std::vector<ElectionResultRow> parse_results(const std::string& path) {
  const auto rows = read_csv(path);
  if (rows.empty()) throw IngestError("empty results file: " + path);
  const auto& header = rows[0];
  const int si = find_column(header, "state");
  const int yi = find_column(header, "year");
  const int ri = find_column(header, "rep");
  const int di = find_column(header, "dem");
  if (si < 0 || yi < 0 || ri < 0 || di < 0)
    throw IngestError("results file " + path +
                      " must have columns state, year, rep, dem");
  std::vector<ElectionResultRow> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    auto get = [&](int i) -> std::string {
      return static_cast<std::size_t>(i) < row.size()
                 ? row[static_cast<std::size_t>(i)]
                 : "";
    };
    const auto year = parse_int(get(yi));
    const auto rep = parse_double(get(ri));
    const auto dem = parse_double(get(di));
    if (get(si).empty() || !year || !rep || !dem)
      throw IngestError("results file " + path + ": bad row " +
                        std::to_string(r));
    out.push_back({get(si), static_cast<int>(*year), *rep, *dem});
  }
  return out;
}

PollDataset build_dataset(const std::vector<RawPollRecord>& records,
                          const std::vector<ElectionResultRow>& results) {
  PollDataset ds;
  std::map<std::pair<std::string, int>, std::string> contest_of;
  for (const auto& row : results) {
    const auto key = std::make_pair(row.state, row.year);
    if (contest_of.count(key))
      throw IngestError("duplicate result for " + row.state + "/" +
                        std::to_string(row.year));
    const std::string id = row.state + "-" + std::to_string(row.year);
    contest_of[key] = id;
    ds.contests.push_back({id, row.state, row.year,
                           two_party_share(row.rep, row.dem)});
  }

  std::set<std::pair<std::string, int>> missing;
  for (const auto& rec : records)
    if (!contest_of.count({rec.state, rec.year}))
      missing.insert({rec.state, rec.year});
  if (!missing.empty()) {
    std::string msg = "no election result for:";
    for (const auto& [state, year] : missing)
      msg += " " + state + "/" + std::to_string(year);
    throw IngestError(msg);
  }

  for (const auto& rec : records) {
    Poll p;
    p.contest_id = contest_of.at({rec.state, rec.year});
    // Median field day; half-up when the window has an even span.
    const auto start = rec.field_start.value_or(rec.field_end);
    const long t_end = (rec.election_date - rec.field_end).count();
    const long t_start = (rec.election_date - start).count();
    p.t = static_cast<int>(
        std::llround((static_cast<double>(t_start) + t_end) / 2.0));
    p.y = two_party_share(rec.rep_pct, rec.dem_pct);
    const double two_party = (rec.rep_pct + rec.dem_pct) / 100.0;
    p.n = std::max<long long>(
        1, std::llround(static_cast<double>(rec.sample_size) * two_party));
    p.pollster = rec.pollster;
    ds.polls.push_back(std::move(p));
  }
  validate_dataset(ds);
  return ds;
}

void write_polls_csv(const std::string& path,
                     const std::vector<RawPollRecord>& records) {
  std::string out =
      "state,year,election_date,field_start,field_end,rep_pct,dem_pct,"
      "sample_size,pollster\n";
  for (const auto& r : records) {
    out += csv_escape(r.state) + "," + std::to_string(r.year) + ",";
    out += format_date(r.election_date) + ",";
    out += (r.field_start ? format_date(*r.field_start) : "") + ",";
    out += format_date(r.field_end) + ",";
    out += fmt_double(r.rep_pct) + "," + fmt_double(r.dem_pct) + ",";
    out += std::to_string(r.sample_size) + "," + csv_escape(r.pollster) + "\n";
  }
  write_file(path, out);
}

void write_results_csv(const std::string& path,
                       const std::vector<ElectionResultRow>& rows) {
  std::string out = "state,year,rep,dem\n";
  for (const auto& r : rows)
    out += csv_escape(r.state) + "," + std::to_string(r.year) + "," +
           fmt_double(r.rep) + "," + fmt_double(r.dem) + "\n";
  write_file(path, out);
}

void write_issues_csv(const std::string& path,
                      const std::vector<RowIssue>& issues) {
  std::string out = "row,field,reason\n";
  for (const auto& i : issues)
    out += std::to_string(i.row) + "," + csv_escape(i.field) + "," +
           csv_escape(i.reason) + "\n";
  write_file(path, out);
}

void save_dataset(const std::string& path, const PollDataset& dataset) {
  json contests = json::array();
  for (const auto& c : dataset.contests)
    contests.push_back({{"contest_id", c.contest_id},
                        {"state", c.state},
                        {"year", c.year},
                        {"v", c.v}});
  json polls = json::array();
  for (const auto& p : dataset.polls)
    polls.push_back({{"contest_id", p.contest_id},
                     {"t", p.t},
                     {"y", p.y},
                     {"n", p.n},
                     {"pollster", p.pollster}});
  const json j = {{"contests", contests}, {"polls", polls}};
  write_file(path, j.dump(2) + "\n");
}

PollDataset load_dataset(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw IngestError("bad dataset file " + path + ": " + e.what());
  }
  PollDataset ds;
  try {
    for (const auto& c : j.at("contests"))
      ds.contests.push_back({c.at("contest_id").get<std::string>(),
                             c.at("state").get<std::string>(),
                             c.at("year").get<int>(), c.at("v").get<double>()});
    for (const auto& p : j.at("polls"))
      ds.polls.push_back({p.at("contest_id").get<std::string>(),
                          p.at("t").get<int>(), p.at("y").get<double>(),
                          p.at("n").get<long long>(),
                          p.value("pollster", std::string{})});
  } catch (const json::exception& e) {
    throw IngestError("bad dataset file " + path + ": " + e.what());
  }
  validate_dataset(ds);
  return ds;
}

void write_dataset_as_source_csv(const std::string& polls_path,
                                 const std::string& results_path,
                                 const PollDataset& dataset) {
  std::map<std::string, const ElectionContest*> by_id;
  std::vector<ElectionResultRow> results;
  for (const auto& c : dataset.contests) {
    by_id[c.contest_id] = &c;
    results.push_back({c.state, c.year, c.v * 100.0, (1.0 - c.v) * 100.0});
  }
  std::vector<RawPollRecord> records;
  for (const auto& p : dataset.polls) {
    const auto* c = by_id.at(p.contest_id);
    RawPollRecord rec;
    rec.state = c->state;
    rec.year = c->year;
    rec.election_date = std::chrono::sys_days{
        std::chrono::year{c->year} / std::chrono::November /
        std::chrono::day{5}};
    rec.field_end = rec.election_date - std::chrono::days{p.t};
    rec.field_start = rec.field_end;
    rec.rep_pct = p.y * 100.0;
    rec.dem_pct = (1.0 - p.y) * 100.0;
    rec.sample_size = p.n;
    rec.pollster = p.pollster;
    records.push_back(std::move(rec));
  }
  write_polls_csv(polls_path, records);
  write_results_csv(results_path, results);
}

}  // namespace pollerr::ingest
