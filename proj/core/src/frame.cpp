#include "difftree/frame.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace difftree {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  auto [ptr, ec] = std::from_chars(b, e, out);
  if (ec != std::errc()) return false;
  while (ptr < e && (*ptr == ' ' || *ptr == '\t')) ++ptr;
  return ptr == e;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// RFC-4180 reader: quoted fields, doubled-quote escapes, embedded commas
// and line breaks, optional CR before LF.
std::vector<std::vector<std::string>> read_csv_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool any = false;
  std::size_t i = 0;
  auto end_field = [&]() { record.push_back(field); field.clear(); any = true; };
  auto end_record = [&]() {
    end_field();
    records.push_back(std::move(record));
    record = {};
    any = false;
  };
  while (i < text.size()) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') { field += '"'; i += 2; continue; }
        quoted = false;
        ++i;
      } else {
        field += c;
        ++i;
      }
    } else if (c == '"') {
      quoted = true;
      ++i;
    } else if (c == ',') {
      end_field();
      ++i;
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      end_record();
      i += 2;
    } else if (c == '\n' || c == '\r') {
      end_record();
      ++i;
    } else {
      field += c;
      ++i;
    }
  }
  if (quoted) fail(path + ": unterminated quoted field");
  if (any || !field.empty()) end_record();
  return records;
}

void write_csv_field(std::ostream& out, const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) {
    out << s;
    return;
  }
  out << '"';
  for (char c : s) {
    if (c == '"') out << "\"\"";
    else out << c;
  }
  out << '"';
}

VarKind kind_from_string(const std::string& s) {
  if (s == "numeric") return VarKind::numeric;
  if (s == "categorical" || s == "ordinal-categorical") return VarKind::categorical;
  fail("unknown variable kind: " + s);
}

VarRole role_from_string(const std::string& s) {
  if (s == "predictor") return VarRole::predictor;
  if (s == "response") return VarRole::response;
  if (s == "time") return VarRole::time;
  if (s == "ignore") return VarRole::ignore;
  fail("unknown variable role: " + s);
}

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // [row][col]
  std::vector<int> file_of_row;
};

RawTable read_files(const std::vector<std::string>& paths) {
  RawTable t;
  for (std::size_t f = 0; f < paths.size(); ++f) {
    auto records = read_csv_records(paths[f]);
    if (records.empty()) fail(paths[f] + ": empty file");
    if (f == 0) {
      t.header = records[0];
    } else if (records[0] != t.header) {
      fail(paths[f] + ": header differs from first input file");
    }
    for (std::size_t r = 1; r < records.size(); ++r) {
      if (records[r].size() != t.header.size())
        fail(paths[f] + ": row " + std::to_string(r + 1) + " has " +
             std::to_string(records[r].size()) + " fields, expected " +
             std::to_string(t.header.size()));
      t.rows.push_back(std::move(records[r]));
      t.file_of_row.push_back(int(f));
    }
  }
  std::set<std::string> seen;
  for (const auto& name : t.header)
    if (!seen.insert(name).second) fail("duplicate column name: " + name);
  return t;
}

bool is_missing_token(const std::string& s, const std::vector<std::string>& tokens) {
  return std::find(tokens.begin(), tokens.end(), s) != tokens.end();
}

// Numeric-vs-text detection for columns the config does not describe.
std::vector<VariableSpec> infer_variables(const RawTable& t, const LoadConfig& config) {
  if (config.response.empty()) fail("schema inference requires a response column name");
  std::vector<VariableSpec> specs;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    const std::string& name = t.header[c];
    if (name == config.group.column) continue;
    VariableSpec spec;
    spec.name = name;
    bool numeric = true;
    std::set<std::string> distinct;
    for (const auto& row : t.rows) {
      const std::string& cell = row[c];
      if (is_missing_token(cell, config.missing_tokens)) continue;
      double v;
      if (!parse_double(cell, v)) numeric = false;
      distinct.insert(cell);
    }
    if (name == config.response) {
      spec.role = VarRole::response;
      spec.kind = VarKind::categorical;
      std::vector<std::string> levels(distinct.begin(), distinct.end());
      if (numeric) {
        std::sort(levels.begin(), levels.end(), [](const std::string& a, const std::string& b) {
          double x, y;
          parse_double(a, x);
          parse_double(b, y);
          return x < y;
        });
      }
      spec.levels = std::move(levels);
    } else {
      spec.role = (name == config.time_column) ? VarRole::time : VarRole::predictor;
      if (numeric) {
        spec.kind = VarKind::numeric;
      } else {
        spec.kind = VarKind::categorical;
        spec.levels.assign(distinct.begin(), distinct.end());
      }
    }
    specs.push_back(std::move(spec));
  }
  return specs;
}

}  // namespace

std::vector<int> Schema::split_columns() const {
  std::vector<int> cols;
  for (int c = 0; c < columns(); ++c)
    if (vars[std::size_t(c)].role == VarRole::predictor || vars[std::size_t(c)].role == VarRole::time)
      cols.push_back(c);
  return cols;
}

int Schema::column_index(const std::string& name) const {
  for (int c = 0; c < columns(); ++c)
    if (vars[std::size_t(c)].name == name) return c;
  return -1;
}

Schema Schema::validate(std::vector<VariableSpec> vars) {
  Schema s;
  s.vars = std::move(vars);
  for (int c = 0; c < s.columns(); ++c) {
    const auto& v = s.vars[std::size_t(c)];
    for (int c2 = c + 1; c2 < s.columns(); ++c2)
      if (s.vars[std::size_t(c2)].name == v.name) fail("duplicate column name: " + v.name);
    if (v.kind == VarKind::categorical) {
      std::set<std::string> uniq(v.levels.begin(), v.levels.end());
      if (uniq.size() != v.levels.size()) fail(v.name + ": categorical levels must be unique");
    }
    if (v.role == VarRole::response) {
      if (s.response_col >= 0) fail("more than one response column");
      if (v.kind != VarKind::categorical) fail("response must be categorical");
      if (v.levels.empty()) fail("response must declare at least one level");
      s.response_col = c;
    }
    if (v.role == VarRole::time) {
      if (s.time_col >= 0) fail("more than one time column");
      if (v.kind != VarKind::numeric) fail("time column must be numeric");
      s.time_col = c;
    }
  }
  if (s.response_col < 0) fail("exactly one column must have role=response");
  return s;
}

LoadConfig LoadConfig::from_json_text(const std::string& text) {
  json j = json::parse(text);
  LoadConfig cfg;
  if (j.contains("missing_tokens")) cfg.missing_tokens = j["missing_tokens"].get<std::vector<std::string>>();
  if (j.contains("response")) cfg.response = j["response"].get<std::string>();
  if (j.contains("time_column")) cfg.time_column = j["time_column"].get<std::string>();
  if (j.contains("exposures")) cfg.exposures = j["exposures"].get<std::vector<double>>();
  if (j.contains("group")) {
    const json& g = j["group"];
    if (g.contains("column")) cfg.group.column = g["column"].get<std::string>();
    if (g.contains("time_cutoffs")) cfg.group.time_cutoffs = g["time_cutoffs"].get<std::vector<double>>();
    if (g.contains("per_file")) cfg.group.per_file = g["per_file"].get<bool>();
    if (g.contains("rebase_time")) cfg.group.rebase_time = g["rebase_time"].get<bool>();
  }
  if (j.contains("variables")) {
    for (const json& v : j["variables"]) {
      VariableSpec spec;
      spec.name = v.at("name").get<std::string>();
      if (v.contains("kind")) spec.kind = kind_from_string(v["kind"].get<std::string>());
      if (v.contains("role")) spec.role = role_from_string(v["role"].get<std::string>());
      if (v.contains("levels")) spec.levels = v["levels"].get<std::vector<std::string>>();
      if (!v.contains("role")) {
        if (spec.name == cfg.response) spec.role = VarRole::response;
        if (spec.name == cfg.time_column) spec.role = VarRole::time;
      }
      cfg.variables.push_back(std::move(spec));
    }
  }
  return cfg;
}

LoadConfig LoadConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return from_json_text(text);
  } catch (const json::exception& e) {
    fail(path + ": " + e.what());
  }
}

Frame load_csv(const std::string& path, const LoadConfig& config) {
  return load_csv(std::vector<std::string>{path}, config);
}

Frame load_csv(const std::vector<std::string>& paths, const LoadConfig& config) {
  if (paths.empty()) fail("no input files");
  RawTable table = read_files(paths);
  const int n = int(table.rows.size());

  std::vector<VariableSpec> specs =
      config.variables.empty() ? infer_variables(table, config) : config.variables;
  auto schema = std::make_shared<Schema>(Schema::validate(std::move(specs)));

  // Map schema variables onto CSV columns by name.
  std::vector<int> csv_col(std::size_t(schema->columns()), -1);
  for (int c = 0; c < schema->columns(); ++c) {
    const std::string& name = schema->vars[std::size_t(c)].name;
    auto it = std::find(table.header.begin(), table.header.end(), name);
    if (it == table.header.end()) fail("column not found in CSV header: " + name);
    csv_col[std::size_t(c)] = int(it - table.header.begin());
  }

  Frame frame;
  frame.schema = schema;
  frame.columns.assign(std::size_t(schema->columns()), std::vector<double>(std::size_t(n)));
  frame.missing.assign(std::size_t(schema->columns()), std::vector<std::uint8_t>(std::size_t(n), 0));
  frame.response.resize(std::size_t(n));

  for (int c = 0; c < schema->columns(); ++c) {
    const VariableSpec& var = schema->vars[std::size_t(c)];
    const int src = csv_col[std::size_t(c)];
    for (int r = 0; r < n; ++r) {
      const std::string& cell = table.rows[std::size_t(r)][std::size_t(src)];
      if (is_missing_token(cell, config.missing_tokens)) {
        if (var.role == VarRole::response)
          fail(var.name + ": missing response cell at data row " + std::to_string(r + 1));
        frame.missing[std::size_t(c)][std::size_t(r)] = 1;
        frame.columns[std::size_t(c)][std::size_t(r)] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      if (var.kind == VarKind::numeric) {
        double v;
        if (!parse_double(cell, v))
          fail(var.name + ": cannot parse '" + cell + "' at data row " + std::to_string(r + 1));
        frame.columns[std::size_t(c)][std::size_t(r)] = v;
      } else {
        auto it = std::find(var.levels.begin(), var.levels.end(), cell);
        if (it == var.levels.end())
          fail(var.name + ": unknown level label '" + cell + "' at data row " + std::to_string(r + 1));
        int idx = int(it - var.levels.begin());
        frame.columns[std::size_t(c)][std::size_t(r)] = double(idx + 1);
        if (var.role == VarRole::response) frame.response[std::size_t(r)] = idx;
      }
    }
  }

  // Dataset tags.
  frame.group.assign(std::size_t(n), 0);
  const GroupRule& rule = config.group;
  if (paths.size() > 1 || rule.per_file) {
    if (paths.size() < 2) fail("per-file grouping needs at least two input files");
    frame.group.assign(table.file_of_row.begin(), table.file_of_row.end());
    frame.groups = int(paths.size());
  } else if (!rule.column.empty()) {
    auto it = std::find(table.header.begin(), table.header.end(), rule.column);
    if (it == table.header.end()) fail("group column not found: " + rule.column);
    int gc = int(it - table.header.begin());
    std::vector<std::string> labels;
    for (int r = 0; r < n; ++r) labels.push_back(table.rows[std::size_t(r)][std::size_t(gc)]);
    std::vector<std::string> uniq = labels;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    bool all_numeric = std::all_of(uniq.begin(), uniq.end(), [](const std::string& s) {
      double v;
      return parse_double(s, v);
    });
    if (all_numeric) {
      std::sort(uniq.begin(), uniq.end(), [](const std::string& a, const std::string& b) {
        double x, y;
        parse_double(a, x);
        parse_double(b, y);
        return x < y;
      });
    }
    for (int r = 0; r < n; ++r) {
      auto pos = std::find(uniq.begin(), uniq.end(), labels[std::size_t(r)]);
      frame.group[std::size_t(r)] = int(pos - uniq.begin());
    }
    frame.groups = int(uniq.size());
  } else if (!rule.time_cutoffs.empty()) {
    if (schema->time_col < 0) fail("time-cutoff grouping requires a time column");
    const auto& time = frame.columns[std::size_t(schema->time_col)];
    for (int r = 0; r < n; ++r) {
      if (frame.is_missing(schema->time_col, r)) fail("missing time value at data row " + std::to_string(r + 1));
      int g = 0;
      while (g < int(rule.time_cutoffs.size()) && time[std::size_t(r)] > rule.time_cutoffs[std::size_t(g)]) ++g;
      frame.group[std::size_t(r)] = g;
    }
    frame.groups = int(rule.time_cutoffs.size()) + 1;
    if (rule.rebase_time) {
      auto& t = frame.columns[std::size_t(schema->time_col)];
      for (int r = 0; r < n; ++r) {
        int g = frame.group[std::size_t(r)];
        if (g > 0) t[std::size_t(r)] -= rule.time_cutoffs[std::size_t(g - 1)];
      }
    }
  } else {
    frame.groups = 1;
  }

  if (frame.groups < 2 && !(rule.column.empty() && rule.time_cutoffs.empty() && !rule.per_file))
    fail("grouping produced fewer than two datasets");
  std::vector<int> per_group(std::size_t(frame.groups), 0);
  for (int g : frame.group) ++per_group[std::size_t(g)];
  for (int g = 0; g < frame.groups; ++g)
    if (per_group[std::size_t(g)] == 0) fail("group " + std::to_string(g + 1) + " has zero rows");

  if (!config.exposures.empty()) {
    if (int(config.exposures.size()) != frame.groups)
      fail("exposures must list one value per dataset");
    for (double e : config.exposures)
      if (!(e > 0)) fail("exposures must be positive");
    frame.exposures = config.exposures;
  }
  return frame;
}

void write_csv(const Frame& frame, const std::string& path, const std::string& group_column,
               const std::string& missing_token) {
  const Schema& schema = *frame.schema;
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write " + path);
  for (int c = 0; c < schema.columns(); ++c) {
    if (c) out << ',';
    write_csv_field(out, schema.vars[std::size_t(c)].name);
  }
  out << ',' << group_column << '\n';
  for (int r = 0; r < frame.rows(); ++r) {
    for (int c = 0; c < schema.columns(); ++c) {
      if (c) out << ',';
      const VariableSpec& var = schema.vars[std::size_t(c)];
      if (frame.is_missing(c, r)) {
        write_csv_field(out, missing_token);
      } else if (var.kind == VarKind::numeric) {
        out << format_double(frame.value(c, r));
      } else {
        int idx = int(frame.value(c, r)) - 1;
        write_csv_field(out, var.levels[std::size_t(idx)]);
      }
    }
    out << ',' << (frame.group[std::size_t(r)] + 1) << '\n';
  }
}

Frame Frame::with_groups(std::vector<int> new_group, int n_groups) const {
  Frame f = *this;
  f.group = std::move(new_group);
  f.groups = n_groups;
  if (int(f.exposures.size()) != n_groups) f.exposures.clear();
  return f;
}

CountMatrix count_matrix(const Frame& frame, const std::vector<int>& rows) {
  CountMatrix m(frame.schema->response_levels(), frame.groups);
  for (int r : rows) ++m.at(frame.response[std::size_t(r)], frame.group[std::size_t(r)]);
  m.exposures = frame.exposures;
  return m;
}

CountMatrix count_matrix(const Frame& frame) {
  CountMatrix m(frame.schema->response_levels(), frame.groups);
  for (int r = 0; r < frame.rows(); ++r) ++m.at(frame.response[std::size_t(r)], frame.group[std::size_t(r)]);
  m.exposures = frame.exposures;
  return m;
}

}  // namespace difftree
