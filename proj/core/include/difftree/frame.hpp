#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "difftree/stats.hpp"

namespace difftree {

enum class VarKind { numeric, categorical };
enum class VarRole { predictor, response, time, ignore };

struct VariableSpec {
  std::string name;
  VarKind kind = VarKind::numeric;
  VarRole role = VarRole::predictor;
  // Categorical only: the listed order defines the integer coding used by
  // splits (first level codes as 1, second as 2, ...).
  std::vector<std::string> levels;
};

struct Schema {
  std::vector<VariableSpec> vars;
  int response_col = -1;  // exactly one
  int time_col = -1;      // at most one; -1 when absent

  int columns() const { return int(vars.size()); }
  int response_levels() const { return int(vars[std::size_t(response_col)].levels.size()); }
  // Columns usable for splitting: role predictor or time.
  std::vector<int> split_columns() const;
  int column_index(const std::string& name) const;  // -1 when absent

  static Schema validate(std::vector<VariableSpec> vars);
};

// Immutable typed table: one coded double column per variable (categorical
// cells hold 1-based level codes, missing cells NaN), a missing mask, a
// response level per row and a dataset tag per row in [0, groups).
struct Frame {
  std::shared_ptr<const Schema> schema;
  std::vector<std::vector<double>> columns;         // [col][row]
  std::vector<std::vector<std::uint8_t>> missing;   // [col][row]
  std::vector<int> response;                        // level index, 0-based
  std::vector<int> group;                           // dataset tag, 0-based
  int groups = 0;
  std::vector<double> exposures;                    // empty or size == groups

  int rows() const { return int(response.size()); }
  bool is_missing(int col, int row) const { return missing[std::size_t(col)][std::size_t(row)] != 0; }
  double value(int col, int row) const { return columns[std::size_t(col)][std::size_t(row)]; }

  // Shallow-copies the schema, deep-copies the data.
  Frame with_groups(std::vector<int> new_group, int n_groups) const;
};

// How rows are assigned to datasets at load time.
struct GroupRule {
  // Exactly one of the three is active.
  std::string column;               // tag column present in the CSV
  std::vector<double> time_cutoffs; // group g: time <= cutoffs[g]; last group above
  bool per_file = false;            // one dataset per input file
  bool rebase_time = false;         // with time_cutoffs: subtract the group's lower cutoff
};

struct LoadConfig {
  std::vector<VariableSpec> variables;  // may be empty: infer numeric-vs-text
  std::string response;                 // required when variables omit roles
  std::string time_column;              // optional
  std::vector<std::string> missing_tokens = {"", "NA"};
  GroupRule group;
  std::vector<double> exposures;

  static LoadConfig from_json_file(const std::string& path);
  static LoadConfig from_json_text(const std::string& text);
};

// Reads one or more RFC-4180 CSV files into a Frame. With several paths the
// group rule must be per_file (each file is one dataset); otherwise the rule
// decides. Throws std::runtime_error with a descriptive message on schema
// violations (unknown level, missing response cell, duplicate column names,
// a group with zero rows, header mismatch).
Frame load_csv(const std::vector<std::string>& paths, const LoadConfig& config);
Frame load_csv(const std::string& path, const LoadConfig& config);

// Writes the frame back to CSV; group tags go to `group_column` (1-based
// labels), missing cells to the first missing token. load_csv on the result
// with the same variable specs reproduces cells, masks and tags exactly.
void write_csv(const Frame& frame, const std::string& path,
               const std::string& group_column = "group",
               const std::string& missing_token = "NA");

// Tallies response level x dataset counts over `rows` (all rows when empty
// optional). Copies the frame's exposures into the result.
CountMatrix count_matrix(const Frame& frame, const std::vector<int>& rows);
CountMatrix count_matrix(const Frame& frame);

}  // namespace difftree
