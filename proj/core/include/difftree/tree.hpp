#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "difftree/frame.hpp"
#include "difftree/stats.hpp"

namespace difftree {

struct Surrogate {
  int variable = -1;
  double threshold = 0.0;
  bool flipped = false;        // true: (value <= threshold) routes to the primary's right child
  std::int64_t agreement = 0;  // rows, among those complete in both variables, routed alike
};

// Univariate binary split condition. Rows with value <= threshold go left.
// Categorical thresholds live on the 1-based integer level coding.
struct Split {
  int variable = -1;
  double threshold = 0.0;
  std::vector<Surrogate> surrogates;  // sorted by agreement, descending
  bool fallback_left = true;          // direction when every relevant value is missing
};

enum class PruneRule { pmin, cost_complexity, none };

struct GrowConfig {
  int min_child_total = 0;  // 0 resolves to 5c at grow time
  double gamma = 2.0;       // missing-value p-value adjustment weight
  double p_cut = 1e-6;      // subtree cut threshold for pmin pruning
  int max_surrogates = 5;
  std::optional<double> alpha;  // cost-complexity penalty, required by that rule
  PruneRule prune_rule = PruneRule::pmin;
  AtomicModel atomic = AtomicModel::poisson;

  int resolved_min_child(int levels) const {
    return min_child_total > 0 ? min_child_total : 5 * levels;
  }
};

struct Node {
  int id = 0;
  int depth = 0;
  CountMatrix counts;
  TestResult test;                   // atomic homogeneity test on this node's counts
  std::optional<Split> split;        // absent iff terminal
  std::unique_ptr<Node> left, right;
  std::vector<int> rows;             // node row subset (frame row indices)

  // Smallest atomic log-p over the subtree's terminal nodes (equals this
  // node's own log-p when terminal); maintained through pruning.
  double pmin_subtree_log = 0.0;
  // Terminal-model aggregates of the subtree, for cost-complexity pruning.
  double subtree_W = 0.0;
  int subtree_dof = 0;

  bool terminal() const { return !split.has_value(); }
};

struct DiffTree {
  std::unique_ptr<Node> root;
  // Candidate splits evaluated during growing, including inside subtrees
  // pruned later; pruning itself adds nothing.
  long test_count = 0;
  // Smallest atomic p over every node created while growing (recorded
  // before any pruning decision).
  double min_p = 1.0;
  double min_log_p = 0.0;
  GrowConfig config;
  std::shared_ptr<const Schema> schema;
  int levels = 0;
  int datasets = 0;
  int nodes_grown = 0;

  int terminal_count() const;
  // Terminal node each row of `frame` reaches under route().
  std::vector<int> assign(const Frame& frame) const;
  // Rows of `frame` whose routing path passes through node `id`.
  std::vector<int> match_rows(const Frame& frame, int id) const;
  const Node* find(int id) const;
};

// Candidate thresholds for one variable at a node: every midpoint between
// consecutive distinct non-missing values pooled over all datasets, keeping
// only candidates whose children would hold at least min_child_total of the
// non-missing rows.
std::vector<double> enumerate_splits(const Frame& frame, const std::vector<int>& rows,
                                     int variable, int min_child_total);

// Two-child subtree statistic for a split: W(left) + W(right) over the rows
// non-missing in the split variable, dof twice the atomic dof. Throws when a
// child is empty after missing-row exclusion.
TestResult split_statistic(const Frame& frame, const std::vector<int>& rows, const Split& split,
                           AtomicModel model = AtomicModel::poisson);

struct VariableSearch {
  int variable = -1;
  long candidates = 0;       // admissible thresholds evaluated
  int n_complete = 0;        // node rows with the variable present
  double best_W = -1.0;
  double best_threshold = 0.0;
  double log_p_star = 0.0;   // log p of the best candidate
  double log_p_tilde = 0.0;  // missing-value adjusted log p
};

struct SplitChoice {
  Split split;
  double best_W = 0.0;
  long candidates_evaluated = 0;  // summed over variables; the node's contribution to m
  std::vector<VariableSearch> by_variable;
};

// Primary split selection. Without missing values among the usable
// variables this is the argmax of the subtree statistic; with missing
// values present, each variable's best p is inflated by
// gamma * sqrt(p(1-p)/n_k) and the variable with the smallest adjusted
// value wins. Ties break to the lowest variable index, then the smallest
// threshold. Returns nullopt when no admissible candidate exists.
std::optional<SplitChoice> choose_primary_split(const Frame& frame, const std::vector<int>& rows,
                                                const GrowConfig& config);

// Ordered surrogate list for a chosen primary split: per other variable the
// threshold and direction pairing that agree with the primary on the most
// co-observed rows, kept only when strictly better than sending everything
// to the primary's larger child.
std::vector<Surrogate> find_surrogates(const Frame& frame, const std::vector<int>& rows,
                                       const Split& primary, int max_surrogates);

enum class Side { left, right };

// Routes one row: primary comparison when the value is present, else the
// first usable surrogate, else the fallback direction.
Side route(const Frame& frame, int row, const Split& split);

// Grows a differential tree (top-down recursive splitting, then the
// configured bottom-up pruning applied as the recursion unwinds).
DiffTree grow(const Frame& frame, const GrowConfig& config = {});

// Bottom-up pruning passes, usable standalone on a tree grown with
// prune_rule=none. Both recurse into children first.
void prune_pmin(Node& node, double p_cut);
void prune_cost_complexity(Node& node, double alpha);

// Indented text rendering; p-values below 1e-5 print as "***".
std::string render_text(const DiffTree& tree);

// Structured JSON report with exact values, the effective configuration and
// the test count; parse_report inverts it (row subsets are not serialized).
std::string render_json(const DiffTree& tree);
DiffTree parse_report(const std::string& json_text);

}  // namespace difftree
