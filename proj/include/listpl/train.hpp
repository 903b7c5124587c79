#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "listpl/letor_io.hpp"
#include "listpl/ranker_net.hpp"
#include "listpl/types.hpp"

namespace listpl {

enum class LossKind { kListNet, kListMle, kListPl };
enum class Split { kTrain, kValidation, kTest };

std::string to_string(LossKind loss);
std::string to_string(Split split);

/// Accepts "listnet", "listmle", "listpl"; throws std::invalid_argument
/// otherwise.
LossKind loss_from_string(const std::string& name);

struct TrainConfig {
  LossKind loss = LossKind::kListPl;
  int epochs = 1000;
  double learning_rate = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 42;
  Index hidden_width = 80;
  int eval_k = 10;
  Index feature_count = 136;
  int max_grade = 4;
  double psi_scale = 1.0;
  int eval_every = 1;
  bool normalize = true;

  std::string train_path;
  std::string validation_path;
  std::string test_path;
  std::string metrics_path;     // CSV output; empty disables the file
  std::string checkpoint_path;  // empty derives <metrics_path>.checkpoint.json
};

struct MetricsRecord {
  int epoch = 0;
  Split split = Split::kTrain;
  double ndcg_at_k = 0.0;
  double mean_loss = 0.0;
  int k = 10;
};

using MetricsLog = std::vector<MetricsRecord>;

struct TrainResult {
  MetricsLog log;
  ModelParams<double> params;
};

/// Formats a double with the shortest representation that parses back to
/// the identical value; used for every real written to CSV.
std::string format_double(double value);

void write_metrics_header(std::ostream& out);
void write_metrics_record(std::ostream& out, const MetricsRecord& record);

/// Full training run against the files named in the config: parse,
/// normalize, filter untrainable queries, run seeded SGD epochs, record
/// per-split metrics (flushed per epoch), save the final checkpoint.
TrainResult run_training(const TrainConfig& config);

/// Same, on datasets already in memory (as loaded, pre-normalization).
TrainResult run_training(const TrainConfig& config, const Dataset<double>& train,
                         const Dataset<double>& validation, const Dataset<double>& test);

struct CrossValReportRow {
  LossKind loss_a;
  LossKind loss_b;
  std::string selection;  // "final" or "best_validation"
  std::vector<double> fold_scores_a;
  std::vector<double> fold_scores_b;
  double p_value = 1.0;
};

struct CrossValConfig {
  std::string fold_root;  // contains Fold1..Fold<fold_count>/{train,vali,test}.txt
  std::vector<LossKind> losses;
  TrainConfig base;
  std::string report_path;  // CSV output; empty disables the file
  std::string metrics_dir;  // per-run metrics CSVs land here when non-empty
  int fold_count = 5;
};

/// Per-fold test scores keyed by selection rule then loss.
using SelectionScores =
    std::vector<std::pair<std::string, std::map<LossKind, std::vector<double>>>>;

/// Pairwise paired t-tests between losses, one row per unordered pair per
/// selection rule.
std::vector<CrossValReportRow> build_pairwise_report(const SelectionScores& scores);

void write_report_csv(std::ostream& out, const std::vector<CrossValReportRow>& rows);

/// Trains every requested loss on every fold and reports pairwise
/// significance of the per-fold test nDCG, both at the final epoch and at
/// the best-validation epoch.
std::vector<CrossValReportRow> run_cross_validation(const CrossValConfig& config);

}  // namespace listpl
