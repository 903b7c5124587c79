#include "listpl/train.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "listpl/checkpoint.hpp"
#include "listpl/losses.hpp"
#include "listpl/metrics.hpp"

namespace listpl {

namespace {

// Stream tags so shuffling, ListPL sampling, and per-split evaluation draw
// from independent, reproducible rng streams.
constexpr std::uint64_t kInitStream = 0x1017;
constexpr std::uint64_t kShuffleStream = 0x5205;
constexpr std::uint64_t kSampleStream = 0x9A3E;
constexpr std::uint64_t kEvalStream = 0xE7A1;

void fisher_yates_shuffle(std::vector<Index>& order, Rng& rng) {
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
}

LossResult<double> evaluate_loss(const TrainConfig& config, const VectorX<double>& scores,
                                 const LabelVector& labels, Rng& rng) {
  switch (config.loss) {
    case LossKind::kListNet:
      return listnet_top1(scores, psi_map<double>(labels, config.psi_scale));
    case LossKind::kListMle:
      return listmle(scores, label_sort_permutation(labels));
    case LossKind::kListPl:
      return listpl_loss(scores, labels, rng, config.psi_scale);
  }
  throw std::invalid_argument("unknown loss kind");
}

struct SplitEvaluation {
  double mean_ndcg = 0.0;
  double mean_loss = 0.0;
};

SplitEvaluation evaluate_split(const TrainConfig& config, const ModelParams<double>& params,
                               const Dataset<double>& dataset, Rng& eval_rng) {
  double ndcg_total = 0.0;
  Index ndcg_defined = 0;
  double loss_total = 0.0;
  for (const QueryGroup<double>& group : dataset.groups) {
    const VectorX<double> scores = score_documents(params, group.features);
    if (!scores.allFinite()) {
      throw NumericError("non-finite score during evaluation at query qid:" + group.query_id);
    }
    if (const auto value = ndcg_at_k(scores, group.labels, config.eval_k)) {
      ndcg_total += *value;
      ++ndcg_defined;
    }
    loss_total += evaluate_loss(config, scores, group.labels, eval_rng).loss;
  }
  if (ndcg_defined == 0) throw DataError("evaluation split has no query with a nonzero label");
  SplitEvaluation eval;
  eval.mean_ndcg = ndcg_total / static_cast<double>(ndcg_defined);
  eval.mean_loss = loss_total / static_cast<double>(dataset.num_queries());
  return eval;
}

std::string derive_checkpoint_path(const TrainConfig& config) {
  if (!config.checkpoint_path.empty()) return config.checkpoint_path;
  if (!config.metrics_path.empty()) return config.metrics_path + ".checkpoint.json";
  return {};
}

void validate(const TrainConfig& config) {
  if (config.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (!(config.learning_rate > 0)) throw std::invalid_argument("learning rate must be positive");
  if (config.eval_k < 1) throw std::invalid_argument("eval_k must be >= 1");
  if (config.eval_every < 1) throw std::invalid_argument("eval_every must be >= 1");
  if (config.hidden_width < 1) throw std::invalid_argument("hidden width must be >= 1");
  if (!(config.psi_scale > 0)) throw std::invalid_argument("psi scale must be positive");
}

}  // namespace

std::string to_string(LossKind loss) {
  switch (loss) {
    case LossKind::kListNet: return "listnet";
    case LossKind::kListMle: return "listmle";
    case LossKind::kListPl: return "listpl";
  }
  return "?";
}

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "?";
}

LossKind loss_from_string(const std::string& name) {
  if (name == "listnet") return LossKind::kListNet;
  if (name == "listmle") return LossKind::kListMle;
  if (name == "listpl") return LossKind::kListPl;
  throw std::invalid_argument("unknown loss '" + name + "' (expected listnet|listmle|listpl)");
}

std::string format_double(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

void write_metrics_header(std::ostream& out) { out << "epoch,split,ndcg_at_k,mean_loss\n"; }

void write_metrics_record(std::ostream& out, const MetricsRecord& record) {
  out << record.epoch << ',' << to_string(record.split) << ',' << format_double(record.ndcg_at_k)
      << ',' << format_double(record.mean_loss) << '\n';
}

TrainResult run_training(const TrainConfig& config) {
  if (config.train_path.empty() || config.validation_path.empty() || config.test_path.empty()) {
    throw std::invalid_argument("train/validation/test paths are all required");
  }
  const Dataset<double> train =
      load_letor_file<double>(config.train_path, config.feature_count, config.max_grade);
  const Dataset<double> validation =
      load_letor_file<double>(config.validation_path, config.feature_count, config.max_grade);
  const Dataset<double> test =
      load_letor_file<double>(config.test_path, config.feature_count, config.max_grade);
  return run_training(config, train, validation, test);
}

TrainResult run_training(const TrainConfig& config, const Dataset<double>& train,
                         const Dataset<double>& validation, const Dataset<double>& test) {
  validate(config);
  if (train.num_queries() == 0) throw DataError("training set is empty");

  Dataset<double> train_eval = config.normalize ? normalize_features(train) : train;
  Dataset<double> validation_eval = config.normalize ? normalize_features(validation) : validation;
  Dataset<double> test_eval = config.normalize ? normalize_features(test) : test;
  const FilterResult<double> filtered = filter_trainable(train_eval);
  const Dataset<double>& train_sgd = filtered.dataset;
  if (train_sgd.num_queries() == 0) throw DataError("no trainable query after filtering");

  Rng init_rng(mix_seed(config.seed, kInitStream));
  ModelParams<double> params =
      init_params<double>(config.feature_count, config.hidden_width, init_rng);
  AdamState<double> adam = make_adam_state(params, config.learning_rate, config.beta1,
                                           config.beta2, config.adam_epsilon);

  std::ofstream metrics_file;
  if (!config.metrics_path.empty()) {
    metrics_file.open(config.metrics_path);
    if (!metrics_file) throw DataError("cannot write metrics to '" + config.metrics_path + "'");
    write_metrics_header(metrics_file);
  }

  const std::array<std::pair<Split, const Dataset<double>*>, 3> splits = {{
      {Split::kTrain, &train_eval},
      {Split::kValidation, &validation_eval},
      {Split::kTest, &test_eval},
  }};

  TrainResult result;
  std::vector<Index> order(static_cast<std::size_t>(train_sgd.num_queries()));

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), Index{0});
    Rng shuffle_rng(mix_seed(config.seed, kShuffleStream, static_cast<std::uint64_t>(epoch)));
    fisher_yates_shuffle(order, shuffle_rng);
    Rng sample_rng(mix_seed(config.seed, kSampleStream, static_cast<std::uint64_t>(epoch)));

    for (Index qi : order) {
      const QueryGroup<double>& group = train_sgd.groups[static_cast<std::size_t>(qi)];
      const ForwardTrace<double> trace = forward(params, group.features);
      const VectorX<double> scores = trace.scores();
      if (!scores.allFinite()) {
        throw NumericError("non-finite score at epoch " + std::to_string(epoch) +
                           ", query qid:" + group.query_id);
      }
      const LossResult<double> loss = evaluate_loss(config, scores, group.labels, sample_rng);
      if (!std::isfinite(loss.loss)) {
        throw NumericError("non-finite loss " + format_double(loss.loss) + " at epoch " +
                           std::to_string(epoch) + ", query qid:" + group.query_id);
      }
      const ParamGrads<double> grads = backward(params, trace, loss.grad);
      adam_step(adam, params, grads);
    }

    if (epoch % config.eval_every == 0 || epoch == config.epochs) {
      for (std::size_t si = 0; si < splits.size(); ++si) {
        Rng eval_rng(mix_seed(config.seed, kEvalStream + si, static_cast<std::uint64_t>(epoch)));
        SplitEvaluation eval;
        try {
          eval = evaluate_split(config, params, *splits[si].second, eval_rng);
        } catch (const NumericError& e) {
          throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(epoch) + ", " +
                             to_string(splits[si].first) + " split)");
        }
        MetricsRecord record{epoch, splits[si].first, eval.mean_ndcg, eval.mean_loss,
                             config.eval_k};
        result.log.push_back(record);
        if (metrics_file.is_open()) write_metrics_record(metrics_file, record);
      }
      if (metrics_file.is_open()) metrics_file.flush();
    }
  }

  result.params = std::move(params);
  if (const std::string checkpoint_path = derive_checkpoint_path(config); !checkpoint_path.empty()) {
    save_checkpoint(checkpoint_path,
                    Checkpoint{result.params, config.seed, adam.step_count});
  }
  return result;
}

std::vector<CrossValReportRow> build_pairwise_report(const SelectionScores& scores) {
  std::vector<CrossValReportRow> rows;
  for (const auto& [selection, by_loss] : scores) {
    for (auto a = by_loss.begin(); a != by_loss.end(); ++a) {
      for (auto b = std::next(a); b != by_loss.end(); ++b) {
        CrossValReportRow row;
        row.loss_a = a->first;
        row.loss_b = b->first;
        row.selection = selection;
        row.fold_scores_a = a->second;
        row.fold_scores_b = b->second;
        row.p_value = two_tailed_t_test(a->second, b->second);
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

void write_report_csv(std::ostream& out, const std::vector<CrossValReportRow>& rows) {
  out << "loss_a,loss_b,selection,fold_scores_a,fold_scores_b,p_value\n";
  auto join = [](const std::vector<double>& values) {
    std::string joined;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i > 0) joined += ';';
      joined += format_double(values[i]);
    }
    return joined;
  };
  for (const CrossValReportRow& row : rows) {
    out << to_string(row.loss_a) << ',' << to_string(row.loss_b) << ',' << row.selection << ','
        << join(row.fold_scores_a) << ',' << join(row.fold_scores_b) << ','
        << format_double(row.p_value) << '\n';
  }
}

std::vector<CrossValReportRow> run_cross_validation(const CrossValConfig& config) {
  namespace fs = std::filesystem;
  if (config.losses.empty()) throw std::invalid_argument("crossval: no losses requested");
  if (config.fold_count < 1) throw std::invalid_argument("crossval: fold_count must be >= 1");

  std::map<LossKind, std::vector<double>> final_scores;
  std::map<LossKind, std::vector<double>> best_validation_scores;

  for (int fold = 1; fold <= config.fold_count; ++fold) {
    const fs::path fold_dir = fs::path(config.fold_root) / ("Fold" + std::to_string(fold));
    const fs::path train_path = fold_dir / "train.txt";
    const fs::path vali_path = fold_dir / "vali.txt";
    const fs::path test_path = fold_dir / "test.txt";
    if (!fs::exists(train_path) || !fs::exists(vali_path) || !fs::exists(test_path)) {
      throw DataError("missing fold files under '" + fold_dir.string() + "'");
    }

    for (LossKind loss : config.losses) {
      TrainConfig run = config.base;
      run.loss = loss;
      run.train_path = train_path.string();
      run.validation_path = vali_path.string();
      run.test_path = test_path.string();
      if (!config.metrics_dir.empty()) {
        run.metrics_path = (fs::path(config.metrics_dir) /
                            ("metrics_" + to_string(loss) + "_fold" + std::to_string(fold) + ".csv"))
                               .string();
      } else {
        run.metrics_path.clear();
      }
      run.checkpoint_path.clear();

      std::cerr << "[crossval] fold " << fold << " loss " << to_string(loss) << "\n";
      const TrainResult result = run_training(run);

      double final_test = 0.0;
      double best_validation = -1.0;
      int best_epoch = 0;
      for (const MetricsRecord& record : result.log) {
        if (record.split == Split::kValidation && record.ndcg_at_k > best_validation) {
          best_validation = record.ndcg_at_k;
          best_epoch = record.epoch;
        }
      }
      double best_epoch_test = 0.0;
      for (const MetricsRecord& record : result.log) {
        if (record.split != Split::kTest) continue;
        if (record.epoch == run.epochs) final_test = record.ndcg_at_k;
        if (record.epoch == best_epoch) best_epoch_test = record.ndcg_at_k;
      }
      final_scores[loss].push_back(final_test);
      best_validation_scores[loss].push_back(best_epoch_test);
    }
  }

  const SelectionScores scores = {
      {"final", final_scores},
      {"best_validation", best_validation_scores},
  };
  std::vector<CrossValReportRow> rows = build_pairwise_report(scores);

  if (!config.report_path.empty()) {
    std::ofstream out(config.report_path);
    if (!out) throw DataError("cannot write report to '" + config.report_path + "'");
    write_report_csv(out, rows);
  }
  return rows;
}

}  // namespace listpl
