#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "listpl/checkpoint.hpp"
#include "listpl/train.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;
using listpl::LossKind;
using listpl::Split;
using listpl::TrainConfig;

namespace {

std::string test_dir() {
  const fs::path dir = fs::temp_directory_path() / "listpl_train_tests";
  fs::create_directories(dir);
  return dir.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

TrainConfig planted_config(const synthetic::PlantedFiles& files, const std::string& metrics_path) {
  TrainConfig config;
  config.loss = LossKind::kListPl;
  config.epochs = 30;
  config.learning_rate = 0.01;
  config.seed = 5;
  config.hidden_width = 16;
  config.eval_k = 10;
  config.feature_count = 5;
  config.train_path = files.train;
  config.validation_path = files.validation;
  config.test_path = files.test;
  config.metrics_path = metrics_path;
  return config;
}

}  // namespace

TEST_CASE("one epoch logs exactly one record per split") {
  const auto files = synthetic::write_planted_split(test_dir(), "one_epoch", 3, 8, 4, 4);
  TrainConfig config = planted_config(files, "");
  config.epochs = 1;
  const auto result = listpl::run_training(config);
  REQUIRE(result.log.size() == 3);
  std::set<Split> splits;
  for (const auto& record : result.log) {
    CHECK(record.epoch == 1);
    splits.insert(record.split);
  }
  CHECK(splits.size() == 3);
}

TEST_CASE("eval stride still records the final epoch") {
  const auto files = synthetic::write_planted_split(test_dir(), "stride", 4, 8, 4, 4);
  TrainConfig config = planted_config(files, "");
  config.epochs = 12;
  config.eval_every = 5;
  const auto result = listpl::run_training(config);
  std::set<int> epochs;
  for (const auto& record : result.log) epochs.insert(record.epoch);
  CHECK(epochs == std::set<int>{5, 10, 12});
}

TEST_CASE("metrics log has unique, increasing epochs per split") {
  const auto files = synthetic::write_planted_split(test_dir(), "monotone", 6, 10, 4, 4);
  TrainConfig config = planted_config(files, "");
  config.epochs = 7;
  const auto result = listpl::run_training(config);
  std::set<std::pair<int, Split>> seen;
  std::map<Split, int> last_epoch;
  for (const auto& record : result.log) {
    CHECK(seen.insert({record.epoch, record.split}).second);
    auto [it, inserted] = last_epoch.try_emplace(record.split, record.epoch);
    if (!inserted) {
      CHECK(record.epoch > it->second);
      it->second = record.epoch;
    }
  }
}

TEST_CASE("identical config and seed give byte-identical metrics") {
  const auto files = synthetic::write_planted_split(test_dir(), "determinism", 9, 12, 5, 5);
  const std::string first_path = test_dir() + "/determinism_a.csv";
  const std::string second_path = test_dir() + "/determinism_b.csv";

  TrainConfig config = planted_config(files, first_path);
  config.epochs = 10;
  listpl::run_training(config);
  config.metrics_path = second_path;
  listpl::run_training(config);

  const std::string first = slurp(first_path);
  const std::string second = slurp(second_path);
  CHECK(first == second);
  CHECK(first.starts_with("epoch,split,ndcg_at_k,mean_loss\n"));
  CHECK(first.size() > 40);
}

TEST_CASE("planted data is learnable by every loss") {
  const auto files = synthetic::write_planted_split(test_dir(), "learnable", 7);
  for (const LossKind loss : {LossKind::kListNet, LossKind::kListMle, LossKind::kListPl}) {
    TrainConfig config = planted_config(files, "");
    config.loss = loss;
    config.epochs = 60;
    config.hidden_width = 16;
    const auto result = listpl::run_training(config);
    double final_validation = 0.0;
    for (const auto& record : result.log) {
      if (record.split == Split::kValidation && record.epoch == config.epochs) {
        final_validation = record.ndcg_at_k;
      }
    }
    INFO("loss " << listpl::to_string(loss));
    CHECK(final_validation >= 0.9);
  }
}

TEST_CASE("smoothed training loss is non-increasing for every loss") {
  const auto files = synthetic::write_planted_split(test_dir(), "coherence", 11);
  for (const LossKind loss : {LossKind::kListNet, LossKind::kListMle, LossKind::kListPl}) {
    TrainConfig config = planted_config(files, "");
    config.loss = loss;
    config.epochs = 60;
    const auto result = listpl::run_training(config);

    std::vector<double> train_loss;
    for (const auto& record : result.log) {
      if (record.split == Split::kTrain) train_loss.push_back(record.mean_loss);
    }
    REQUIRE(train_loss.size() == 60);
    std::vector<double> window_means;
    for (std::size_t start = 0; start + 10 <= train_loss.size(); start += 10) {
      double total = 0.0;
      for (std::size_t i = start; i < start + 10; ++i) total += train_loss[i];
      window_means.push_back(total / 10.0);
    }
    for (std::size_t w = 1; w < window_means.size(); ++w) {
      INFO("loss " << listpl::to_string(loss) << " window " << w);
      CHECK(window_means[w] <= window_means[w - 1] + 0.02 * std::max(1.0, window_means[w - 1]));
    }
  }
}

TEST_CASE("numerical blowup aborts with a diagnostic") {
  const auto files = synthetic::write_planted_split(test_dir(), "blowup", 13, 6, 3, 3);
  TrainConfig config = planted_config(files, "");
  config.loss = LossKind::kListMle;
  config.learning_rate = 1e300;
  config.epochs = 3;
  try {
    listpl::run_training(config);
    FAIL_CHECK("expected NumericError");
  } catch (const listpl::NumericError& e) {
    const std::string message = e.what();
    CHECK(message.find("epoch") != std::string::npos);
    CHECK(message.find("qid:") != std::string::npos);
  }
}

TEST_CASE("config validation rejects bad values") {
  const auto files = synthetic::write_planted_split(test_dir(), "invalid", 15, 4, 2, 2);
  TrainConfig config = planted_config(files, "");
  config.epochs = 0;
  CHECK_THROWS_AS(listpl::run_training(config), std::invalid_argument);
  config.epochs = 5;
  config.learning_rate = -1.0;
  CHECK_THROWS_AS(listpl::run_training(config), std::invalid_argument);
  config.learning_rate = 0.01;
  config.train_path = test_dir() + "/does_not_exist.txt";
  CHECK_THROWS_AS(listpl::run_training(config), listpl::DataError);
}

TEST_CASE("checkpoints round-trip bit for bit") {
  const auto files = synthetic::write_planted_split(test_dir(), "checkpoint", 17, 6, 3, 3);
  const std::string metrics_path = test_dir() + "/checkpoint_metrics.csv";
  TrainConfig config = planted_config(files, metrics_path);
  config.epochs = 4;
  const auto result = listpl::run_training(config);

  const std::string checkpoint_path = metrics_path + ".checkpoint.json";
  REQUIRE(fs::exists(checkpoint_path));
  const auto checkpoint = listpl::load_checkpoint(checkpoint_path);
  CHECK(checkpoint.seed == config.seed);
  CHECK(checkpoint.step_count > 0);
  REQUIRE(checkpoint.params.layers.size() == result.params.layers.size());
  for (std::size_t l = 0; l < checkpoint.params.layers.size(); ++l) {
    CHECK((checkpoint.params.layers[l].weight.array() ==
           result.params.layers[l].weight.array()).all());
    CHECK((checkpoint.params.layers[l].bias.array() ==
           result.params.layers[l].bias.array()).all());
  }

  const std::string bogus_path = test_dir() + "/bogus.json";
  std::ofstream(bogus_path) << "{\"format\": \"something-else\", \"version\": 1}";
  CHECK_THROWS_AS(listpl::load_checkpoint(bogus_path), listpl::DataError);
  CHECK_THROWS_AS(listpl::load_checkpoint(test_dir() + "/missing.json"), listpl::DataError);
}

TEST_CASE("pairwise report covers each pair once per selection") {
  listpl::SelectionScores scores;
  std::map<LossKind, std::vector<double>> by_loss;
  by_loss[LossKind::kListNet] = {0.5, 0.6, 0.7};
  by_loss[LossKind::kListMle] = {0.5, 0.6, 0.7};
  by_loss[LossKind::kListPl] = {0.6, 0.7, 0.8};
  scores.push_back({"final", by_loss});
  scores.push_back({"best_validation", by_loss});

  const auto rows = listpl::build_pairwise_report(scores);
  REQUIRE(rows.size() == 6);  // C(3,2) pairs x 2 selection rules
  for (const auto& row : rows) {
    CHECK(row.fold_scores_a.size() == 3);
    CHECK(row.p_value >= 0.0);
    CHECK(row.p_value <= 1.0);
    if (row.loss_a == LossKind::kListNet && row.loss_b == LossKind::kListMle) {
      CHECK(row.p_value == 1.0);  // identical per-fold scores
    }
  }

  std::ostringstream out;
  listpl::write_report_csv(out, rows);
  CHECK(out.str().starts_with("loss_a,loss_b,selection,fold_scores_a,fold_scores_b,p_value\n"));
}

TEST_CASE("cross validation trains per fold and reports pairwise tests") {
  const std::string root = test_dir() + "/folds";
  for (int fold = 1; fold <= 3; ++fold) {
    const fs::path fold_dir = fs::path(root) / ("Fold" + std::to_string(fold));
    fs::create_directories(fold_dir);
    const auto files = synthetic::write_planted_split(fold_dir.string(), "cv",
                                                      100 + static_cast<std::uint64_t>(fold), 8, 4, 4);
    fs::rename(files.train, fold_dir / "train.txt");
    fs::rename(files.validation, fold_dir / "vali.txt");
    fs::rename(files.test, fold_dir / "test.txt");
  }

  listpl::CrossValConfig config;
  config.fold_root = root;
  config.fold_count = 3;
  config.losses = {LossKind::kListMle, LossKind::kListPl};
  config.base = planted_config({}, "");
  config.base.epochs = 5;
  config.report_path = test_dir() + "/report.csv";

  const auto rows = listpl::run_cross_validation(config);
  REQUIRE(rows.size() == 2);  // one pair x two selection rules
  std::set<std::string> selections;
  for (const auto& row : rows) {
    selections.insert(row.selection);
    CHECK(row.fold_scores_a.size() == 3);
    CHECK(row.fold_scores_b.size() == 3);
    CHECK(row.p_value >= 0.0);
    CHECK(row.p_value <= 1.0);
  }
  CHECK(selections == std::set<std::string>{"final", "best_validation"});

  const std::string report = slurp(config.report_path);
  CHECK(report.starts_with("loss_a,loss_b,selection,fold_scores_a,fold_scores_b,p_value\n"));

  listpl::CrossValConfig missing = config;
  missing.fold_count = 4;
  CHECK_THROWS_AS(listpl::run_cross_validation(missing), listpl::DataError);
}
