#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "listpl/train.hpp"

namespace {

// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

void add_shared_options(CLI::App& cmd, listpl::TrainConfig& config) {
  cmd.add_option("--epochs", config.epochs, "Training epochs")->check(CLI::PositiveNumber);
  cmd.add_option("--lr", config.learning_rate, "ADAM learning rate")->check(CLI::PositiveNumber);
  cmd.add_option("--seed", config.seed, "Base rng seed");
  cmd.add_option("--hidden", config.hidden_width, "Hidden layer width")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--k", config.eval_k, "nDCG cutoff")->check(CLI::PositiveNumber);
  cmd.add_option("--features", config.feature_count, "Feature vector dimension")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--max-grade", config.max_grade, "Largest valid relevance grade")
      ->check(CLI::NonNegativeNumber);
  cmd.add_option("--psi-scale", config.psi_scale, "Scale applied to labels before exp")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--eval-every", config.eval_every, "Epoch stride between evaluations")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--beta1", config.beta1, "ADAM beta1");
  cmd.add_option("--beta2", config.beta2, "ADAM beta2");
  cmd.add_option("--adam-eps", config.adam_epsilon, "ADAM epsilon");
  cmd.add_flag("--no-normalize", [&config](std::int64_t) { config.normalize = false; },
               "Skip per-query min-max feature normalization");
}

int run_train(const listpl::TrainConfig& config) {
  const listpl::TrainResult result = listpl::run_training(config);
  for (const listpl::MetricsRecord& record : result.log) {
    if (record.epoch == config.epochs) {
      std::cout << listpl::to_string(record.split) << " ndcg@" << record.k << " "
                << listpl::format_double(record.ndcg_at_k) << " mean_loss "
                << listpl::format_double(record.mean_loss) << "\n";
    }
  }
  std::cerr << "metrics written to " << config.metrics_path << "\n";
  return kExitOk;
}

int run_crossval(const listpl::CrossValConfig& config) {
  const auto rows = listpl::run_cross_validation(config);
  listpl::write_report_csv(std::cout, rows);
  std::cerr << "report written to " << config.report_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"List-wise learning to rank on LETOR data: ListNet (top-1), "
               "ListMLE, and ListPL losses over a ReLU scoring network"};
  app.require_subcommand(1);

  listpl::TrainConfig train_config;
  std::string loss_name = "listpl";

  CLI::App* train = app.add_subcommand("train", "Train one ranker and log per-epoch metrics");
  train->add_option("--train", train_config.train_path, "Training LETOR file")->required();
  train->add_option("--vali", train_config.validation_path, "Validation LETOR file")->required();
  train->add_option("--test", train_config.test_path, "Test LETOR file")->required();
  train->add_option("--loss", loss_name, "listnet|listmle|listpl");
  train->add_option("--out", train_config.metrics_path, "Metrics CSV output path")->required();
  train->add_option("--checkpoint", train_config.checkpoint_path,
                    "Model checkpoint path (default <out>.checkpoint.json)");
  add_shared_options(*train, train_config);

  listpl::CrossValConfig crossval_config;
  std::vector<std::string> crossval_losses = {"listnet", "listmle", "listpl"};

  CLI::App* crossval =
      app.add_subcommand("crossval", "Train each loss on Fold1..Fold5 and report pairwise t-tests");
  crossval->add_option("--folds", crossval_config.fold_root, "Directory containing Fold1..Fold5")
      ->required();
  crossval->add_option("--losses", crossval_losses, "Comma-separated losses to compare")
      ->delimiter(',');
  crossval->add_option("--out", crossval_config.report_path, "Report CSV output path")->required();
  crossval->add_option("--metrics-dir", crossval_config.metrics_dir,
                       "Directory for per-run metrics CSVs");
  crossval->add_option("--fold-count", crossval_config.fold_count, "Number of folds")
      ->check(CLI::PositiveNumber);
  add_shared_options(*crossval, crossval_config.base);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (train->parsed()) {
      train_config.loss = listpl::loss_from_string(loss_name);
      return run_train(train_config);
    }
    for (const std::string& name : crossval_losses) {
      crossval_config.losses.push_back(listpl::loss_from_string(name));
    }
    return run_crossval(crossval_config);
  } catch (const listpl::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const listpl::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
