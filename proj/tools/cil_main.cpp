// Command-line entry point: run / offline / similarity / synth / split / report.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "cil/embedding_io.hpp"
#include "cil/harness.hpp"
#include "cil/report.hpp"
#include "cil/schedule.hpp"
#include "cil/similarity.hpp"
#include "cil/synthetic.hpp"

namespace {

struct TrainOverrides {
  std::optional<double> lr;
  std::optional<int> epochs;
  std::optional<int> batch_size;
  std::optional<std::string> optimizer;
};

void add_run_options(CLI::App* cmd, std::string& method, std::string& head, std::uint64_t& seed,
                     double& regularizer, unsigned& threads, TrainOverrides& train) {
  cmd->add_option("--method", method, "na | fsa_full | fsa_film")->check(CLI::IsMember({"na", "fsa", "fsa_full", "fsa_film"}));
  cmd->add_option("--head", head, "lda | ncm")->check(CLI::IsMember({"lda", "ncm"}));
  cmd->add_option("--seed", seed, "seed for shot sampling and adapter training");
  cmd->add_option("--regularizer", regularizer, "covariance regularizer added to the diagonal")->check(CLI::PositiveNumber);
  cmd->add_option("--threads", threads, "scoring threads (default: $CIL_THREADS or 1)");
  cmd->add_option("--lr", train.lr, "adapter learning rate")->check(CLI::NonNegativeNumber);
  cmd->add_option("--epochs", train.epochs, "adapter epochs")->check(CLI::NonNegativeNumber);
  cmd->add_option("--batch-size", train.batch_size, "adapter minibatch size")->check(CLI::PositiveNumber);
  cmd->add_option("--optimizer", train.optimizer, "adapter optimizer: sgd | adam")->check(CLI::IsMember({"sgd", "adam"}));
}

cil::RunConfig make_run_config(const std::string& method, const std::string& head, std::uint64_t seed,
                               double regularizer, unsigned threads, const TrainOverrides& train) {
  cil::RunConfig cfg;
  cfg.method = cil::parse_method(method);
  cfg.head = head == "ncm" ? cil::HeadKind::ncm : cil::HeadKind::lda;
  cfg.seed = seed;
  cfg.regularizer = regularizer;
  cfg.threads = threads;
  cil::TrainConfig tc = cfg.adapter_config();
  if (train.lr) tc.learning_rate = *train.lr;
  if (train.epochs) tc.epochs = *train.epochs;
  if (train.batch_size) tc.batch_size = *train.batch_size;
  if (train.optimizer) tc.optimizer = *train.optimizer == "sgd" ? cil::OptimizerKind::sgd : cil::OptimizerKind::adam;
  cfg.adapter_train = tc;
  return cfg;
}

std::vector<cil::Vectord> load_vectors(const std::string& path) {
  std::vector<cil::Vectord> out;
  for (auto& r : cil::read_embeddings(path)) out.push_back(std::move(r.features));
  return out;
}

void write_csv(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw cil::Error(cil::ErrorCode::Io, "cannot write " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Replay-free class-incremental learning over embedding files"};
  app.require_subcommand(1);

  // run
  std::string method = "na", head = "lda", schedule_path, train_path, test_path, csv_path, save_dir, resume_dir;
  std::uint64_t seed = 0;
  double regularizer = 1.0;
  unsigned threads = 0;
  bool allow_overlap = false;
  TrainOverrides train;
  auto* run = app.add_subcommand("run", "run a class-incremental schedule and print a line-JSON report");
  add_run_options(run, method, head, seed, regularizer, threads, train);
  run->add_option("--schedule", schedule_path, "schedule JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--train", train_path, "training EMB1 file")->required()->check(CLI::ExistingFile);
  run->add_option("--test", test_path, "test EMB1 file")->required()->check(CLI::ExistingFile);
  run->add_option("--csv", csv_path, "also write session,accuracy CSV here");
  run->add_option("--save-state", save_dir, "persist moments, class stats and adapter after every session");
  run->add_option("--resume", resume_dir, "continue from a directory written by --save-state")->check(CLI::ExistingDirectory);
  run->add_flag("--allow-overlap", allow_overlap, "accept classes that reappear in later sessions");

  // offline
  auto* offline = app.add_subcommand("offline", "single-session ceiling on all training classes");
  add_run_options(offline, method, head, seed, regularizer, threads, train);
  offline->add_option("--train", train_path, "training EMB1 file")->required()->check(CLI::ExistingFile);
  offline->add_option("--test", test_path, "test EMB1 file")->required()->check(CLI::ExistingFile);

  // similarity
  std::string target_path, reference_path, reduction = "mean";
  auto* similarity = app.add_subcommand("similarity", "minimum cosine distance from a target set to a reference set");
  similarity->add_option("--target", target_path, "target EMB1 file")->required()->check(CLI::ExistingFile);
  similarity->add_option("--reference", reference_path, "reference EMB1 file")->required()->check(CLI::ExistingFile);
  similarity->add_option("--reduce", reduction, "mean | median | min")->check(CLI::IsMember({"mean", "median", "min"}));
  similarity->add_option("--threads", threads, "scan threads (default: $CIL_THREADS or 1)");

  // synth
  cil::SyntheticSpec spec;
  std::string out_train, out_test, covariance = "isotropic", layout = "spread";
  auto* synth = app.add_subcommand("synth", "write a Gaussian train/test pair as EMB1 files");
  synth->add_option("--out-train", out_train)->required();
  synth->add_option("--out-test", out_test)->required();
  synth->add_option("--classes", spec.classes);
  synth->add_option("--dim", spec.dim);
  synth->add_option("--train-per-class", spec.train_per_class);
  synth->add_option("--test-per-class", spec.test_per_class);
  synth->add_option("--covariance", covariance, "isotropic | anisotropic");
  synth->add_option("--aspect-ratio", spec.aspect_ratio);
  synth->add_option("--noise-scale", spec.noise_scale);
  synth->add_option("--layout", layout, "spread | hidden_scale");
  synth->add_option("--mean-scale", spec.mean_scale);
  synth->add_option("--min-separation", spec.min_separation);
  synth->add_option("--hidden-scale", spec.hidden_scale);
  synth->add_option("--informative-dims", spec.informative_dims);
  synth->add_option("--nuisance-scale", spec.nuisance_scale);
  synth->add_option("--seed", spec.seed);

  // split
  std::string preset, split_out;
  std::uint32_t num_classes = 0;
  cil::PresetOverrides overrides;
  auto* split = app.add_subcommand("split", "emit a schedule preset as JSON");
  split->add_option("--preset", preset, "high-shot | few-shot+ | few-shot")->required();
  split->add_option("--classes", num_classes, "total number of classes")->required()->check(CLI::PositiveNumber);
  split->add_option("--first", overrides.first_classes, "classes in the first session");
  split->add_option("--per-session", overrides.classes_per_session, "classes in later sessions");
  split->add_option("--first-shots", overrides.first_shots, "shots in the first session (0 = all)");
  split->add_option("--shots", overrides.shots, "shots in later sessions (0 = all)");
  split->add_option("--out", split_out, "write here instead of stdout");

  // report
  std::vector<std::string> report_files;
  std::string report_csv;
  auto* report = app.add_subcommand("report", "aggregate run reports into a last-session/PPDR table");
  report->add_option("runs", report_files, "line-JSON run reports")->required()->check(CLI::ExistingFile);
  report->add_option("--csv", report_csv, "write mean accuracy per session and method here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*run || *offline) {
      const cil::Dataset train_set = cil::load_dataset(train_path);
      const cil::Dataset test_set = cil::load_dataset(test_path);
      cil::RunConfig cfg = make_run_config(method, head, seed, regularizer, threads, train);
      cfg.allow_overlap = allow_overlap;
      cil::RunResult result;
      if (*offline) {
        result = cil::run_offline(train_set, test_set, cfg);
      } else {
        const cil::SessionSchedule schedule = cil::load_schedule(schedule_path);
        std::optional<cil::CilRunner> runner;
        if (resume_dir.empty()) {
          runner.emplace(train_set, test_set, schedule, cfg);
        } else {
          runner.emplace(train_set, test_set, schedule, cfg, cil::load_state(resume_dir));
        }
        std::function<void(const cil::CilState&)> hook;
        if (!save_dir.empty()) hook = [&](const cil::CilState& st) { cil::save_state(save_dir, st); };
        result = cil::drive(*runner, cfg, hook);
      }
      cil::write_run_report(std::cout, result);
      if (!csv_path.empty()) {
        std::ostringstream csv;
        csv << "session," << result.method << '\n';
        for (std::size_t i = 0; i < result.per_session_accuracy.size(); ++i) {
          csv << i + 1 << ',' << result.per_session_accuracy[i] << '\n';
        }
        write_csv(csv_path, csv.str());
      }
    } else if (*similarity) {
      const auto rep = cil::min_cosine_distance(load_vectors(target_path), load_vectors(reference_path),
                                                cil::parse_reduction(reduction), threads);
      std::cout << cil::to_json(rep).dump() << '\n';
    } else if (*synth) {
      spec.covariance = cil::parse_covariance_shape(covariance);
      spec.layout = cil::parse_mean_layout(layout);
      const auto pair = cil::generate_synthetic(spec);
      cil::save_dataset(out_train, pair.train);
      cil::save_dataset(out_test, pair.test);
    } else if (*split) {
      const auto schedule = cil::make_preset(cil::parse_preset(preset), num_classes, overrides);
      if (split_out.empty()) {
        std::cout << cil::schedule_to_json(schedule);
      } else {
        cil::save_schedule(split_out, schedule);
      }
    } else if (*report) {
      std::vector<cil::ParsedRun> runs;
      for (const auto& f : report_files) {
        std::ifstream in(f);
        runs.push_back(cil::parse_run_report(in));
      }
      const auto summaries = cil::aggregate_runs(runs);
      std::cout << cil::summary_table(summaries);
      if (!report_csv.empty()) write_csv(report_csv, cil::accuracy_csv(summaries));
    }
  } catch (const cil::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
