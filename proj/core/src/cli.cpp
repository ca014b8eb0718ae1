#include "vlut/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vlut/checkpoint.hpp"
#include "vlut/eval.hpp"
#include "vlut/trainer.hpp"

namespace vlut {
namespace {

void run_gen_data(const std::string& spec_path, const std::string& out_dir, int num_seqs) {
  if (num_seqs <= 0) throw std::invalid_argument("gen-data: --num-seqs must be positive");
  const SceneSpec base = load_scene_spec(spec_path);
  std::vector<SequencePair> pairs;
  pairs.reserve(static_cast<std::size_t>(num_seqs));
  for (int i = 0; i < num_seqs; ++i) {
    SceneSpec spec = base;
    spec.seed = base.seed + static_cast<std::uint64_t>(i);
    pairs.push_back(generate_sequence_pair(spec));
    char id[32];
    std::snprintf(id, sizeof id, "seq_%03d", i);
    pairs.back().id = id;
  }
  save_dataset(pairs, out_dir);
  std::cout << "wrote " << num_seqs << " sequence pairs to " << out_dir << "\n";
}

void run_train(const std::string& config_path, const std::string& data_dir,
               const std::string& out_path, const std::string& log_path) {
  const TrackerConfig cfg = load_config(config_path);
  const std::vector<SequencePair> data = load_dataset(data_dir);

  std::ofstream log_file;
  std::ostream* log = &std::cout;
  if (!log_path.empty()) {
    log_file.open(log_path, std::ios::binary | std::ios::trunc);
    if (!log_file) throw std::runtime_error("train: cannot open log file: " + log_path);
    log = &log_file;
  }
  Checkpoint ck = train(cfg, data, log);
  save_checkpoint(ck, out_path);
  std::cerr << "saved checkpoint after " << ck.step << " steps to " << out_path << "\n";
}

// Rebuilds the model a checkpoint describes and loads its weights.
TrackerModel model_from_checkpoint(const Checkpoint& ck) {
  TrackerModel model(parse_config(ck.config_text));
  restore_registry(ck, model.registry());
  return model;
}

void run_eval(const std::string& ckpt_path, const std::string& data_dir,
              const std::string& report_path) {
  const Checkpoint ck = load_checkpoint(ckpt_path);
  TrackerModel model = model_from_checkpoint(ck);
  const std::vector<SequencePair> data = load_dataset(data_dir);
  const EvalReport rep = evaluate_dataset(model, data);
  write_report(rep, report_path);
  char line[256];
  std::snprintf(line, sizeof line,
                "uav pr=%.4f sr=%.4f | ground pr=%.4f sr=%.4f | average pr=%.4f sr=%.4f\n",
                rep.view.uav.pr, rep.view.uav.sr, rep.view.ground.pr, rep.view.ground.sr,
                rep.average_pr, rep.average_sr);
  std::cout << line;
  std::cout << "report written to " << report_path << "\n";
}

void run_track(const std::string& ckpt_path, const std::string& seq_dir,
               const std::string& out_dir) {
  const Checkpoint ck = load_checkpoint(ckpt_path);
  TrackerModel model = model_from_checkpoint(ck);
  const SequencePair seq = load_sequence_pair(seq_dir);
  const TrackOutput out = track_sequence(model, seq);
  write_track_output(out, seq, out_dir);
  std::cout << "tracked " << out.predictions.uav.size() << " frames of '" << seq.id << "' into "
            << out_dir << "\n";
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Dual-view UAV/ground object tracking toolkit"};
  app.require_subcommand(1);

  std::string spec_path, out_dir, config_path, data_dir, out_path, log_path;
  std::string ckpt_path, report_path, seq_dir;
  int num_seqs = 0;

  CLI::App* gen = app.add_subcommand("gen-data", "Render synthetic dual-view sequence pairs");
  gen->add_option("--spec", spec_path, "Scene spec file")->required();
  gen->add_option("--out", out_dir, "Output dataset directory")->required();
  gen->add_option("--num-seqs", num_seqs, "Number of sequence pairs")->required();

  CLI::App* tr = app.add_subcommand("train", "Train a tracker on a dataset");
  tr->add_option("--config", config_path, "Tracker config file")->required();
  tr->add_option("--data", data_dir, "Dataset directory")->required();
  tr->add_option("--out", out_path, "Checkpoint output path")->required();
  tr->add_option("--log", log_path, "Write per-step records here instead of stdout");

  CLI::App* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  ev->add_option("--ckpt", ckpt_path, "Checkpoint path")->required();
  ev->add_option("--data", data_dir, "Dataset directory")->required();
  ev->add_option("--report", report_path, "Report JSON output path")->required();

  CLI::App* tk = app.add_subcommand("track", "Track one sequence pair and write predictions");
  tk->add_option("--ckpt", ckpt_path, "Checkpoint path")->required();
  tk->add_option("--seq", seq_dir, "Sequence directory (uav/ and ground/ inside)")->required();
  tk->add_option("--out", out_dir, "Output directory")->required();

  gen->callback([&] { run_gen_data(spec_path, out_dir, num_seqs); });
  tr->callback([&] { run_train(config_path, data_dir, out_path, log_path); });
  ev->callback([&] { run_eval(ckpt_path, data_dir, report_path); });
  tk->callback([&] { run_track(ckpt_path, seq_dir, out_dir); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // help text on stdout, exit 0
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace vlut
