// Command-line front end: data generation, training, evaluation, tracking and
// the ablation runners.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bdst/experiments.hpp"
#include "bdst/generator.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace bdst;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

DialogueCorpus load_reporting(const fs::path& path) {
  std::vector<std::string> warnings;
  auto c = load_corpus(path, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << path.string() << ": " << w << "\n";
  return c;
}

TrainConfig config_or_default(const std::string& path) {
  return path.empty() ? TrainConfig{} : load_train_config(path);
}

std::string state_json(const DialogueState& s) {
  json j = json::object();
  for (const auto& [k, v] : s) j[k] = v;
  return j.dump();
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw CLI::ValidationError("--grid", "bad number '" + item + "'");
    grid.push_back(v);
  }
  if (grid.empty()) throw CLI::ValidationError("--grid", "empty grid");
  return grid;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

/// Turns from a tracking input file: either a corpus file or a JSON array of
/// {system, user} objects (a single dialogue).
std::vector<std::pair<std::string, std::vector<TurnText>>> read_dialogues(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw Error(path.string() + " is not valid JSON: " + e.what());
  }
  auto turns_of = [](const json& arr) {
    std::vector<TurnText> turns;
    for (const auto& t : arr) turns.emplace_back(t.value("system", ""), t.at("user").get<std::string>());
    return turns;
  };
  std::vector<std::pair<std::string, std::vector<TurnText>>> out;
  try {
    if (j.is_array()) {
      out.emplace_back("0", turns_of(j));
    } else {
      std::size_t i = 0;
      for (const auto& d : j.at("dialogues")) {
        out.emplace_back(d.contains("id") ? d.at("id").get<std::string>() : std::to_string(i), turns_of(d.at("turns")));
        ++i;
      }
    }
  } catch (const json::exception& e) {
    throw Error(path.string() + " is not a dialogue file: " + e.what());
  }
  return out;
}

void run_interactive(const ModelBundle& model) {
  DialogueState state;
  std::string sys, usr;
  while (true) {
    std::cout << "system> " << std::flush;
    if (!std::getline(std::cin, sys)) break;
    std::cout << "user> " << std::flush;
    if (!std::getline(std::cin, usr)) break;
    state = update_state(std::move(state), predict_turn(model, sys, usr));
    std::cout << state_json(state) << std::endl;
  }
  std::cout << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dialogue state tracking by span extraction over a small transformer encoder"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate synthetic train/dev/test corpora");
  std::string profile_name = "sim-m-like";
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  std::optional<std::size_t> n_train, n_dev, n_test;
  gen->add_option("--profile", profile_name, "Generator profile")
      ->check(CLI::IsMember(builtin_profile_names()));
  gen->add_option("--seed", gen_seed, "Random seed");
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--train", n_train, "Number of training dialogues");
  gen->add_option("--dev", n_dev, "Number of dev dialogues");
  gen->add_option("--test", n_test, "Number of test dialogues");

  // train
  auto* tr = app.add_subcommand("train", "Train a model");
  std::string train_file, dev_file, test_file, config_file, model_out, history_out;
  std::optional<std::string> sharing_opt;
  std::optional<double> svd_opt;
  std::optional<std::uint64_t> seed_opt;
  tr->add_option("--train", train_file, "Training corpus")->required()->check(CLI::ExistingFile);
  tr->add_option("--dev", dev_file, "Validation corpus")->required()->check(CLI::ExistingFile);
  tr->add_option("--config", config_file, "Training config (JSON)")->check(CLI::ExistingFile);
  tr->add_option("--out", model_out, "Output model file")->required();
  tr->add_option("--sharing", sharing_opt, "Encoder sharing: ss or ps")->check(CLI::IsMember({"ss", "ps"}));
  tr->add_option("--svd", svd_opt, "Slot value dropout probability")->check(CLI::Range(0.0, 0.999999));
  tr->add_option("--seed", seed_opt, "Random seed");
  tr->add_option("--history", history_out, "Per-epoch log (default: MODEL.history.jsonl)");

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a model on a corpus");
  std::string model_file, corpus_file, report_file;
  ev->add_option("--model", model_file, "Model file")->required()->check(CLI::ExistingFile);
  ev->add_option("--corpus", corpus_file, "Corpus file")->required()->check(CLI::ExistingFile);
  ev->add_option("--report", report_file, "Report output (default: stdout)");

  // track
  auto* tk = app.add_subcommand("track", "Track dialogue state turn by turn");
  std::string dialogue_file;
  bool interactive = false;
  tk->add_option("--model", model_file, "Model file")->required()->check(CLI::ExistingFile);
  auto* dlg_opt = tk->add_option("--dialogue", dialogue_file, "Dialogue or corpus file")->check(CLI::ExistingFile);
  auto* int_opt = tk->add_flag("--interactive", interactive, "Read system/user lines from stdin");
  dlg_opt->excludes(int_opt);
  tk->callback([&] {
    if (dialogue_file.empty() && !interactive) throw CLI::RequiredError("--dialogue or --interactive");
  });

  // ablate-svd
  auto* ab = app.add_subcommand("ablate-svd", "Slot value dropout ablation");
  std::string grid_text = "0,0.1,0.2,0.3,0.4", out_prefix, oov_text;
  ab->add_option("--train", train_file, "Training corpus")->required()->check(CLI::ExistingFile);
  ab->add_option("--dev", dev_file, "Validation corpus")->required()->check(CLI::ExistingFile);
  ab->add_option("--test", test_file, "Test corpus")->required()->check(CLI::ExistingFile);
  ab->add_option("--config", config_file, "Training config (JSON)")->check(CLI::ExistingFile);
  ab->add_option("--grid", grid_text, "Comma-separated dropout probabilities");
  ab->add_option("--oov-slots", oov_text, "Comma-separated OOV slots (default: detected)");
  ab->add_option("--seed", seed_opt, "Random seed");
  ab->add_option("--out", out_prefix, "Output prefix for PREFIX.csv and PREFIX.dat")->required();

  // compare-sharing
  auto* cs = app.add_subcommand("compare-sharing", "Slot-specific vs shared encoder");
  std::string cmp_out, cmp_csv;
  cs->add_option("--train", train_file, "Training corpus")->required()->check(CLI::ExistingFile);
  cs->add_option("--dev", dev_file, "Validation corpus")->required()->check(CLI::ExistingFile);
  cs->add_option("--test", test_file, "Test corpus")->required()->check(CLI::ExistingFile);
  cs->add_option("--config", config_file, "Training config (JSON)")->check(CLI::ExistingFile);
  cs->add_option("--seed", seed_opt, "Random seed");
  cs->add_option("--out", cmp_out, "JSON output (default: stdout)");
  cs->add_option("--csv", cmp_csv, "CSV output");

  // params
  auto* pr = app.add_subcommand("params", "Parameter counts of a model file");
  pr->add_option("--model", model_file, "Model file")->required()->check(CLI::ExistingFile);

  // stats
  auto* stc = app.add_subcommand("stats", "Corpus statistics");
  std::string reference_file;
  stc->add_option("--corpus", corpus_file, "Corpus file")->required()->check(CLI::ExistingFile);
  stc->add_option("--reference", reference_file, "Reference corpus for OOV counts")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*gen) {
      auto p = builtin_profile(profile_name, gen_seed);
      if (n_train) p.train_dialogues = *n_train;
      if (n_dev) p.dev_dialogues = *n_dev;
      if (n_test) p.test_dialogues = *n_test;
      const auto splits = generate_synthetic(p);
      fs::create_directories(gen_out);
      save_corpus(splits.train, fs::path(gen_out) / "train.json");
      save_corpus(splits.dev, fs::path(gen_out) / "dev.json");
      save_corpus(splits.test, fs::path(gen_out) / "test.json");
      std::cerr << "wrote " << splits.train.dialogues.size() << "/" << splits.dev.dialogues.size() << "/"
                << splits.test.dialogues.size() << " dialogues to " << gen_out << "\n";
    } else if (*tr) {
      auto cfg = config_or_default(config_file);
      if (sharing_opt) cfg.sharing = parse_sharing_mode(*sharing_opt);
      if (svd_opt) cfg.slot_value_dropout = *svd_opt;
      if (seed_opt) cfg.seed = *seed_opt;
      cfg.validate();
      const auto train_c = load_reporting(train_file);
      const auto dev_c = load_reporting(dev_file);
      const fs::path hist_path = history_out.empty() ? fs::path(model_out + ".history.jsonl") : fs::path(history_out);
      if (hist_path.has_parent_path()) fs::create_directories(hist_path.parent_path());
      std::ofstream hist(hist_path);
      if (!hist) throw Error("cannot write " + hist_path.string());
      auto result = train(train_c, dev_c, cfg, [&](const EpochRecord& r) {
        hist << r.to_json_line() << "\n" << std::flush;
        std::cerr << "epoch " << r.epoch << " loss " << r.train_loss << " dev joint " << r.val_joint_acc << "\n";
      });
      for (const auto& w : result.history.train_examples.warnings) std::cerr << "warning: " << w << "\n";
      if (fs::path(model_out).has_parent_path()) fs::create_directories(fs::path(model_out).parent_path());
      save_model(result.model, model_out);
      std::cerr << "best epoch " << result.history.best_epoch << " dev joint " << result.history.best_val_joint_acc
                << "; model written to " << model_out << "\n";
    } else if (*ev) {
      const auto model = load_model(model_file);
      const auto corpus = load_reporting(corpus_file);
      const auto report = evaluate(model, corpus).to_json();
      if (report_file.empty()) {
        std::cout << report;
      } else {
        write_text(report_file, report);
      }
    } else if (*tk) {
      const auto model = load_model(model_file);
      if (interactive) {
        run_interactive(model);
      } else {
        for (const auto& [id, turns] : read_dialogues(dialogue_file)) {
          const auto states = track_dialogue(model, turns);
          for (std::size_t t = 0; t < states.size(); ++t) {
            json line;
            line["dialogue"] = id;
            line["turn"] = t;
            line["state"] = json::parse(state_json(states[t]));
            std::cout << line.dump() << "\n";
          }
        }
      }
    } else if (*ab) {
      auto cfg = config_or_default(config_file);
      if (seed_opt) cfg.seed = *seed_opt;
      const auto grid = parse_grid(grid_text);
      const auto result = run_svd_ablation(load_reporting(train_file), load_reporting(dev_file),
                                           load_reporting(test_file), cfg, grid, split_list(oov_text));
      write_text(out_prefix + ".csv", result.to_csv());
      write_text(out_prefix + ".dat", result.to_dat());
      std::cout << result.to_csv();
    } else if (*cs) {
      auto cfg = config_or_default(config_file);
      if (seed_opt) cfg.seed = *seed_opt;
      const auto result = run_sharing_comparison(load_reporting(train_file), load_reporting(dev_file),
                                                 load_reporting(test_file), cfg);
      if (!cmp_csv.empty()) write_text(cmp_csv, result.to_csv());
      if (cmp_out.empty()) {
        std::cout << result.to_json();
      } else {
        write_text(cmp_out, result.to_json());
      }
    } else if (*pr) {
      const auto model = load_model(model_file);
      const auto summary = inspect_model_file(model_file);
      const auto& c = model.encoder_config;
      json j;
      j["sharing"] = sharing_mode_name(model.sharing);
      j["slots"] = model.slots.size();
      j["encoders"] = model.encoders.size();
      j["encoder_parameter_count"] = parameter_count(c);
      j["head_parameter_count"] = model.slots.size() * slot_head_parameter_count(c.hidden_size);
      j["total_parameter_count"] = head_parameter_count(model.slots.size(), c.hidden_size, model.sharing, c);
      j["stored_scalars"] = summary.stored_scalars;
      std::cout << j.dump(2) << "\n";
    } else if (*stc) {
      const auto corpus = load_reporting(corpus_file);
      if (reference_file.empty()) {
        std::cout << stats_to_json(corpus_stats(corpus));
      } else {
        const auto ref = load_reporting(reference_file);
        std::cout << stats_to_json(corpus_stats(corpus, &ref));
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
