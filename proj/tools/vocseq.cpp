// vocseq: batch pipeline for graded vocal repertoire analysis.
//
// Subcommands map 1:1 onto pipeline stages; stages communicate only through
// files in the configured workdir, so any prefix of the chain can be rerun.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "vocseq/config.hpp"
#include "vocseq/pipeline.hpp"

namespace {

struct StageSpec {
  const char* name;
  const char* help;
};

constexpr StageSpec kStages[] = {
    {"synth", "generate the synthetic fixture selected by [synth] kind"},
    {"ingest", "validate the annotation CSV and exclude ambiguous contexts"},
    {"segment", "dynamic-threshold segmentation of the ingested recordings"},
    {"featurize", "per-syllable MFCC matrices and coarse mel projections"},
    {"label", "DTW distance matrices and agglomerative syllable labels"},
    {"encode", "labeled syllables -> symbolic sequences (JSON lines)"},
    {"seqfeat", "the 18 sequence predictors per sequence (CSV)"},
    {"mr", "maximal repeats per behavioral context"},
    {"fit", "exponential / power-law / truncated power-law fits + LRTs"},
    {"test-hp1", "order-permutation classification experiment"},
    {"test-hp2", "pairwise Wilcoxon tests on syllable frequencies"},
    {"classify", "cross-validated context classification + importances"},
    {"network", "syllabic transition networks and small-world metrics"},
    {"report", "bundle all artifacts into report.json"},
};

void emit_error_json(const std::string& stage, const std::string& message) {
  nlohmann::ordered_json err;
  err["error"] = message;
  err["stage"] = stage;
  std::cerr << err.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vocal sequence analysis pipeline"};
  app.require_subcommand(0, 1);
  app.footer("Configuration keys and their defaults:\n" + vocseq::config_reference());

  std::string config_path;
  std::string workdir_override;
  std::string seed_override;
  app.add_option("-c,--config", config_path, "pipeline config file (sectioned key=value)");
  app.add_option("-w,--workdir", workdir_override, "override io.workdir");
  app.add_option("-s,--seed", seed_override, "override run.master_seed");

  std::vector<std::string> run_stages;
  for (const auto& stage : kStages) {
    app.add_subcommand(stage.name, stage.help)->callback([&run_stages, &stage] {
      run_stages.push_back(stage.name);
    });
  }
  auto* all = app.add_subcommand("run-all", "synth fixture followed by the full symbolic chain");
  all->callback([&run_stages] {
    for (const char* stage : {"synth", "seqfeat", "mr", "fit", "test-hp1", "test-hp2", "classify",
                              "network", "report"}) {
      run_stages.push_back(stage);
    }
  });
  auto* reference = app.add_subcommand("config-reference", "print every config key with its default");
  bool print_reference = false;
  reference->callback([&print_reference] { print_reference = true; });

  CLI11_PARSE(app, argc, argv);

  if (print_reference) {
    std::cout << vocseq::config_reference();
    return 0;
  }
  if (run_stages.empty()) {
    std::cout << app.help();
    return 0;
  }

  std::string current = "config";
  try {
    vocseq::PipelineConfig cfg =
        config_path.empty() ? vocseq::PipelineConfig() : vocseq::PipelineConfig::from_file(config_path);
    if (!workdir_override.empty()) cfg.set("io.workdir", workdir_override);
    if (!seed_override.empty()) cfg.set("run.master_seed", seed_override);
    for (const auto& stage : run_stages) {
      current = stage;
      vocseq::run_stage(stage, cfg);
      std::cout << "[done] " << stage << "\n";
      if (stage == "fit") {
        // per-context comparison table
        const auto path = std::filesystem::path(cfg.get("io.workdir")) / "fits.json";
        const auto fits = nlohmann::ordered_json::parse(vocseq::read_text_file(path.string()));
        std::printf("%-16s %6s %8s %8s %10s  %s\n", "group", "n", "alpha", "lambda", "lrt_p", "preferred");
        for (const auto& [group, entry] : fits.items()) {
          if (entry.contains("skipped")) {
            std::printf("%-16s %6lld  (skipped: %s)\n", group.c_str(),
                        static_cast<long long>(entry["n"].get<std::int64_t>()),
                        entry["skipped"].get<std::string>().c_str());
            continue;
          }
          const auto& lrt = entry["lrt_powerlaw_vs_exponential"];
          std::printf("%-16s %6lld %8.3f %8.4f %10.3g  %s\n", group.c_str(),
                      static_cast<long long>(entry["n"].get<std::int64_t>()),
                      entry["powerlaw"]["alpha"].get<double>(),
                      entry["truncated_powerlaw"].contains("lambda")
                          ? entry["truncated_powerlaw"]["lambda"].get<double>()
                          : 0.0,
                      lrt["p_value"].get<double>(), lrt["preferred"].get<std::string>().c_str());
        }
      }
    }
  } catch (const std::exception& e) {
    emit_error_json(current, e.what());
    return 1;
  }
  return 0;
}
