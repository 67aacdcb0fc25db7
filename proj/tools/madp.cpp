// madp: operator entry point for the document pipeline.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "madp/corpus.hpp"
#include "madp/engine.hpp"
#include "madp/evaluation.hpp"
#include "madp/http_server.hpp"
#include "madp/sustainability.hpp"

namespace {

using madp::json;

struct Common {
  std::string config_path;
  std::string store = "madp-store";
  std::size_t jobs = 4;
  std::string out;
};

madp::PipelineConfig load_pipeline_config(const Common& c) {
  std::string path = c.config_path;
  if (path.empty())
    if (const char* env = std::getenv("MADP_CONFIG")) path = env;
  if (path.empty()) {
    std::cerr << "madp: no config given, using documented defaults\n";
    return madp::PipelineConfig{};
  }
  return madp::load_config(path);
}

madp::EngineOptions engine_options(const Common& c) {
  madp::EngineOptions o;
  o.config = load_pipeline_config(c);
  o.store_dir = c.store;
  o.jobs = c.jobs;
  std::filesystem::create_directories(o.store_dir);
  return o;
}

void emit(const Common& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(c.out);
  if (!out) throw madp::ValidationError("cannot write " + c.out);
  out << text;
  std::cerr << "madp: wrote " << c.out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent document pipeline"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config_path, "Pipeline config JSON (default: $MADP_CONFIG)");
  app.add_option("--store", common.store, "Event store directory")->capture_default_str();
  app.add_option("--jobs", common.jobs, "Worker threads")->capture_default_str();
  app.add_option("--out", common.out, "Write the report to this file instead of stdout");

  std::string ingest_dir;
  auto* ingest = app.add_subcommand("ingest", "Register every DocBundle JSON in a directory");
  ingest->add_option("dir", ingest_dir)->required()->check(CLI::ExistingDirectory);

  auto* run = app.add_subcommand("run", "Drive ingested documents to terminal states");

  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Serve the review API");
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port)->capture_default_str();

  std::string corpus_dir;
  std::string ablate_csv;
  bool eval_json = false;
  auto* eval = app.add_subcommand("eval", "Score a labeled corpus");
  eval->add_option("corpus", corpus_dir)->required()->check(CLI::ExistingDirectory);
  eval->add_option("--ablate", ablate_csv, "Stages to replace by passthrough: classifier,splitter,parser,validator");
  eval->add_flag("--json", eval_json, "Emit JSON instead of markdown tables");

  std::string scenario;
  std::string params_path;
  auto* sustain = app.add_subcommand("sustain", "Sustainability scenario report");
  sustain->add_option("--scenario", scenario, "manual, pure_ai or ai_hitl (default: all)");
  sustain->add_option("--params", params_path, "Scenario parameter JSON")->check(CLI::ExistingFile);

  std::string queue_status;
  auto* queue = app.add_subcommand("queue", "Review queue");
  queue->require_subcommand(1);
  auto* queue_ls = queue->add_subcommand("ls", "List review tasks");
  queue_ls->add_option("--status", queue_status, "pending, in_progress or resolved");

  std::string fixtures_dir = "fixtures";
  std::uint64_t seed = 2026;
  auto* gen = app.add_subcommand("gen-fixtures", "Write the synthetic fixture corpus");
  gen->add_option("dir", fixtures_dir)->capture_default_str();
  gen->add_option("--seed", seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      madp::Engine engine(engine_options(common));
      auto added = engine.ingest_dir(ingest_dir);
      std::cout << "ingested " << added.size() << " document(s)\n";
    } else if (*run) {
      madp::Engine engine(engine_options(common));
      std::size_t changed = engine.run();
      std::cout << "processed " << changed << " document(s)\n" << engine.stats_json().dump(2) << "\n";
    } else if (*serve) {
      madp::Engine engine(engine_options(common));
      std::cerr << "madp: serving on http://" << host << ":" << port << "\n";
      if (!madp::serve(engine, host, port)) {
        std::cerr << "madp: cannot bind " << host << ":" << port << "\n";
        return 1;
      }
    } else if (*eval) {
      std::set<std::string> ablate;
      try {
        ablate = madp::parse_ablation(ablate_csv);
      } catch (const madp::ValidationError& e) {
        std::cerr << "madp: " << e.what() << "\n";
        return 2;
      }
      auto corpus = madp::corpus::load(corpus_dir);
      std::vector<madp::evaluation::EvalReport> reports;
      reports.push_back(madp::corpus::run_corpus(corpus, {}, {}, common.jobs).report);
      if (!ablate.empty()) {
        std::string label = "Without";
        for (const auto& s : ablate) label += " " + s;
        reports.push_back(madp::corpus::run_corpus(corpus, ablate, {}, common.jobs, label).report);
      }
      if (eval_json) {
        json arr = json::array();
        for (const auto& r : reports) arr.push_back(madp::evaluation::to_json(r));
        emit(common, arr.dump(2) + "\n");
      } else {
        emit(common, madp::evaluation::render_markdown(reports));
      }
    } else if (*sustain) {
      namespace s = madp::sustainability;
      std::vector<s::ScenarioReport> reports;
      if (!params_path.empty()) {
        std::ifstream in(params_path);
        auto params = json::parse(in).get<s::ScenarioParams>();
        reports.push_back(s::scenario_report(scenario.empty() ? "custom" : scenario, params));
      } else if (!scenario.empty()) {
        reports.push_back(s::scenario_report(scenario));
      } else {
        for (const auto& name : s::scenario_names()) reports.push_back(s::scenario_report(name));
      }
      std::string text = s::render_sustainability_table(reports);
      for (const auto& r : reports)
        for (const auto& d : r.discrepancies)
          text += "discrepancy: " + r.name + " " + d.metric + ": " + d.note + "\n";
      emit(common, text);
    } else if (*queue_ls) {
      std::optional<madp::TaskStatus> status;
      if (!queue_status.empty()) {
        status = madp::task_status_from_string(queue_status);
        if (!status) {
          std::cerr << "madp: invalid status '" << queue_status << "'\n";
          return 2;
        }
      }
      madp::Engine engine(engine_options(common));
      emit(common, engine.queue_json(status).dump(2) + "\n");
    } else if (*gen) {
      auto corpus = madp::corpus::generate(seed);
      madp::corpus::write(corpus, fixtures_dir);
      std::cout << "wrote " << corpus.truths.size() << " documents in " << corpus.bundles.size()
                << " bundles to " << fixtures_dir << "\n";
    }
  } catch (const madp::ParseError& e) {
    std::cerr << "madp: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "madp: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
