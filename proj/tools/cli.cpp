#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "moa/analysis.hpp"
#include "moa/config.hpp"
#include "moa/error.hpp"
#include "moa/harness.hpp"
#include "moa/http_backend.hpp"
#include "moa/mock.hpp"
#include "moa/report.hpp"

namespace moa::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct BackendChoice {
  std::string mock_script;
  std::string mock_log;
};

struct Client {
  std::shared_ptr<MockBackend> mock;
  std::unique_ptr<ModelClient> client;
};

Client make_client(std::shared_ptr<const Config> config, const BackendChoice& choice) {
  Client c;
  std::shared_ptr<Backend> backend;
  if (!choice.mock_script.empty()) {
    c.mock = std::make_shared<MockBackend>(MockScript::load(choice.mock_script));
    backend = c.mock;
  } else {
    backend = std::make_shared<HttpBackend>();
  }
  c.client = std::make_unique<ModelClient>(std::move(config), std::move(backend));
  return c;
}

void write_mock_log(const Client& c, const BackendChoice& choice) {
  if (!c.mock || choice.mock_log.empty()) return;
  std::string lines;
  for (const auto& call : c.mock->log()) lines += to_json(call).dump() + "\n";
  write_file_atomic(choice.mock_log, lines);
}

void add_backend_options(CLI::App* cmd, BackendChoice& choice) {
  cmd->add_option("--mock", choice.mock_script, "Serve every model from this mock script (JSON)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--mock-log", choice.mock_log, "Write the mock request log here (JSON lines)");
}

Config config_or_builtin(const std::string& path) {
  return path.empty() ? builtin_config() : load_config(path);
}

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_file_atomic(path, text);
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mixture-of-Agents orchestration, accounting and analysis", "moa"};
  app.require_subcommand(1);

  // run
  struct {
    std::string config, pipeline, dataset, out, run_id;
    int parallelism = 4;
    std::size_t limit = 0;
    bool degraded = false;
    BackendChoice backend;
  } run_opts;
  auto* run_cmd = app.add_subcommand("run", "Run a pipeline over a dataset (resumable)");
  run_cmd->add_option("--config", run_opts.config, "Config file (default: built-in roster)")
      ->check(CLI::ExistingFile);
  run_cmd->add_option("--pipeline", run_opts.pipeline, "Pipeline id")->required();
  run_cmd->add_option("--dataset", run_opts.dataset, "Dataset (JSON list with 'instruction')")
      ->required()
      ->check(CLI::ExistingFile);
  run_cmd->add_option("--out", run_opts.out, "Run directory")->required();
  run_cmd->add_option("--parallelism", run_opts.parallelism, "Samples in flight")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--limit", run_opts.limit, "Stop after this many samples finish");
  run_cmd->add_flag("--degraded", run_opts.degraded, "Drop failed proposers instead of failing");
  run_cmd->add_option("--run-id", run_opts.run_id, "Run identifier");
  add_backend_options(run_cmd, run_opts.backend);

  // rank
  struct {
    std::string run_dir, config, ranker;
    std::uint64_t seed = 0;
    BackendChoice backend;
  } rank_opts;
  auto* rank_cmd = app.add_subcommand("rank", "LLM-ranker baseline over a run's layer-1 outputs");
  rank_cmd->add_option("--run", rank_opts.run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
  rank_cmd->add_option("--config", rank_opts.config, "Config (default: the run's snapshot)")
      ->check(CLI::ExistingFile);
  rank_cmd->add_option("--ranker", rank_opts.ranker, "Ranker model id (default: final aggregator)");
  rank_cmd->add_option("--seed", rank_opts.seed, "Presentation-order seed");
  add_backend_options(rank_cmd, rank_opts.backend);

  // export
  std::string export_run;
  auto* export_cmd = app.add_subcommand("export", "Write the AlpacaEval outputs file of a run");
  export_cmd->add_option("--run", export_run, "Run directory")->required()->check(CLI::ExistingDirectory);

  // analyze
  struct {
    std::string study, metric = "bleu-4", out;
  } analyze_opts;
  auto* analyze_cmd = app.add_subcommand("analyze", "Similarity/preference Spearman study");
  analyze_cmd->add_option("--study", analyze_opts.study, "Study file")->required()->check(CLI::ExistingFile);
  analyze_cmd->add_option("--metric", analyze_opts.metric, "bleu-3|bleu-4|bleu-5|tfidf|levenshtein")
      ->check(CLI::IsMember({"bleu-3", "bleu-4", "bleu-5", "tfidf", "levenshtein"}));
  analyze_cmd->add_option("--out", analyze_opts.out, "CSV output (default: stdout)");

  // report
  struct {
    std::vector<std::string> runs;
    std::string scores, axis = "usd", out;
  } report_opts;
  auto* report_cmd = app.add_subcommand("report", "Cost/tflops summary and Pareto CSV");
  report_cmd->add_option("--run", report_opts.runs, "Run directory (repeatable)")
      ->required()
      ->check(CLI::ExistingDirectory);
  report_cmd->add_option("--scores", report_opts.scores, "Quality scores per label (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  report_cmd->add_option("--axis", report_opts.axis, "Pareto expense axis")
      ->check(CLI::IsMember({"usd", "tflops"}));
  report_cmd->add_option("--out", report_opts.out, "CSV output (default: stdout)");

  // mock-serve
  struct {
    std::string script, host = "127.0.0.1";
    int port = 8089;
  } serve_opts;
  auto* serve_cmd = app.add_subcommand("mock-serve", "Serve a mock script over HTTP");
  serve_cmd->add_option("--script", serve_opts.script, "Mock script (JSON)")->required()->check(CLI::ExistingFile);
  serve_cmd->add_option("--host", serve_opts.host, "Bind address");
  serve_cmd->add_option("--port", serve_opts.port, "Port");

  // config
  struct {
    std::string check;
    bool dump_builtin = false;
  } config_opts;
  auto* config_cmd = app.add_subcommand("config", "Validate a config or print the built-in one");
  config_cmd->add_option("--check", config_opts.check, "Config file to validate")->check(CLI::ExistingFile);
  config_cmd->add_flag("--dump-builtin", config_opts.dump_builtin, "Print the built-in config");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*run_cmd) {
      auto config = std::make_shared<const Config>(config_or_builtin(run_opts.config));
      const PipelineSpec& pipeline = config->pipeline(run_opts.pipeline);
      const auto dataset = load_dataset(run_opts.dataset);
      Client c = make_client(config, run_opts.backend);
      BenchmarkOptions options;
      options.parallelism = run_opts.parallelism;
      if (run_opts.limit > 0) options.limit = run_opts.limit;
      options.degraded_mode = run_opts.degraded;
      options.run_id = run_opts.run_id;
      const RunManifest manifest = run_benchmark(*config, pipeline, dataset, *c.client, run_opts.out, options);
      write_mock_log(c, run_opts.backend);
      const auto total = manifest.total_cost();
      out << json{{"run_id", manifest.run_id},
                  {"pipeline", manifest.pipeline},
                  {"done", manifest.count(SampleStatus::done)},
                  {"failed", manifest.count(SampleStatus::failed)},
                  {"pending", manifest.count(SampleStatus::pending)},
                  {"model_calls", c.client->dispatched()},
                  {"total_cost_usd", total ? json(total->to_string()) : json(nullptr)}}
                 .dump()
          << "\n";
      return manifest.count(SampleStatus::failed) == 0 ? 0 : 1;
    }
    if (*rank_cmd) {
      const fs::path run_dir = rank_opts.run_dir;
      auto config = std::make_shared<const Config>(
          rank_opts.config.empty() ? load_config(RunPaths{run_dir}.config()) : load_config(rank_opts.config));
      Client c = make_client(config, rank_opts.backend);
      RankRunOptions options;
      options.ranker_model = rank_opts.ranker;
      options.seed = rank_opts.seed;
      const RankRunSummary summary = rank_run(run_dir, *c.client, options);
      write_mock_log(c, rank_opts.backend);
      out << json{{"export", summary.export_path.string()},
                  {"ranked", summary.ranked},
                  {"failed", summary.failed},
                  {"model_calls", c.client->dispatched()}}
                 .dump()
          << "\n";
      return 0;
    }
    if (*export_cmd) {
      std::size_t omitted = 0;
      const fs::path path = export_alpacaeval(export_run, &omitted);
      if (omitted > 0) err << "export: omitted " << omitted << " sample(s) not done\n";
      out << json{{"export", path.string()}, {"omitted", omitted}}.dump() << "\n";
      return 0;
    }
    if (*analyze_cmd) {
      const auto samples = load_study(analyze_opts.study);
      const auto report = correlation_study(samples, parse_metric(analyze_opts.metric));
      write_output(analyze_opts.out, render_correlation_csv(report), out);
      if (!analyze_opts.out.empty() && analyze_opts.out != "-") {
        out << json{{"metric", analyze_opts.metric},
                    {"mean_rho", report.mean_rho ? json(*report.mean_rho) : json(nullptr)},
                    {"n_valid", report.n_valid},
                    {"samples", report.per_sample_rho.size()},
                    {"tokenizer", report.tokenizer},
                    {"smoothing", report.smoothing}}
                   .dump()
            << "\n";
      }
      return 0;
    }
    if (*report_cmd) {
      std::vector<RunCostSummary> runs;
      for (const auto& dir : report_opts.runs) runs.push_back(summarize_run(dir));
      const auto rows = build_report(runs, load_scores(report_opts.scores),
                                     report_opts.axis == "usd" ? FrontAxis::usd : FrontAxis::tflops);
      for (const auto& run : runs) {
        err << run.label << ": " << run.instances << " instance(s), " << run.usage.totals.prompt
            << " prompt + " << run.usage.totals.completion << " completion tokens, total cost "
            << (run.usage.cost_complete ? run.usage.total_cost.to_string() + " USD" : "n/a") << "\n";
      }
      write_output(report_opts.out, render_report_csv(rows), out);
      return 0;
    }
    if (*serve_cmd) {
      auto mock = std::make_shared<MockBackend>(MockScript::load(serve_opts.script));
      MockServer server(mock);
      err << "mock backend listening on http://" << serve_opts.host << ":" << serve_opts.port << "\n";
      return server.listen(serve_opts.host, serve_opts.port) ? 0 : 1;
    }
    if (*config_cmd) {
      if (config_opts.dump_builtin) {
        out << serialize_config(builtin_config());
        return 0;
      }
      if (config_opts.check.empty()) {
        err << "error: config needs --check FILE or --dump-builtin\n\n" << config_cmd->help();
        return 2;
      }
      const Config config = load_config(config_opts.check);
      json summary = json::array();
      for (const auto& p : config.pipelines) {
        summary.push_back({{"pipeline", p.id}, {"layers", p.layers.size()}, {"calls_per_input", calls_per_input(p)}});
      }
      out << summary.dump() << "\n";
      return 0;
    }
  } catch (const Error& e) {
    err << json{{"error", to_string(e.code())}, {"message", e.what()}, {"field", e.field()}}.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace moa::cli
