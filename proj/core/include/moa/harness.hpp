#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "moa/client.hpp"
#include "moa/config.hpp"
#include "moa/money.hpp"
#include "moa/orchestrator.hpp"

namespace moa {

struct DatasetItem {
  std::string sample_id;
  std::string instruction;

  friend bool operator==(const DatasetItem&, const DatasetItem&) = default;
};

/// Reads a JSON list of records with an `instruction` field (AlpacaEval
/// layout; other fields ignored). `sample_id` (or `id`) is used when present,
/// the record index otherwise.
std::vector<DatasetItem> parse_dataset(const nlohmann::json& document);
std::vector<DatasetItem> load_dataset(const std::filesystem::path& path);
std::string dataset_digest(std::span<const DatasetItem> items);

enum class SampleStatus { pending, done, failed };
std::string_view to_string(SampleStatus status) noexcept;

struct SampleEntry {
  std::string sample_id;
  SampleStatus status = SampleStatus::pending;
  std::string output_digest;  // sha256 of PipelineResult::final
  std::string error;
  std::optional<std::int64_t> cost_micros;
  bool degraded = false;
  std::string finished_at;

  friend bool operator==(const SampleEntry&, const SampleEntry&) = default;
};

/// Run ledger persisted as manifest.json and rewritten atomically after
/// every sample.
struct RunManifest {
  std::string run_id;
  std::string pipeline;
  std::string config_digest;
  std::string dataset_digest;
  std::string created_at;
  std::string updated_at;
  std::vector<SampleEntry> samples;  // dataset order

  std::size_t count(SampleStatus status) const;
  /// Sum of done samples' costs; nullopt if any done sample lacks one.
  std::optional<Money> total_cost() const;

  friend bool operator==(const RunManifest&, const RunManifest&) = default;
};

void to_json(nlohmann::json& j, const RunManifest& m);
void from_json(const nlohmann::json& j, RunManifest& m);

/// Run directory layout.
struct RunPaths {
  std::filesystem::path root;

  std::filesystem::path manifest() const { return root / "manifest.json"; }
  std::filesystem::path config() const { return root / "config.json"; }
  std::filesystem::path results() const { return root / "results.jsonl"; }
  std::filesystem::path records() const { return root / "records.jsonl"; }
  std::filesystem::path exports() const { return root / "exports"; }
};

RunManifest load_manifest(const std::filesystem::path& run_dir);
/// Latest persisted PipelineResult per sample id (results.jsonl).
std::map<std::string, PipelineResult> load_results(const std::filesystem::path& run_dir);
/// Every persisted GenerationRecord with its sample id (records.jsonl).
std::vector<std::pair<std::string, GenerationRecord>> load_records(const std::filesystem::path& run_dir);

/// Digest of the pipeline and every model/endpoint it references.
std::string pipeline_config_digest(const Config& config, const PipelineSpec& pipeline);

struct BenchmarkOptions {
  int parallelism = 4;
  /// Stop after this many samples finish in this invocation.
  std::optional<std::size_t> limit;
  bool degraded_mode = false;
  std::string run_id;  // default: "<pipeline>-<dataset digest prefix>"
  std::function<std::chrono::system_clock::time_point()> clock;
};

/// Runs the pipeline over every sample not yet done in `run_dir`, at most
/// `parallelism` samples in flight. Sample failures are recorded and the
/// run continues; only I/O problems or a manifest/config mismatch throw.
RunManifest run_benchmark(const Config& config, const PipelineSpec& pipeline,
                          std::span<const DatasetItem> dataset, ModelClient& client,
                          const std::filesystem::path& run_dir,
                          const BenchmarkOptions& options = {});

/// Writes exports/alpacaeval_<pipeline>.json: [{instruction, output,
/// generator}] for done samples in manifest order. Throws
/// Error(no_done_samples).
std::filesystem::path export_alpacaeval(const std::filesystem::path& run_dir,
                                        std::size_t* omitted = nullptr);

struct RankRunOptions {
  std::string ranker_model;  // default: the pipeline's final aggregator
  std::uint64_t seed = 0;
  GenerationParams params{.temperature = 0.0, .max_tokens = 16, .seed = std::nullopt};
};

struct RankRunSummary {
  std::filesystem::path export_path;
  std::size_t ranked = 0;
  std::size_t failed = 0;
};

/// LLM-ranker baseline over the layer-1 outputs persisted by a run. Writes
/// rankings.jsonl and exports/alpacaeval_ranker-<model>.json.
RankRunSummary rank_run(const std::filesystem::path& run_dir, ModelClient& client,
                        const RankRunOptions& options = {});

/// Atomic file replacement (write sibling temp file, then rename).
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string iso8601(std::chrono::system_clock::time_point t);

}  // namespace moa
