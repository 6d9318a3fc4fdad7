#include "moa/harness.hpp"

#include <atomic>
#include <ctime>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "moa/accounting.hpp"
#include "moa/digest.hpp"
#include "moa/error.hpp"

namespace moa {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path.string(), path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

json parse_json_file(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(Errc::parse, path.string() + ": " + e.what(), path.string());
  }
}

template <typename Fn>
void for_each_line(const fs::path& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      // A torn final line from a crash mid-append; everything before it is intact.
      if (in.peek() == EOF) break;
      throw Error(Errc::parse, path.string() + ":" + std::to_string(number) + ": malformed line",
                  path.string());
    }
    fn(j);
  }
}

/// Append-only JSON-lines writer; one line per call, flushed immediately.
class LineWriter {
 public:
  explicit LineWriter(const fs::path& path) : path_(path), out_(path, std::ios::binary | std::ios::app) {
    if (!out_) throw Error(Errc::io, "cannot open " + path.string() + " for append", path.string());
  }

  void write(const json& j) {
    out_ << j.dump() << '\n';
    out_.flush();
    if (!out_) throw Error(Errc::io, "write to " + path_.string() + " failed", path_.string());
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

Config sub_config(const Config& config, const PipelineSpec& pipeline) {
  Config sub;
  sub.pipelines.push_back(pipeline);
  std::set<std::string> models;
  for (const auto& layer : pipeline.layers) models.insert(layer.agents.begin(), layer.agents.end());
  std::set<std::string> endpoints;
  for (const auto& m : config.models) {
    if (models.count(m.id)) {
      sub.models.push_back(m);
      endpoints.insert(m.endpoint);
    }
  }
  for (const auto& e : config.endpoints) {
    if (endpoints.count(e.id)) sub.endpoints.push_back(e);
  }
  return sub;
}

SampleStatus parse_status(std::string_view s) {
  if (s == "pending") return SampleStatus::pending;
  if (s == "done") return SampleStatus::done;
  if (s == "failed") return SampleStatus::failed;
  throw Error(Errc::parse, "unknown sample status '" + std::string(s) + "'", "status");
}

}  // namespace

std::string iso8601(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot write " + tmp.string(), tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw Error(Errc::io, "write to " + tmp.string() + " failed", tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(Errc::io, "cannot replace " + path.string() + ": " + ec.message(), path.string());
}

std::vector<DatasetItem> parse_dataset(const json& document) {
  if (!document.is_array()) throw Error(Errc::parse, "dataset must be a list of records");
  std::vector<DatasetItem> items;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < document.size(); ++i) {
    const auto& rec = document[i];
    const std::string where = "records[" + std::to_string(i) + "]";
    if (!rec.is_object()) throw Error(Errc::parse, where + ": expected an object", where);
    const auto it = rec.find("instruction");
    if (it == rec.end() || !it->is_string()) {
      throw Error(Errc::parse, where + ": missing string field 'instruction'", where + ".instruction");
    }
    DatasetItem item;
    item.instruction = it->get<std::string>();
    const json* id = nullptr;
    if (rec.contains("sample_id")) {
      id = &rec["sample_id"];
    } else if (rec.contains("id")) {
      id = &rec["id"];
    }
    if (id && id->is_string()) {
      item.sample_id = id->get<std::string>();
    } else if (id && id->is_number_integer()) {
      item.sample_id = std::to_string(id->get<std::int64_t>());
    } else {
      item.sample_id = std::to_string(i);
    }
    if (!seen.insert(item.sample_id).second) {
      throw Error(Errc::duplicate_id, "duplicate sample_id '" + item.sample_id + "'", where);
    }
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<DatasetItem> load_dataset(const fs::path& path) { return parse_dataset(parse_json_file(path)); }

std::string dataset_digest(std::span<const DatasetItem> items) {
  json j = json::array();
  for (const auto& item : items) j.push_back({item.sample_id, item.instruction});
  return json_digest(j);
}

std::string_view to_string(SampleStatus status) noexcept {
  switch (status) {
    case SampleStatus::pending: return "pending";
    case SampleStatus::done: return "done";
    case SampleStatus::failed: return "failed";
  }
  return "pending";
}

std::size_t RunManifest::count(SampleStatus status) const {
  std::size_t n = 0;
  for (const auto& s : samples) n += s.status == status;
  return n;
}

std::optional<Money> RunManifest::total_cost() const {
  Money total;
  for (const auto& s : samples) {
    if (s.status != SampleStatus::done) continue;
    if (!s.cost_micros) return std::nullopt;
    total += Money::from_micros(*s.cost_micros);
  }
  return total;
}

void to_json(json& j, const RunManifest& m) {
  json samples = json::array();
  for (const auto& s : m.samples) {
    json e{{"sample_id", s.sample_id},
           {"status", to_string(s.status)},
           {"output_digest", s.output_digest},
           {"error", s.error},
           {"degraded", s.degraded},
           {"finished_at", s.finished_at}};
    e["cost_micros"] = s.cost_micros ? json(*s.cost_micros) : json(nullptr);
    samples.push_back(std::move(e));
  }
  const auto total = m.total_cost();
  j = json{{"schema", 1},
           {"run_id", m.run_id},
           {"pipeline", m.pipeline},
           {"config_digest", m.config_digest},
           {"dataset_digest", m.dataset_digest},
           {"created_at", m.created_at},
           {"updated_at", m.updated_at},
           {"counts",
            {{"done", m.count(SampleStatus::done)},
             {"failed", m.count(SampleStatus::failed)},
             {"pending", m.count(SampleStatus::pending)}}},
           {"total_cost_usd", total ? json(total->to_string()) : json(nullptr)},
           {"samples", std::move(samples)}};
}

void from_json(const json& j, RunManifest& m) {
  m.run_id = j.at("run_id").get<std::string>();
  m.pipeline = j.at("pipeline").get<std::string>();
  m.config_digest = j.at("config_digest").get<std::string>();
  m.dataset_digest = j.at("dataset_digest").get<std::string>();
  m.created_at = j.at("created_at").get<std::string>();
  m.updated_at = j.at("updated_at").get<std::string>();
  m.samples.clear();
  for (const auto& e : j.at("samples")) {
    SampleEntry s;
    s.sample_id = e.at("sample_id").get<std::string>();
    s.status = parse_status(e.at("status").get<std::string>());
    s.output_digest = e.value("output_digest", "");
    s.error = e.value("error", "");
    s.degraded = e.value("degraded", false);
    s.finished_at = e.value("finished_at", "");
    if (e.contains("cost_micros") && !e["cost_micros"].is_null()) {
      s.cost_micros = e["cost_micros"].get<std::int64_t>();
    }
    m.samples.push_back(std::move(s));
  }
}

RunManifest load_manifest(const fs::path& run_dir) {
  const json j = parse_json_file(RunPaths{run_dir}.manifest());
  try {
    return j.get<RunManifest>();
  } catch (const json::exception& e) {
    throw Error(Errc::parse, "malformed manifest in " + run_dir.string() + ": " + e.what(),
                run_dir.string());
  }
}

std::map<std::string, PipelineResult> load_results(const fs::path& run_dir) {
  std::map<std::string, PipelineResult> out;
  for_each_line(RunPaths{run_dir}.results(), [&](const json& j) {
    out[j.at("sample_id").get<std::string>()] = j.at("result").get<PipelineResult>();
  });
  return out;
}

std::vector<std::pair<std::string, GenerationRecord>> load_records(const fs::path& run_dir) {
  std::vector<std::pair<std::string, GenerationRecord>> out;
  for_each_line(RunPaths{run_dir}.records(), [&](const json& j) {
    out.emplace_back(j.at("sample_id").get<std::string>(), j.at("record").get<GenerationRecord>());
  });
  return out;
}

std::string pipeline_config_digest(const Config& config, const PipelineSpec& pipeline) {
  return json_digest(to_json(sub_config(config, pipeline)));
}

RunManifest run_benchmark(const Config& config, const PipelineSpec& pipeline,
                          std::span<const DatasetItem> dataset, ModelClient& client,
                          const fs::path& run_dir, const BenchmarkOptions& options) {
  const RunPaths paths{run_dir};
  std::error_code ec;
  fs::create_directories(paths.exports(), ec);
  if (ec) throw Error(Errc::io, "cannot create run directory " + run_dir.string() + ": " + ec.message());

  auto now = [&] {
    return iso8601(options.clock ? options.clock() : std::chrono::system_clock::now());
  };

  std::set<std::string> ids;
  for (const auto& item : dataset) {
    if (!ids.insert(item.sample_id).second) {
      throw Error(Errc::duplicate_id, "duplicate sample_id '" + item.sample_id + "'", item.sample_id);
    }
  }

  const std::string config_digest = pipeline_config_digest(config, pipeline);
  const std::string data_digest = dataset_digest(dataset);

  RunManifest manifest;
  if (fs::exists(paths.manifest())) {
    manifest = load_manifest(run_dir);
    if (manifest.pipeline != pipeline.id || manifest.config_digest != config_digest ||
        manifest.dataset_digest != data_digest) {
      throw Error(Errc::invariant,
                  "run directory " + run_dir.string() +
                      " belongs to a different pipeline, config or dataset; use a fresh --out",
                  run_dir.string());
    }
  } else {
    manifest.run_id = options.run_id.empty() ? pipeline.id + "-" + data_digest.substr(0, 8)
                                             : options.run_id;
    manifest.pipeline = pipeline.id;
    manifest.config_digest = config_digest;
    manifest.dataset_digest = data_digest;
    manifest.created_at = now();
    manifest.updated_at = manifest.created_at;
    for (const auto& item : dataset) {
      SampleEntry entry;
      entry.sample_id = item.sample_id;
      manifest.samples.push_back(std::move(entry));
    }
    write_file_atomic(paths.config(), serialize_config(sub_config(config, pipeline)));
    write_file_atomic(paths.manifest(), json(manifest).dump(2) + "\n");
  }

  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (manifest.samples[i].status != SampleStatus::done) todo.push_back(i);
  }
  const std::size_t budget = std::min(todo.size(), options.limit.value_or(todo.size()));

  LineWriter records(paths.records());
  LineWriter results(paths.results());
  std::mutex writer_mu;  // serializes records, results and manifest writes
  std::atomic<std::size_t> next{0};
  std::exception_ptr io_failure;

  auto worker = [&] {
    for (;;) {
      const std::size_t slot = next.fetch_add(1);
      if (slot >= budget) return;
      {
        std::lock_guard lock(writer_mu);
        if (io_failure) return;
      }
      const std::size_t i = todo[slot];
      const DatasetItem& item = dataset[i];

      ExecutionOptions exec;
      exec.degraded_mode = options.degraded_mode;
      exec.on_record = [&](const GenerationRecord& r) {
        std::lock_guard lock(writer_mu);
        records.write({{"sample_id", item.sample_id}, {"record", r}});
      };

      SampleEntry entry;
      entry.sample_id = item.sample_id;
      std::optional<PipelineResult> result;
      try {
        result = run_pipeline(client, pipeline, item.instruction, exec);
        entry.status = SampleStatus::done;
        entry.output_digest = sha256_hex(result->final);
        entry.degraded = result->degraded;
        const UsageSummary usage = summarize_usage(*result);
        if (usage.cost_complete) entry.cost_micros = usage.total_cost.micros();
      } catch (const Error& e) {
        if (e.code() == Errc::io) {
          std::lock_guard lock(writer_mu);
          if (!io_failure) io_failure = std::current_exception();
          return;
        }
        entry.status = SampleStatus::failed;
        entry.error = std::string(to_string(e.code())) + ": " + e.what();
      } catch (const std::exception& e) {
        entry.status = SampleStatus::failed;
        entry.error = e.what();
      }

      std::lock_guard lock(writer_mu);
      try {
        if (result) results.write({{"sample_id", item.sample_id}, {"result", *result}});
        entry.finished_at = now();
        manifest.samples[i] = entry;
        manifest.updated_at = entry.finished_at;
        write_file_atomic(paths.manifest(), json(manifest).dump(2) + "\n");
      } catch (...) {
        if (!io_failure) io_failure = std::current_exception();
        return;
      }
    }
  };

  const std::size_t threads =
      std::min<std::size_t>(budget, static_cast<std::size_t>(std::max(1, options.parallelism)));
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (io_failure) std::rethrow_exception(io_failure);
  return manifest;
}

fs::path export_alpacaeval(const fs::path& run_dir, std::size_t* omitted) {
  const RunManifest manifest = load_manifest(run_dir);
  const auto results = load_results(run_dir);
  json out = json::array();
  std::size_t skipped = 0;
  for (const auto& s : manifest.samples) {
    if (s.status != SampleStatus::done) {
      ++skipped;
      continue;
    }
    const auto it = results.find(s.sample_id);
    if (it == results.end()) {
      throw Error(Errc::io, "sample '" + s.sample_id + "' is done but has no persisted result",
                  s.sample_id);
    }
    out.push_back({{"instruction", it->second.instruction},
                   {"output", it->second.final},
                   {"generator", manifest.pipeline}});
  }
  if (omitted) *omitted = skipped;
  if (out.empty()) {
    throw Error(Errc::no_done_samples, "run " + manifest.run_id + " has no completed samples",
                run_dir.string());
  }
  const RunPaths paths{run_dir};
  fs::create_directories(paths.exports());
  const fs::path path = paths.exports() / ("alpacaeval_" + manifest.pipeline + ".json");
  write_file_atomic(path, out.dump(2) + "\n");
  return path;
}

RankRunSummary rank_run(const fs::path& run_dir, ModelClient& client, const RankRunOptions& options) {
  const RunPaths paths{run_dir};
  const RunManifest manifest = load_manifest(run_dir);
  const auto results = load_results(run_dir);
  std::string ranker = options.ranker_model;
  if (ranker.empty()) {
    const Config snapshot = load_config(paths.config());
    ranker = snapshot.pipeline(manifest.pipeline).layers.back().agents.front();
  }

  RankRunSummary summary;
  std::string rankings;
  json exported = json::array();
  for (std::size_t i = 0; i < manifest.samples.size(); ++i) {
    const auto& s = manifest.samples[i];
    if (s.status != SampleStatus::done) continue;
    const PipelineResult& result = results.at(s.sample_id);
    const auto candidates = result.contents(0);
    json line{{"sample_id", s.sample_id}, {"ranker", ranker}};
    try {
      const RankOutcome outcome = rank_and_select(client, ranker, result.instruction, candidates,
                                                  options.seed + i, options.params);
      line["winner_index"] = outcome.winner_index;
      line["winner_model"] = result.layers.front().records[outcome.winner_index].model;
      line["raw_choice"] = outcome.raw_choice;
      line["order"] = outcome.order;
      line["record"] = outcome.record;
      exported.push_back({{"instruction", result.instruction},
                          {"output", candidates[outcome.winner_index]},
                          {"generator", "ranker-" + ranker}});
      ++summary.ranked;
    } catch (const Error& e) {
      line["error"] = std::string(to_string(e.code())) + ": " + e.what();
      ++summary.failed;
    }
    rankings += line.dump() + "\n";
  }
  write_file_atomic(run_dir / "rankings.jsonl", rankings);
  if (exported.empty()) {
    throw Error(Errc::no_done_samples, "no sample could be ranked in " + run_dir.string(),
                run_dir.string());
  }
  fs::create_directories(paths.exports());
  summary.export_path = paths.exports() / ("alpacaeval_ranker-" + ranker + ".json");
  write_file_atomic(summary.export_path, exported.dump(2) + "\n");
  return summary;
}

}  // namespace moa
