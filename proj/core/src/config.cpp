#include "moa/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "moa/error.hpp"

namespace moa {
namespace {

using nlohmann::json;

std::string type_name(const json& j) { return j.type_name(); }

/// Typed, path-aware access to one JSON object. Unknown keys are rejected in
/// finish() so that misspelled fields surface instead of silently defaulting.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      throw Error(Errc::parse, path_ + ": expected an object, got " + type_name(j_), path_);
    }
  }

  const std::string& path() const { return path_; }
  std::string child(std::string_view key) const { return path_ + "." + std::string(key); }

  const json* find(std::string_view key) {
    used_.insert(std::string(key));
    const auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  const json& require(std::string_view key) {
    const json* v = find(key);
    if (v == nullptr) throw Error(Errc::parse, child(key) + ": missing required field", child(key));
    return *v;
  }

  std::string string(std::string_view key) { return as_string(require(key), child(key)); }

  std::string string_or(std::string_view key, std::string fallback) {
    const json* v = find(key);
    return v ? as_string(*v, child(key)) : std::move(fallback);
  }

  std::optional<double> optional_number(std::string_view key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_number()) {
      throw Error(Errc::parse, child(key) + ": expected a number, got " + type_name(*v), child(key));
    }
    return v->get<double>();
  }

  double number_or(std::string_view key, double fallback) {
    return optional_number(key).value_or(fallback);
  }

  std::optional<std::int64_t> optional_integer(std::string_view key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_number_integer()) {
      throw Error(Errc::parse, child(key) + ": expected an integer, got " + type_name(*v),
                  child(key));
    }
    return v->get<std::int64_t>();
  }

  int int_or(std::string_view key, int fallback) {
    const auto v = optional_integer(key);
    if (!v) return fallback;
    if (*v < std::numeric_limits<int>::min() || *v > std::numeric_limits<int>::max()) {
      throw Error(Errc::parse, child(key) + ": integer out of range", child(key));
    }
    return static_cast<int>(*v);
  }

  const json& array(std::string_view key) {
    const json& v = require(key);
    if (!v.is_array()) {
      throw Error(Errc::parse, child(key) + ": expected a list, got " + type_name(v), child(key));
    }
    return v;
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!used_.count(key)) {
        throw Error(Errc::parse, path_ + ": unknown field '" + key + "'", child(key));
      }
    }
  }

  static std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) {
      throw Error(Errc::parse, path + ": expected a string, got " + type_name(v), path);
    }
    return v.get<std::string>();
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string, std::less<>> used_;
};

GenerationParams read_params(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  GenerationParams p;
  p.temperature = r.number_or("temperature", p.temperature);
  p.max_tokens = r.int_or("max_tokens", p.max_tokens);
  p.seed = r.optional_integer("seed");
  r.finish();
  return p;
}

EndpointSpec read_endpoint(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  EndpointSpec e;
  e.id = r.string("id");
  e.base_url = r.string("base_url");
  e.api_key_env = r.string_or("api_key_env", "");
  e.max_concurrent = r.int_or("max_concurrent", e.max_concurrent);
  if (const json* rpm = r.find("requests_per_minute")) {
    if (rpm->is_string()) {
      if (rpm->get<std::string>() != "unlimited") {
        throw Error(Errc::parse, r.child("requests_per_minute") + ": expected integer or 'unlimited'",
                    r.child("requests_per_minute"));
      }
    } else {
      e.requests_per_minute = r.int_or("requests_per_minute", 0);
    }
  }
  e.timeout_seconds = r.number_or("timeout", e.timeout_seconds);
  e.max_retries = r.int_or("max_retries", e.max_retries);
  r.finish();
  return e;
}

ModelSpec read_model(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  ModelSpec m;
  m.id = r.string("id");
  m.endpoint = r.string("endpoint");
  m.api_model_name = r.string_or("api_model_name", m.id);
  m.active_params = r.optional_number("active_params");
  m.price_in = r.optional_number("price_in");
  m.price_out = r.optional_number("price_out");
  m.notes = r.string_or("notes", "");
  r.finish();
  return m;
}

AggregationTemplate read_template(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  auto t = AggregationTemplate::standard();
  t.preamble = r.string_or("preamble", t.preamble);
  t.response_header = r.string_or("response_header", t.response_header);
  t.item_format = r.string_or("item_format", t.item_format);
  r.finish();
  return t;
}

PipelineSpec read_pipeline(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  PipelineSpec p;
  p.id = r.string("id");
  const std::string named = "pipelines[" + p.id + "]";
  const json& layers = r.array("layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string lpath = named + ".layers[" + std::to_string(i + 1) + "]";
    ObjectReader lr(layers[i], lpath);
    LayerSpec layer;
    const json& agents = lr.array("agents");
    for (std::size_t a = 0; a < agents.size(); ++a) {
      layer.agents.push_back(
          ObjectReader::as_string(agents[a], lpath + ".agents[" + std::to_string(a + 1) + "]"));
    }
    if (const json* params = lr.find("params")) layer.params = read_params(*params, lpath + ".params");
    lr.finish();
    p.layers.push_back(std::move(layer));
  }
  if (const json* t = r.find("aggregate_template")) {
    p.aggregate_template = read_template(*t, named + ".aggregate_template");
  }
  if (const json* role = r.find("aggregate_role")) {
    p.aggregate_placement =
        parse_aggregate_placement(ObjectReader::as_string(*role, named + ".aggregate_role"));
  }
  r.finish();
  return p;
}

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

template <typename T>
const T* find_by_id(const std::vector<T>& items, std::string_view id) {
  for (const auto& item : items) {
    if (item.id == id) return &item;
  }
  return nullptr;
}

}  // namespace

std::size_t calls_per_input(const PipelineSpec& pipeline) noexcept {
  std::size_t total = 0;
  for (const auto& layer : pipeline.layers) total += layer.agents.size();
  return total;
}

const EndpointSpec& Config::endpoint(std::string_view id) const {
  if (const auto* e = find_by_id(endpoints, id)) return *e;
  throw Error(Errc::reference, "unknown endpoint '" + std::string(id) + "'", std::string(id));
}

const ModelSpec& Config::model(std::string_view id) const {
  if (const auto* m = find_by_id(models, id)) return *m;
  throw Error(Errc::reference, "unknown model '" + std::string(id) + "'", std::string(id));
}

const PipelineSpec& Config::pipeline(std::string_view id) const {
  if (const auto* p = find_by_id(pipelines, id)) return *p;
  throw Error(Errc::reference, "unknown pipeline '" + std::string(id) + "'", std::string(id));
}

const EndpointSpec& Config::endpoint_of(std::string_view model_id) const {
  return endpoint(model(model_id).endpoint);
}

void validate(const Config& config) {
  std::set<std::string, std::less<>> ids;
  for (const auto& e : config.endpoints) {
    const std::string path = "endpoints[" + e.id + "]";
    if (e.id.empty()) throw Error(Errc::invariant, "endpoint id must not be empty", "endpoints");
    if (!ids.insert(e.id).second) {
      throw Error(Errc::invariant, "duplicate endpoint id '" + e.id + "'", path + ".id");
    }
    if (e.base_url.empty()) throw Error(Errc::invariant, path + ": base_url is empty", path + ".base_url");
    if (e.max_concurrent < 1) {
      throw Error(Errc::invariant, path + ": max_concurrent must be >= 1", path + ".max_concurrent");
    }
    if (e.requests_per_minute && *e.requests_per_minute < 1) {
      throw Error(Errc::invariant, path + ": requests_per_minute must be >= 1",
                  path + ".requests_per_minute");
    }
    if (!std::isfinite(e.timeout_seconds) || e.timeout_seconds <= 0.0) {
      throw Error(Errc::invariant, path + ": timeout must be > 0", path + ".timeout");
    }
    if (e.max_retries < 0) {
      throw Error(Errc::invariant, path + ": max_retries must be >= 0", path + ".max_retries");
    }
  }

  ids.clear();
  for (const auto& m : config.models) {
    const std::string path = "models[" + m.id + "]";
    if (m.id.empty()) throw Error(Errc::invariant, "model id must not be empty", "models");
    if (!ids.insert(m.id).second) {
      throw Error(Errc::invariant, "duplicate model id '" + m.id + "'", path + ".id");
    }
    if (!find_by_id(config.endpoints, m.endpoint)) {
      throw Error(Errc::reference, path + ": unknown endpoint '" + m.endpoint + "'", path + ".endpoint");
    }
    if (m.api_model_name.empty()) {
      throw Error(Errc::invariant, path + ": api_model_name is empty", path + ".api_model_name");
    }
    if (m.price_in && !finite_nonneg(*m.price_in)) {
      throw Error(Errc::invariant, path + ": price_in must be >= 0", path + ".price_in");
    }
    if (m.price_out && !finite_nonneg(*m.price_out)) {
      throw Error(Errc::invariant, path + ": price_out must be >= 0", path + ".price_out");
    }
    if (m.active_params && !(std::isfinite(*m.active_params) && *m.active_params > 0.0)) {
      throw Error(Errc::invariant, path + ": active_params must be > 0", path + ".active_params");
    }
  }

  ids.clear();
  for (const auto& p : config.pipelines) {
    const std::string path = "pipelines[" + p.id + "]";
    if (p.id.empty()) throw Error(Errc::invariant, "pipeline id must not be empty", "pipelines");
    if (!ids.insert(p.id).second) {
      throw Error(Errc::invariant, "duplicate pipeline id '" + p.id + "'", path + ".id");
    }
    if (p.layers.empty()) {
      throw Error(Errc::invariant, "pipeline '" + p.id + "' has no layers", path + ".layers");
    }
    for (std::size_t i = 0; i < p.layers.size(); ++i) {
      const auto& layer = p.layers[i];
      const std::string lpath = path + ".layers[" + std::to_string(i + 1) + "]";
      if (layer.agents.empty()) {
        throw Error(Errc::invariant, "pipeline '" + p.id + "' layer " + std::to_string(i + 1) +
                                         " has no agents", lpath + ".agents");
      }
      for (std::size_t a = 0; a < layer.agents.size(); ++a) {
        if (!find_by_id(config.models, layer.agents[a])) {
          throw Error(Errc::reference,
                      "pipeline '" + p.id + "' references unknown model '" + layer.agents[a] + "'",
                      lpath + ".agents[" + std::to_string(a + 1) + "]");
        }
      }
      try {
        validate_params(layer.params);
      } catch (const Error& e) {
        throw Error(Errc::invariant, "pipeline '" + p.id + "': " + e.what(),
                    lpath + ".params." + e.field());
      }
    }
    if (p.layers.back().agents.size() != 1) {
      throw Error(Errc::invariant,
                  "pipeline '" + p.id + "' final layer must contain exactly one agent, found " +
                      std::to_string(p.layers.back().agents.size()),
                  path + ".layers[" + std::to_string(p.layers.size()) + "].agents");
    }
    if (p.aggregate_template.item_format.find("{content}") == std::string::npos) {
      throw Error(Errc::invariant, "pipeline '" + p.id + "' item_format lacks a {content} slot",
                  path + ".aggregate_template.item_format");
    }
  }
}

Config config_from_json(const json& document) {
  ObjectReader root(document, "config");
  const json& schema = root.require("schema");
  if (!schema.is_number_integer() || schema.get<int>() != kConfigSchemaVersion) {
    throw Error(Errc::parse, "config.schema: unsupported schema (expected 1)", "schema");
  }
  root.find("description");

  Config config;
  const json& endpoints = root.array("endpoints");
  for (std::size_t i = 0; i < endpoints.size(); ++i) {
    config.endpoints.push_back(read_endpoint(endpoints[i], "endpoints[" + std::to_string(i) + "]"));
  }
  const json& models = root.array("models");
  for (std::size_t i = 0; i < models.size(); ++i) {
    config.models.push_back(read_model(models[i], "models[" + std::to_string(i) + "]"));
  }
  const json& pipelines = root.array("pipelines");
  for (std::size_t i = 0; i < pipelines.size(); ++i) {
    config.pipelines.push_back(read_pipeline(pipelines[i], "pipelines[" + std::to_string(i) + "]"));
  }
  root.finish();
  validate(config);
  return config;
}

Config parse_config(std::string_view text) {
  json document;
  try {
    document = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::parse, std::string("malformed config document: ") + e.what());
  }
  try {
    return config_from_json(document);
  } catch (const json::exception& e) {
    // Type mismatches nlohmann catches before our readers do.
    throw Error(Errc::parse, std::string("malformed config document: ") + e.what());
  }
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open config file " + path.string(), path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

json to_json(const Config& config) {
  json doc;
  doc["schema"] = kConfigSchemaVersion;
  doc["endpoints"] = json::array();
  for (const auto& e : config.endpoints) {
    json j{{"id", e.id},
           {"base_url", e.base_url},
           {"api_key_env", e.api_key_env},
           {"max_concurrent", e.max_concurrent},
           {"timeout", e.timeout_seconds},
           {"max_retries", e.max_retries}};
    if (e.requests_per_minute) {
      j["requests_per_minute"] = *e.requests_per_minute;
    } else {
      j["requests_per_minute"] = "unlimited";
    }
    doc["endpoints"].push_back(std::move(j));
  }
  doc["models"] = json::array();
  for (const auto& m : config.models) {
    json j{{"id", m.id}, {"endpoint", m.endpoint}, {"api_model_name", m.api_model_name}};
    if (m.active_params) j["active_params"] = *m.active_params;
    if (m.price_in) j["price_in"] = *m.price_in;
    if (m.price_out) j["price_out"] = *m.price_out;
    if (!m.notes.empty()) j["notes"] = m.notes;
    doc["models"].push_back(std::move(j));
  }
  doc["pipelines"] = json::array();
  for (const auto& p : config.pipelines) {
    json layers = json::array();
    for (const auto& layer : p.layers) {
      layers.push_back({{"agents", layer.agents}, {"params", layer.params}});
    }
    doc["pipelines"].push_back(
        {{"id", p.id},
         {"layers", std::move(layers)},
         {"aggregate_role", to_string(p.aggregate_placement)},
         {"aggregate_template",
          {{"preamble", p.aggregate_template.preamble},
           {"response_header", p.aggregate_template.response_header},
           {"item_format", p.aggregate_template.item_format}}}});
  }
  return doc;
}

std::string serialize_config(const Config& config) { return to_json(config).dump(2) + "\n"; }

}  // namespace moa
