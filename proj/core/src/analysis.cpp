#include "moa/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "moa/error.hpp"

namespace moa {
namespace {

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

using NgramCounts = std::map<std::vector<std::string_view>, int>;

NgramCounts ngrams(const std::vector<std::string>& tokens, int n) {
  NgramCounts counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::vector<std::string_view> gram(tokens.begin() + i, tokens.begin() + i + n);
    ++counts[gram];
  }
  return counts;
}

std::vector<std::u32string::value_type> code_points(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    int len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xe ? 3 : (c >> 3) == 0x1e ? 4 : 0;
    bool valid = len > 0 && i + len <= s.size();
    for (int k = 1; valid && k < len; ++k) {
      valid = (static_cast<unsigned char>(s[i + k]) & 0xc0) == 0x80;
    }
    if (!valid) {
      // Map stray bytes into a private range so they never equal a real code point.
      out.push_back(0x110000 + c);
      ++i;
      continue;
    }
    char32_t cp = len == 1 ? c : len == 2 ? (c & 0x1f) : len == 3 ? (c & 0x0f) : (c & 0x07);
    for (int k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3f);
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::map<std::string, double> tf_counts(const std::vector<std::string>& tokens) {
  std::map<std::string, double> tf;
  for (const auto& t : tokens) tf[t] += 1.0;
  return tf;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_word_byte(c)) {
      current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

double bleu(std::string_view candidate, std::string_view reference, int max_n) {
  if (max_n < 1) throw Error(Errc::invalid_argument, "bleu max_n must be >= 1", "max_n");
  const auto cand = tokenize(candidate);
  const auto ref = tokenize(reference);
  if (cand.empty() || ref.empty()) return 0.0;

  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    const auto cand_grams = ngrams(cand, n);
    const auto ref_grams = ngrams(ref, n);
    int matched = 0;
    int total = 0;
    for (const auto& [gram, count] : cand_grams) {
      total += count;
      if (auto it = ref_grams.find(gram); it != ref_grams.end()) matched += std::min(count, it->second);
    }
    const double precision = total == 0 ? 0.0 : static_cast<double>(matched) / total;
    log_sum += std::log(std::max(precision, kBleuEpsilon));
  }
  const double brevity =
      std::exp(std::min(0.0, 1.0 - static_cast<double>(ref.size()) / static_cast<double>(cand.size())));
  return std::clamp(brevity * std::exp(log_sum / max_n), 0.0, 1.0);
}

double tfidf_cosine(std::string_view a, std::string_view b, std::span<const std::string> corpus) {
  const bool has_a = std::find(corpus.begin(), corpus.end(), a) != corpus.end();
  const bool has_b = std::find(corpus.begin(), corpus.end(), b) != corpus.end();
  if (!has_a || !has_b) {
    throw Error(Errc::invalid_argument, "tf-idf corpus must contain both texts", "corpus");
  }
  const auto tf_a = tf_counts(tokenize(a));
  const auto tf_b = tf_counts(tokenize(b));
  if (tf_a.empty() || tf_b.empty()) return 0.0;

  std::map<std::string, int> df;
  for (const auto& doc : corpus) {
    auto tokens = tokenize(doc);
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    for (auto& t : tokens) ++df[t];
  }
  const double n_docs = static_cast<double>(corpus.size());
  auto weight = [&](const std::string& term, double tf) {
    return tf * (std::log((1.0 + n_docs) / (1.0 + df[term])) + 1.0);
  };

  double norm_a = 0.0;
  double norm_b = 0.0;
  double dot = 0.0;
  for (const auto& [term, tf] : tf_a) norm_a += std::pow(weight(term, tf), 2);
  for (const auto& [term, tf] : tf_b) {
    const double wb = weight(term, tf);
    norm_b += wb * wb;
    if (auto it = tf_a.find(term); it != tf_a.end()) dot += weight(term, it->second) * wb;
  }
  return std::clamp(dot / (std::sqrt(norm_a) * std::sqrt(norm_b)), 0.0, 1.0);
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  const auto s = code_points(a);
  const auto t = code_points(b);
  std::vector<std::size_t> prev(t.size() + 1);
  std::vector<std::size_t> curr(t.size() + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (std::size_t i = 1; i <= s.size(); ++i) {
    curr[0] = i;
    for (std::size_t j = 1; j <= t.size(); ++j) {
      const std::size_t substitute = prev[j - 1] + (s[i - 1] == t[j - 1] ? 0 : 1);
      curr[j] = std::min({prev[j] + 1, curr[j - 1] + 1, substitute});
    }
    std::swap(prev, curr);
  }
  return prev[t.size()];
}

double levenshtein_similarity(std::string_view a, std::string_view b) {
  const std::size_t longest = std::max(code_points(a).size(), code_points(b).size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(edit_distance(a, b)) / static_cast<double>(longest);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto l, auto r) { return values[l] < values[r]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && values[idx[j + 1]] == values[idx[i]]) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw Error(Errc::length_mismatch, "spearman inputs differ in length (" +
                                           std::to_string(xs.size()) + " vs " +
                                           std::to_string(ys.size()) + ")");
  }
  if (xs.size() < 2) throw Error(Errc::invalid_argument, "spearman needs at least two values");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::string_view to_string(SimilarityMetric metric) noexcept {
  switch (metric) {
    case SimilarityMetric::bleu3: return "bleu-3";
    case SimilarityMetric::bleu4: return "bleu-4";
    case SimilarityMetric::bleu5: return "bleu-5";
    case SimilarityMetric::tfidf: return "tfidf";
    case SimilarityMetric::levenshtein: return "levenshtein";
  }
  return "bleu-4";
}

SimilarityMetric parse_metric(std::string_view text) {
  for (auto m : {SimilarityMetric::bleu3, SimilarityMetric::bleu4, SimilarityMetric::bleu5,
                 SimilarityMetric::tfidf, SimilarityMetric::levenshtein}) {
    if (to_string(m) == text) return m;
  }
  throw Error(Errc::invalid_argument, "unknown similarity metric '" + std::string(text) + "'",
              "metric");
}

double similarity(SimilarityMetric metric, std::string_view aggregate, std::string_view proposal,
                  std::span<const std::string> corpus) {
  switch (metric) {
    case SimilarityMetric::bleu3: return bleu(aggregate, proposal, 3);
    case SimilarityMetric::bleu4: return bleu(aggregate, proposal, 4);
    case SimilarityMetric::bleu5: return bleu(aggregate, proposal, 5);
    case SimilarityMetric::tfidf: return tfidf_cosine(aggregate, proposal, corpus);
    case SimilarityMetric::levenshtein: return levenshtein_similarity(aggregate, proposal);
  }
  return 0.0;
}

CorrelationReport correlation_study(std::span<const SampleStudy> samples, SimilarityMetric metric) {
  CorrelationReport report;
  report.metric = metric;
  const bool is_bleu = metric == SimilarityMetric::bleu3 || metric == SimilarityMetric::bleu4 ||
                       metric == SimilarityMetric::bleu5;
  report.smoothing = is_bleu ? std::string(kBleuSmoothing) : "none";

  double sum = 0.0;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto& sample = samples[s];
    if (sample.proposals.size() != sample.preference_scores.size() || sample.proposals.size() < 2) {
      throw Error(Errc::length_mismatch,
                  "study sample " + std::to_string(s) +
                      " needs >= 2 proposals with one preference score each",
                  "samples[" + std::to_string(s) + "]");
    }
    std::vector<std::string> corpus = sample.proposals;
    corpus.push_back(sample.aggregate_text);
    std::vector<double> sims;
    sims.reserve(sample.proposals.size());
    for (const auto& p : sample.proposals) sims.push_back(similarity(metric, sample.aggregate_text, p, corpus));
    const auto rho = spearman(sims, sample.preference_scores);
    report.per_sample_rho.push_back(rho);
    if (rho) {
      sum += *rho;
      ++report.n_valid;
    }
  }
  if (report.n_valid > 0) report.mean_rho = sum / static_cast<double>(report.n_valid);
  return report;
}

std::vector<SampleStudy> parse_study(const nlohmann::json& document) {
  if (!document.is_array()) throw Error(Errc::parse, "study file must be a list of records");
  std::vector<SampleStudy> out;
  for (std::size_t i = 0; i < document.size(); ++i) {
    const auto& rec = document[i];
    try {
      SampleStudy s;
      s.instruction = rec.value("instruction", "");
      s.aggregate_text = rec.at("aggregate").get<std::string>();
      s.proposals = rec.at("proposals").get<std::vector<std::string>>();
      s.preference_scores = rec.at("preference_scores").get<std::vector<double>>();
      if (s.proposals.size() != s.preference_scores.size() || s.proposals.size() < 2) {
        throw Error(Errc::parse, "record " + std::to_string(i) +
                                     ": proposals and preference_scores must have equal length >= 2",
                    "records[" + std::to_string(i) + "]");
      }
      out.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::parse, "record " + std::to_string(i) + ": " + e.what(),
                  "records[" + std::to_string(i) + "]");
    }
  }
  return out;
}

std::vector<SampleStudy> load_study(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open study file " + path.string(), path.string());
  try {
    return parse_study(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::parse, std::string("malformed study file: ") + e.what(), path.string());
  }
}

std::string render_correlation_csv(const CorrelationReport& report) {
  std::ostringstream out;
  out.precision(17);
  const auto metric = to_string(report.metric);
  out << "sample,metric,rho,n_valid\n";
  for (std::size_t i = 0; i < report.per_sample_rho.size(); ++i) {
    out << i << ',' << metric << ',';
    if (report.per_sample_rho[i]) {
      out << *report.per_sample_rho[i];
    } else {
      out << "undefined";
    }
    out << ",\n";
  }
  out << "mean," << metric << ',';
  if (report.mean_rho) {
    out << *report.mean_rho;
  } else {
    out << "undefined";
  }
  out << ',' << report.n_valid << '\n';
  return out.str();
}

}  // namespace moa
