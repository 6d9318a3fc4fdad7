#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace moa {

/// Lowercases ASCII and splits on every maximal run of ASCII
/// non-alphanumerics. Bytes >= 0x80 count as word characters, so UTF-8 words
/// stay whole. Correlation values depend on this; bump the version on change.
inline constexpr std::string_view kTokenizerVersion = "alnum-lower-v1";
std::vector<std::string> tokenize(std::string_view text);

/// Smoothing applied to zero n-gram precisions in bleu().
inline constexpr double kBleuEpsilon = 1e-9;
inline constexpr std::string_view kBleuSmoothing = "epsilon-floor-1e-9";

/// Sentence BLEU: geometric mean of clipped n-gram precisions for
/// n = 1..max_n (uniform weights) times exp(min(0, 1 - ref_len/cand_len)).
/// Empty candidate or reference gives 0.
double bleu(std::string_view candidate, std::string_view reference, int max_n);

/// Cosine similarity of L2-normalized tf-idf vectors with tf = raw count and
/// idf = ln((1 + N) / (1 + df)) + 1 over `corpus`. A text without tokens gives 0.
double tfidf_cosine(std::string_view a, std::string_view b, std::span<const std::string> corpus);

/// Unit-cost edit distance over Unicode code points (invalid UTF-8 bytes are
/// single units).
std::size_t edit_distance(std::string_view a, std::string_view b);
/// 1 - distance / max(len a, len b); 1 when both are empty.
double levenshtein_similarity(std::string_view a, std::string_view b);

/// 1-based ranks with ties given their average rank.
std::vector<double> average_ranks(std::span<const double> values);

/// Spearman's rho as the Pearson correlation of average ranks. nullopt when
/// either side is constant. Throws Error(length_mismatch) on unequal lengths
/// and Error(invalid_argument) for fewer than two values.
std::optional<double> spearman(std::span<const double> xs, std::span<const double> ys);

enum class SimilarityMetric { bleu3, bleu4, bleu5, tfidf, levenshtein };
std::string_view to_string(SimilarityMetric metric) noexcept;
SimilarityMetric parse_metric(std::string_view text);

struct SampleStudy {
  std::string instruction;
  std::string aggregate_text;
  std::vector<std::string> proposals;
  std::vector<double> preference_scores;
};

struct CorrelationReport {
  SimilarityMetric metric = SimilarityMetric::bleu4;
  std::vector<std::optional<double>> per_sample_rho;  // nullopt = undefined
  std::optional<double> mean_rho;                      // over defined values
  std::size_t n_valid = 0;
  std::string tokenizer{kTokenizerVersion};
  std::string smoothing;
};

/// Similarity of `aggregate` (candidate) to `proposal` (reference).
double similarity(SimilarityMetric metric, std::string_view aggregate, std::string_view proposal,
                  std::span<const std::string> corpus);

/// Per sample: similarity of the aggregate to each proposal, correlated with
/// the preference scores. The tf-idf corpus is the proposals plus the aggregate.
CorrelationReport correlation_study(std::span<const SampleStudy> samples, SimilarityMetric metric);

std::vector<SampleStudy> parse_study(const nlohmann::json& document);
std::vector<SampleStudy> load_study(const std::filesystem::path& path);

/// CSV: header `sample,metric,rho,n_valid`, one row per sample (rho
/// "undefined" when not defined), then a `mean` summary row.
std::string render_correlation_csv(const CorrelationReport& report);

}  // namespace moa
