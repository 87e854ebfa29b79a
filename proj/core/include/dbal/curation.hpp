#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dbal/measure.hpp"

namespace dbal {

struct CorpusRecord {
  std::string id;
  std::string text;
};

/// In-memory text corpus with unique ids.
class Corpus {
 public:
  explicit Corpus(std::vector<CorpusRecord> records);

  const std::vector<CorpusRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }

 private:
  std::vector<CorpusRecord> records_;
};

/// One JSON object per line with string "text" and string or integer "id".
/// Blank lines are skipped.
Corpus read_corpus_jsonl(std::istream& in);

/// CSV with a header naming "id" and "text" columns (any order).
Corpus read_corpus_csv(std::istream& in);

/// Keyword file: one keyword per line; blank lines ignored.
std::vector<std::string> read_keywords(std::istream& in);

struct MatchOptions {
  /// Compare raw bytes instead of lowercased, whitespace-collapsed text.
  bool exact_bytes = false;
};

struct KeywordAssignment {
  std::vector<std::string> keywords;
  /// Per record: index into keywords, or nullopt when nothing matched.
  std::vector<std::optional<std::size_t>> labels;

  std::vector<std::int64_t> counts() const;
  std::size_t matched() const;
};

/// Lowercase ASCII, whitespace runs collapsed to one space, ends trimmed.
std::string normalize_text(const std::string& text);

/// Labels each record with the longest keyword occurring in it as a
/// substring; equal lengths go to the earlier keyword.
KeywordAssignment match_keywords(const Corpus& corpus,
                                 const std::vector<std::string>& keywords,
                                 const MatchOptions& options = {});

/// P(y) proportional to min(count(y), threshold).
Vector truncated_target(std::span<const std::int64_t> counts,
                        std::int64_t threshold);

struct CurationPlan {
  std::vector<std::string> keywords;
  std::vector<std::string> ids;
  std::vector<std::optional<std::size_t>> labels;
  /// Keyword frequencies among matched records.
  Vector observed_marginal;
  Vector target_marginal;
  /// target(label) / observed(label); 0 for unmatched records.
  std::vector<double> weights;
  std::optional<std::int64_t> threshold;
};

/// One rescaling of the keyword axis of the (record x keyword) empirical
/// measure toward `target`.
CurationPlan curation_weights(const Corpus& corpus,
                              const KeywordAssignment& assignment,
                              const Vector& target,
                              std::optional<std::int64_t> threshold = {});

/// Keyword distribution with record weights normalized to sum one.
Vector weighted_keyword_marginal(const CurationPlan& plan);

/// `size` ids drawn with replacement, probability proportional to weight.
std::vector<std::string> resample(const CurationPlan& plan, std::int64_t size,
                                  std::uint64_t seed);

/// CSV with columns id,keyword,weight (empty keyword when unmatched).
void write_weights_csv(std::ostream& out, const CurationPlan& plan);

}  // namespace dbal
