#include "dbal/curation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <ostream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "csv_util.hpp"
#include "dbal/errors.hpp"
#include "dbal/random.hpp"

namespace dbal {

Corpus::Corpus(std::vector<CorpusRecord> records) : records_(std::move(records)) {
  if (records_.empty()) throw InvalidArgument("corpus must not be empty");
  std::unordered_set<std::string> seen;
  for (const auto& r : records_) {
    if (!seen.insert(r.id).second) {
      throw InvalidArgument("duplicate corpus id: " + r.id);
    }
  }
}

Corpus read_corpus_jsonl(std::istream& in) {
  std::vector<CorpusRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(where + ": " + e.what());
    }
    if (!obj.is_object() || !obj.contains("id") || !obj.contains("text")) {
      throw ParseError(where + ": expected an object with id and text");
    }
    const auto& id = obj["id"];
    const auto& text = obj["text"];
    if (!text.is_string()) throw ParseError(where + ": text must be a string");
    CorpusRecord record;
    if (id.is_string()) {
      record.id = id.get<std::string>();
    } else if (id.is_number_integer()) {
      record.id = id.dump();
    } else {
      throw ParseError(where + ": id must be a string or integer");
    }
    record.text = text.get<std::string>();
    records.push_back(std::move(record));
  }
  return Corpus(std::move(records));
}

Corpus read_corpus_csv(std::istream& in) {
  std::vector<std::string> fields;
  if (!detail::read_csv_record(in, fields)) throw ParseError("empty corpus CSV");
  std::optional<std::size_t> id_col;
  std::optional<std::size_t> text_col;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const std::string name = detail::trim(fields[i]);
    if (name == "id") id_col = i;
    if (name == "text") text_col = i;
  }
  if (!id_col || !text_col) throw ParseError("corpus CSV needs id and text columns");
  const std::size_t width = std::max(*id_col, *text_col) + 1;
  std::vector<CorpusRecord> records;
  std::size_t row = 1;
  while (detail::read_csv_record(in, fields)) {
    ++row;
    if (fields.size() == 1 && detail::trim(fields[0]).empty()) continue;
    if (fields.size() < width) {
      throw ParseError("corpus CSV row " + std::to_string(row) + " is short");
    }
    records.push_back({fields[*id_col], fields[*text_col]});
  }
  return Corpus(std::move(records));
}

std::vector<std::string> read_keywords(std::istream& in) {
  std::vector<std::string> keywords;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    keywords.push_back(line);
  }
  return keywords;
}

std::vector<std::int64_t> KeywordAssignment::counts() const {
  std::vector<std::int64_t> result(keywords.size(), 0);
  for (const auto& label : labels) {
    if (label) ++result[*label];
  }
  return result;
}

std::size_t KeywordAssignment::matched() const {
  return static_cast<std::size_t>(
      std::count_if(labels.begin(), labels.end(),
                    [](const auto& label) { return label.has_value(); }));
}

std::string normalize_text(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

KeywordAssignment match_keywords(const Corpus& corpus,
                                 const std::vector<std::string>& keywords,
                                 const MatchOptions& options) {
  if (keywords.empty()) throw InvalidArgument("keyword list is empty");
  const auto prepare = [&](const std::string& s) {
    return options.exact_bytes ? s : normalize_text(s);
  };
  std::vector<std::string> patterns;
  std::unordered_set<std::string> seen;
  for (const auto& k : keywords) {
    std::string p = prepare(k);
    if (p.empty()) throw InvalidArgument("empty keyword");
    if (!seen.insert(p).second) throw InvalidArgument("duplicate keyword: " + k);
    patterns.push_back(std::move(p));
  }

  KeywordAssignment assignment{keywords, {}};
  assignment.labels.reserve(corpus.size());
  for (const auto& record : corpus.records()) {
    const std::string text = prepare(record.text);
    std::optional<std::size_t> best;
    for (std::size_t j = 0; j < patterns.size(); ++j) {
      if (best && patterns[j].size() <= patterns[*best].size()) continue;
      if (text.find(patterns[j]) != std::string::npos) best = j;
    }
    assignment.labels.push_back(best);
  }
  return assignment;
}

Vector truncated_target(std::span<const std::int64_t> counts,
                        std::int64_t threshold) {
  if (threshold < 1) throw InvalidArgument("threshold must be a positive integer");
  Vector target(static_cast<Index>(counts.size()));
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] < 0) throw InvalidArgument("keyword counts must be nonnegative");
    target[static_cast<Index>(j)] =
        static_cast<double>(std::min(counts[j], threshold));
  }
  const double total = target.sum();
  if (total <= 0.0) throw AllZeroCounts();
  return target / total;
}

CurationPlan curation_weights(const Corpus& corpus,
                              const KeywordAssignment& assignment,
                              const Vector& target,
                              std::optional<std::int64_t> threshold) {
  const std::size_t l = assignment.keywords.size();
  if (assignment.labels.size() != corpus.size()) {
    throw InvalidArgument("assignment does not match the corpus");
  }
  if (static_cast<std::size_t>(target.size()) != l) {
    throw InvalidArgument("target length differs from the keyword count");
  }
  validate_probability_vector(target, "keyword target", false);
  const std::vector<std::int64_t> counts = assignment.counts();
  const auto matched = static_cast<double>(assignment.matched());
  if (matched == 0.0) throw TargetOutsideSupport("no record matched a keyword");

  CurationPlan plan;
  plan.keywords = assignment.keywords;
  plan.labels = assignment.labels;
  plan.target_marginal = target;
  plan.threshold = threshold;
  plan.observed_marginal.resize(static_cast<Index>(l));
  for (std::size_t j = 0; j < l; ++j) {
    const auto y = static_cast<Index>(j);
    plan.observed_marginal[y] = static_cast<double>(counts[j]) / matched;
    if (counts[j] == 0 && target[y] > 0.0) {
      throw TargetOutsideSupport("target puts mass on unmatched keyword " +
                                 assignment.keywords[j]);
    }
  }
  plan.ids.reserve(corpus.size());
  plan.weights.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    plan.ids.push_back(corpus.records()[i].id);
    const auto& label = assignment.labels[i];
    if (!label) {
      plan.weights.push_back(0.0);
      continue;
    }
    if (*label >= l) throw InvalidArgument("keyword label out of range");
    const auto y = static_cast<Index>(*label);
    plan.weights.push_back(target[y] / plan.observed_marginal[y]);
  }
  return plan;
}

Vector weighted_keyword_marginal(const CurationPlan& plan) {
  Vector marginal = Vector::Zero(static_cast<Index>(plan.keywords.size()));
  double total = 0.0;
  for (std::size_t i = 0; i < plan.weights.size(); ++i) {
    if (!plan.labels[i]) continue;
    marginal[static_cast<Index>(*plan.labels[i])] += plan.weights[i];
    total += plan.weights[i];
  }
  if (total <= 0.0) throw InvalidArgument("plan has no positive weight");
  return marginal / total;
}

std::vector<std::string> resample(const CurationPlan& plan, std::int64_t size,
                                  std::uint64_t seed) {
  if (size < 0) throw InvalidArgument("resample size must be nonnegative");
  std::vector<double> cumulative;
  cumulative.reserve(plan.weights.size());
  double running = 0.0;
  for (double w : plan.weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw InvalidArgument("weights must be finite and nonnegative");
    }
    running += w;
    cumulative.push_back(running);
  }
  if (running <= 0.0) throw InvalidArgument("plan has no positive weight");
  std::size_t last_positive = plan.weights.size() - 1;
  while (plan.weights[last_positive] == 0.0) --last_positive;

  Rng rng(seed);
  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(size));
  for (std::int64_t draw = 0; draw < size; ++draw) {
    const double u = rng.uniform() * running;
    // First record whose cumulative weight exceeds u; always positive weight.
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const std::size_t index = it == cumulative.end()
                                  ? last_positive
                                  : static_cast<std::size_t>(it - cumulative.begin());
    ids.push_back(plan.ids[index]);
  }
  return ids;
}

void write_weights_csv(std::ostream& out, const CurationPlan& plan) {
  out << "id,keyword,weight\n";
  for (std::size_t i = 0; i < plan.ids.size(); ++i) {
    out << detail::csv_escape(plan.ids[i]) << ','
        << (plan.labels[i] ? detail::csv_escape(plan.keywords[*plan.labels[i]])
                           : std::string())
        << ',' << format_real(plan.weights[i]) << '\n';
  }
}

}  // namespace dbal
