#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "csl/corpus.hpp"

namespace csl {

/// Unordered set of (concept, value) keywords read from one clause.
using KeywordSet = std::set<std::pair<std::size_t, std::size_t>>;

struct KeywordSplit {
  KeywordSet first;
  std::optional<KeywordSet> second;
};

/// Splits a sentence at its first "and" and collects each part's value
/// words. A word with several meanings ("orange") is read as a color when
/// an object noun follows it or precedes it in the same part, otherwise as
/// an object category.
KeywordSplit extract_keyword_sets(std::span<const TokenId> tokens, const ConceptSchema& schema);

/// Memorises keyword set -> half teacher vector; predicts by lookup.
class KeywordBaseline {
 public:
  explicit KeywordBaseline(ConceptSchema schema) : schema_(std::move(schema)) {}

  /// Later samples with the same key overwrite earlier ones.
  void train(const std::vector<Sample>& dataset);
  /// Concatenated halves; zeros for unseen keys or a missing second part.
  Eigen::VectorXd predict(std::span<const TokenId> tokens) const;

  std::size_t table_size() const { return table_.size(); }
  const std::map<KeywordSet, Eigen::VectorXd>& table() const { return table_; }

 private:
  ConceptSchema schema_;
  std::map<KeywordSet, Eigen::VectorXd> table_;
};

std::vector<Eigen::VectorXd> final_outputs(const KeywordBaseline& model, const std::vector<Sample>& samples);

}  // namespace csl
