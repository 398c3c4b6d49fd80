#include "csl/baseline.hpp"

#include <algorithm>

namespace csl {
namespace {

bool is_object_noun(const ConceptSchema& schema, TokenId t) {
  for (const auto& [c, v] : schema.meanings(t))
    if (c == ConceptSchema::kCategory) return true;
  return false;
}

KeywordSet part_keywords(std::span<const TokenId> part, const ConceptSchema& schema) {
  KeywordSet keys;
  bool noun_seen = false;
  for (std::size_t i = 0; i < part.size(); ++i) {
    const auto meanings = schema.meanings(part[i]);
    if (meanings.empty()) continue;
    if (meanings.size() == 1) {
      keys.insert(meanings.front());
      noun_seen = noun_seen || meanings.front().first == ConceptSchema::kCategory;
      continue;
    }
    const bool before_noun = i + 1 < part.size() && is_object_noun(schema, part[i + 1]);
    const std::size_t wanted = (before_noun || noun_seen) ? ConceptSchema::kColor : ConceptSchema::kCategory;
    auto it = std::find_if(meanings.begin(), meanings.end(), [&](const auto& m) { return m.first == wanted; });
    if (it == meanings.end()) it = meanings.begin();
    keys.insert(*it);
    noun_seen = noun_seen || it->first == ConceptSchema::kCategory;
  }
  return keys;
}

}  // namespace

KeywordSplit extract_keyword_sets(std::span<const TokenId> tokens, const ConceptSchema& schema) {
  std::vector<TokenId> body;
  for (TokenId t : tokens)
    if (t != schema.begin_id() && t != schema.end_id()) body.push_back(t);

  const auto split = std::find(body.begin(), body.end(), schema.and_id());
  KeywordSplit out;
  out.first = part_keywords(std::span<const TokenId>(body.data(), static_cast<std::size_t>(split - body.begin())),
                            schema);
  if (split != body.end()) {
    const auto rest = std::span<const TokenId>(body).subspan(static_cast<std::size_t>(split - body.begin()) + 1);
    out.second = part_keywords(rest, schema);
  }
  return out;
}

void KeywordBaseline::train(const std::vector<Sample>& dataset) {
  const auto half = static_cast<Eigen::Index>(schema_.half_dim());
  for (const auto& s : dataset) {
    const auto split = extract_keyword_sets(s.tokens, schema_);
    const Eigen::Map<const Eigen::VectorXd> teacher(s.teacher.data(), 2 * half);
    table_[split.first] = teacher.head(half);
    if (split.second) table_[*split.second] = teacher.tail(half);
  }
}

Eigen::VectorXd KeywordBaseline::predict(std::span<const TokenId> tokens) const {
  const auto half = static_cast<Eigen::Index>(schema_.half_dim());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * half);
  const auto split = extract_keyword_sets(tokens, schema_);
  if (auto it = table_.find(split.first); it != table_.end()) out.head(half) = it->second;
  if (split.second)
    if (auto it = table_.find(*split.second); it != table_.end()) out.tail(half) = it->second;
  return out;
}

std::vector<Eigen::VectorXd> final_outputs(const KeywordBaseline& model, const std::vector<Sample>& samples) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(model.predict(s.tokens));
  return out;
}

}  // namespace csl
