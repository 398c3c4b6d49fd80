#include "csl/corpus.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace csl {
namespace {

// Function words of the clause grammar, in first-appearance order.
const std::vector<std::string>& grammar_function_words() {
  static const std::vector<std::string> words = {"a", "the", "this", "that", "is", "on", "there"};
  return words;
}

void append_unique(std::vector<std::string>& out, const std::string& word) {
  if (std::find(out.begin(), out.end(), word) == out.end()) out.push_back(word);
}

}  // namespace

ConceptSchema::ConceptSchema(std::vector<Concept> concepts) : concepts_(std::move(concepts)) {
  if (concepts_.size() < 3)
    throw std::invalid_argument("schema needs category, color and position concepts");
  for (const auto& c : concepts_) {
    if (c.values.empty()) throw std::invalid_argument("concept '" + c.name + "' has no values");
    concept_offsets_.push_back(half_dim_);
    half_dim_ += c.values.size();
  }

  vocabulary_.emplace_back(kBeginWord);
  vocabulary_.emplace_back(kEndWord);
  for (const auto& c : concepts_)
    for (const auto& v : c.values) append_unique(vocabulary_, v);
  for (const auto& w : grammar_function_words()) append_unique(vocabulary_, w);
  append_unique(vocabulary_, std::string(kAndWord));

  meanings_.resize(vocabulary_.size());
  for (std::size_t c = 0; c < concepts_.size(); ++c)
    for (std::size_t v = 0; v < concepts_[c].values.size(); ++v)
      meanings_[word_id(concepts_[c].values[v])].emplace_back(c, v);

  begin_id_ = word_id(kBeginWord);
  end_id_ = word_id(kEndWord);
  and_id_ = word_id(kAndWord);
}

std::optional<TokenId> ConceptSchema::find_word(std::string_view word) const {
  auto it = std::find(vocabulary_.begin(), vocabulary_.end(), word);
  if (it == vocabulary_.end()) return std::nullopt;
  return static_cast<TokenId>(it - vocabulary_.begin());
}

TokenId ConceptSchema::word_id(std::string_view word) const {
  auto id = find_word(word);
  if (!id) throw std::invalid_argument("unknown word '" + std::string(word) + "'");
  return *id;
}

bool ConceptSchema::is_value_word(TokenId id) const { return !meanings_.at(id).empty(); }

std::vector<std::pair<std::size_t, std::size_t>> ConceptSchema::meanings(TokenId id) const {
  return meanings_.at(id);
}

std::string ConceptSchema::output_label(std::size_t component) const {
  if (component >= output_dim()) throw std::out_of_range("output component out of range");
  const std::size_t slot = component / half_dim_;
  const std::size_t local = component % half_dim_;
  std::size_t c = 0;
  while (c + 1 < concepts_.size() && concept_offsets_[c + 1] <= local) ++c;
  return concepts_[c].values[local - concept_offsets_[c]] + "_" + concepts_[c].name + "_obj" +
         std::to_string(slot + 1);
}

std::uint64_t ConceptSchema::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::string_view s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 1099511628211ULL;
    }
    h ^= 0xff;
    h *= 1099511628211ULL;
  };
  for (const auto& c : concepts_) {
    mix(c.name);
    for (const auto& v : c.values) mix(v);
  }
  for (const auto& w : vocabulary_) mix(w);
  return h;
}

ConceptSchema default_schema() { return scaled_schema(4); }

ConceptSchema scaled_schema(std::size_t n_objects) {
  if (n_objects == 0) throw std::invalid_argument("n_objects must be positive");
  static const std::vector<std::string> canonical = {"cup", "bowl", "orange", "glass"};
  std::vector<std::string> objects;
  for (std::size_t i = 0; i < n_objects; ++i)
    objects.push_back(i < canonical.size() ? canonical[i] : "object" + std::to_string(i + 1));
  return ConceptSchema({
      {"object", objects},
      {"color", {"red", "orange", "blue", "green"}},
      {"position", {"left", "middle", "right"}},
  });
}

// ---------------------------------------------------------------------------
// Grammar

GrammarExpr GrammarExpr::w(std::string word) {
  GrammarExpr e;
  e.kind = Kind::Word;
  e.word = std::move(word);
  return e;
}

GrammarExpr GrammarExpr::ref(std::size_t concept_index) {
  GrammarExpr e;
  e.kind = Kind::ConceptRef;
  e.concept_index = concept_index;
  return e;
}

GrammarExpr GrammarExpr::seq(std::vector<GrammarExpr> children) {
  GrammarExpr e;
  e.kind = Kind::Sequence;
  e.children = std::move(children);
  return e;
}

GrammarExpr GrammarExpr::choice(std::vector<GrammarExpr> children) {
  GrammarExpr e;
  e.kind = Kind::Choice;
  e.children = std::move(children);
  return e;
}

GrammarExpr GrammarExpr::opt(GrammarExpr child) {
  GrammarExpr e;
  e.kind = Kind::Optional;
  e.children.push_back(std::move(child));
  return e;
}

GrammarSpec GrammarSpec::standard() {
  using E = GrammarExpr;
  const E obj = E::ref(ConceptSchema::kCategory);
  const E col = E::ref(ConceptSchema::kColor);
  const E pos = E::ref(ConceptSchema::kPosition);
  const E the = E::choice({E::w("a"), E::w("the")});
  const E this_ = E::choice({E::w("this"), E::w("that")});

  GrammarSpec g;
  g.clause_ = E::choice({
      E::seq({this_, E::w("is"), the, E::opt(col), obj}),
      E::seq({the, obj, E::opt(E::seq({E::w("on"), E::w("the"), pos})), E::w("is"), col}),
      E::seq({the, E::opt(col), obj, E::w("is"), E::w("on"), E::w("the"), pos}),
      E::seq({E::w("there"), E::w("is"), the, E::opt(col), obj, E::w("on"), E::w("the"), pos}),
      E::seq({E::w("on"), E::w("the"), pos, E::opt(E::w("there")), E::w("is"), the, E::opt(col),
              obj}),
  });
  return g;
}

namespace {

void sample_expr(const GrammarExpr& e, const ConceptSchema& schema, Rng& rng, Derivation& out) {
  using K = GrammarExpr::Kind;
  switch (e.kind) {
    case K::Word:
      out.tokens.push_back(schema.word_id(e.word));
      break;
    case K::ConceptRef: {
      std::uniform_int_distribution<std::size_t> pick(0, schema.value_count(e.concept_index) - 1);
      const std::size_t v = pick(rng);
      out.tokens.push_back(schema.word_id(schema.concepts()[e.concept_index].values[v]));
      out.mentioned[e.concept_index] = static_cast<int>(v);
      break;
    }
    case K::Sequence:
      for (const auto& c : e.children) sample_expr(c, schema, rng, out);
      break;
    case K::Choice: {
      std::uniform_int_distribution<std::size_t> pick(0, e.children.size() - 1);
      sample_expr(e.children[pick(rng)], schema, rng, out);
      break;
    }
    case K::Optional: {
      std::bernoulli_distribution take(0.5);
      if (take(rng)) sample_expr(e.children.front(), schema, rng, out);
      break;
    }
  }
}

std::vector<Derivation> expand_expr(const GrammarExpr& e, const ConceptSchema& schema) {
  using K = GrammarExpr::Kind;
  const ConceptAssignment none(schema.concept_count(), kAbsent);
  switch (e.kind) {
    case K::Word:
      return {Derivation{{schema.word_id(e.word)}, none}};
    case K::ConceptRef: {
      std::vector<Derivation> out;
      const auto& values = schema.concepts()[e.concept_index].values;
      for (std::size_t v = 0; v < values.size(); ++v) {
        Derivation d{{schema.word_id(values[v])}, none};
        d.mentioned[e.concept_index] = static_cast<int>(v);
        out.push_back(std::move(d));
      }
      return out;
    }
    case K::Sequence: {
      std::vector<Derivation> acc = {Derivation{{}, none}};
      for (const auto& child : e.children) {
        const auto parts = expand_expr(child, schema);
        std::vector<Derivation> next;
        next.reserve(acc.size() * parts.size());
        for (const auto& prefix : acc) {
          for (const auto& part : parts) {
            Derivation d = prefix;
            d.tokens.insert(d.tokens.end(), part.tokens.begin(), part.tokens.end());
            for (std::size_t c = 0; c < d.mentioned.size(); ++c)
              if (part.mentioned[c] != kAbsent) d.mentioned[c] = part.mentioned[c];
            next.push_back(std::move(d));
          }
        }
        acc = std::move(next);
      }
      return acc;
    }
    case K::Choice: {
      std::vector<Derivation> out;
      for (const auto& child : e.children) {
        auto part = expand_expr(child, schema);
        out.insert(out.end(), std::make_move_iterator(part.begin()),
                   std::make_move_iterator(part.end()));
      }
      return out;
    }
    case K::Optional: {
      std::vector<Derivation> out = {Derivation{{}, none}};
      auto part = expand_expr(e.children.front(), schema);
      out.insert(out.end(), std::make_move_iterator(part.begin()),
                 std::make_move_iterator(part.end()));
      return out;
    }
  }
  return {};
}

}  // namespace

Derivation GrammarSpec::sample_clause(const ConceptSchema& schema, Rng& rng) const {
  Derivation d{{}, ConceptAssignment(schema.concept_count(), kAbsent)};
  sample_expr(clause_, schema, rng, d);
  return d;
}

std::vector<Derivation> GrammarSpec::expand_clause(const ConceptSchema& schema) const {
  return expand_expr(clause_, schema);
}

// ---------------------------------------------------------------------------
// Samples

std::vector<double> teacher_vector(const ConceptSchema& schema, const Scene& scene) {
  if (scene.objects.size() > kObjectSlots) throw std::invalid_argument("at most two objects");
  std::vector<double> teacher(schema.output_dim(), 0.0);
  for (std::size_t slot = 0; slot < scene.objects.size(); ++slot) {
    const auto& obj = scene.objects[slot];
    for (std::size_t c = 0; c < schema.concept_count(); ++c)
      if (obj[c] != kAbsent) teacher[schema.offset(slot, c, static_cast<std::size_t>(obj[c]))] = 1.0;
  }
  return teacher;
}

const char* to_string(SentenceSampling sampling) {
  return sampling == SentenceSampling::PerChoice ? "per-choice" : "uniform-sentence";
}

SentenceSampling parse_sentence_sampling(std::string_view name) {
  if (name == "per-choice") return SentenceSampling::PerChoice;
  if (name == "uniform-sentence") return SentenceSampling::UniformSentence;
  throw std::invalid_argument("unknown sentence sampling '" + std::string(name) + "'");
}

namespace {

// Distinct clause derivations per schema, built on first use.
const std::vector<Derivation>& clause_table(const ConceptSchema& schema) {
  static std::mutex mutex;
  static std::map<std::uint64_t, std::vector<Derivation>> tables;
  std::lock_guard lock(mutex);
  auto it = tables.find(schema.hash());
  if (it == tables.end()) {
    std::vector<Derivation> all = GrammarSpec::standard().expand_clause(schema);
    std::set<std::vector<TokenId>> seen;
    std::vector<Derivation> distinct;
    for (auto& d : all)
      if (seen.insert(d.tokens).second) distinct.push_back(std::move(d));
    it = tables.emplace(schema.hash(), std::move(distinct)).first;
  }
  return it->second;
}

}  // namespace

Sample generate_sample(const ConceptSchema& schema, Rng& rng, int n_objects_in_sentence,
                       SentenceSampling sampling) {
  if (n_objects_in_sentence != 1 && n_objects_in_sentence != 2)
    throw std::invalid_argument("a sentence describes one or two objects");
  static const GrammarSpec grammar = GrammarSpec::standard();
  const std::vector<Derivation>* table =
      sampling == SentenceSampling::UniformSentence ? &clause_table(schema) : nullptr;

  Sample s;
  s.tokens.push_back(schema.begin_id());
  for (auto& d : s.described) d.assign(schema.concept_count(), false);

  for (int obj = 0; obj < n_objects_in_sentence; ++obj) {
    if (obj > 0) s.tokens.push_back(schema.and_id());
    Derivation clause;
    if (table) {
      std::uniform_int_distribution<std::size_t> pick(0, table->size() - 1);
      clause = (*table)[pick(rng)];
    } else {
      clause = grammar.sample_clause(schema, rng);
    }
    s.tokens.insert(s.tokens.end(), clause.tokens.begin(), clause.tokens.end());

    ConceptAssignment object = clause.mentioned;
    for (std::size_t c = 0; c < schema.concept_count(); ++c) {
      s.described[obj][c] = object[c] != kAbsent;
      if (object[c] == kAbsent) {
        std::uniform_int_distribution<int> pick(0, static_cast<int>(schema.value_count(c)) - 1);
        object[c] = pick(rng);
      }
    }
    s.scene.objects.push_back(std::move(object));
  }
  s.tokens.push_back(schema.end_id());
  s.teacher = teacher_vector(schema, s.scene);
  return s;
}

std::vector<Sample> build_dataset(const ConceptSchema& schema, Rng& rng, std::size_t n_one,
                                  std::size_t n_two, SentenceSampling sampling) {
  std::vector<Sample> data;
  data.reserve(n_one + n_two);
  for (std::size_t i = 0; i < n_one; ++i) data.push_back(generate_sample(schema, rng, 1, sampling));
  for (std::size_t i = 0; i < n_two; ++i) data.push_back(generate_sample(schema, rng, 2, sampling));
  std::shuffle(data.begin(), data.end(), rng);
  return data;
}

std::vector<double> one_hot(const ConceptSchema& schema, TokenId token) {
  if (token >= schema.vocab_size()) throw std::out_of_range("token index out of vocabulary");
  std::vector<double> x(schema.vocab_size(), 0.0);
  x[token] = 1.0;
  return x;
}

std::set<std::vector<TokenId>> enumerate_one_object_sentences(const ConceptSchema& schema) {
  std::set<std::vector<TokenId>> out;
  for (auto& d : GrammarSpec::standard().expand_clause(schema)) out.insert(std::move(d.tokens));
  return out;
}

std::vector<TokenId> tokenize(const ConceptSchema& schema, std::string_view sentence) {
  std::vector<TokenId> out;
  std::istringstream in{std::string(sentence)};
  std::string word;
  while (in >> word) out.push_back(schema.word_id(word));
  return out;
}

std::string detokenize(const ConceptSchema& schema, std::span<const TokenId> tokens) {
  std::string out;
  for (TokenId t : tokens) {
    if (!out.empty()) out += ' ';
    out += schema.word(t);
  }
  return out;
}

double sentence_overlap(const std::vector<Sample>& train, const std::vector<Sample>& test) {
  if (test.empty()) return 0.0;
  std::set<std::vector<TokenId>> seen;
  for (const auto& s : train) seen.insert(s.tokens);
  std::size_t hits = 0;
  for (const auto& s : test) hits += seen.count(s.tokens);
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

}  // namespace csl
