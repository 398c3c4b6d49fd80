#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace csl {

using Rng = std::mt19937_64;
using TokenId = std::uint32_t;

/// Value index used for a concept that is not assigned.
inline constexpr int kAbsent = -1;
/// Number of object slots in the output layout.
inline constexpr std::size_t kObjectSlots = 2;

inline constexpr std::string_view kBeginWord = "BEGIN";
inline constexpr std::string_view kEndWord = "END";
inline constexpr std::string_view kAndWord = "and";

struct Concept {
  std::string name;
  std::vector<std::string> values;

  bool operator==(const Concept&) const = default;
};

/// Concept/value inventory. Fixes the vocabulary and the output layout
/// [slot 0: concept 0 values, concept 1 values, ...][slot 1: ...].
class ConceptSchema {
 public:
  /// Concept 0 must be the object category; the grammar relies on the
  /// order (category, color, position).
  explicit ConceptSchema(std::vector<Concept> concepts);

  static constexpr std::size_t kCategory = 0;
  static constexpr std::size_t kColor = 1;
  static constexpr std::size_t kPosition = 2;

  const std::vector<Concept>& concepts() const { return concepts_; }
  std::size_t concept_count() const { return concepts_.size(); }
  std::size_t value_count(std::size_t concept_index) const {
    return concepts_.at(concept_index).values.size();
  }
  /// Sum of K_c: the size of one object's half of the output vector.
  std::size_t half_dim() const { return half_dim_; }
  std::size_t output_dim() const { return 2 * half_dim_; }

  std::size_t offset(std::size_t slot, std::size_t concept_index) const {
    return slot * half_dim_ + concept_offsets_.at(concept_index);
  }
  std::size_t offset(std::size_t slot, std::size_t concept_index, std::size_t value) const {
    return offset(slot, concept_index) + value;
  }

  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  std::size_t vocab_size() const { return vocabulary_.size(); }
  const std::string& word(TokenId id) const { return vocabulary_.at(id); }
  std::optional<TokenId> find_word(std::string_view word) const;
  /// Throws std::invalid_argument for unknown words.
  TokenId word_id(std::string_view word) const;

  TokenId begin_id() const { return begin_id_; }
  TokenId end_id() const { return end_id_; }
  TokenId and_id() const { return and_id_; }

  /// True when the word names some concept value ("semantic" word).
  bool is_value_word(TokenId id) const;
  /// Concept values a word can denote, as (concept, value) pairs.
  std::vector<std::pair<std::size_t, std::size_t>> meanings(TokenId id) const;

  /// Label of an output component, e.g. "glass_obj1".
  std::string output_label(std::size_t component) const;

  /// FNV-1a over concept names, values and vocabulary.
  std::uint64_t hash() const;

  bool operator==(const ConceptSchema& other) const {
    return concepts_ == other.concepts_ && vocabulary_ == other.vocabulary_;
  }

 private:
  std::vector<Concept> concepts_;
  std::vector<std::size_t> concept_offsets_;
  std::size_t half_dim_ = 0;
  std::vector<std::string> vocabulary_;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> meanings_;
  TokenId begin_id_ = 0, end_id_ = 0, and_id_ = 0;
};

/// cup, bowl, orange, glass / red, orange, blue, green / left, middle, right.
ConceptSchema default_schema();
/// Default schema with n_objects categories: the four canonical names
/// followed by generated ones ("object5", "object6", ...).
ConceptSchema scaled_schema(std::size_t n_objects);

/// Per-concept value indices for one object; kAbsent when unassigned.
using ConceptAssignment = std::vector<int>;

struct Scene {
  std::vector<ConceptAssignment> objects;  // 1 or 2 entries
};

struct Sample {
  std::vector<TokenId> tokens;  // BEGIN ... END
  std::vector<double> teacher;  // D components in {0, 1}
  Scene scene;
  /// described[slot][concept]: the sentence mentions this concept.
  std::array<std::vector<bool>, kObjectSlots> described;

  std::size_t object_count() const { return scene.objects.size(); }
};

/// Grammar expression tree. ConceptRef expands to the schema's value words
/// for one concept, so the same grammar serves scaled vocabularies.
struct GrammarExpr {
  enum class Kind { Word, ConceptRef, Sequence, Choice, Optional };
  Kind kind = Kind::Word;
  std::string word;
  std::size_t concept_index = 0;
  std::vector<GrammarExpr> children;

  static GrammarExpr w(std::string word);
  static GrammarExpr ref(std::size_t concept_index);
  static GrammarExpr seq(std::vector<GrammarExpr> children);
  static GrammarExpr choice(std::vector<GrammarExpr> children);
  static GrammarExpr opt(GrammarExpr child);
};

/// One clause derivation: its words and the concept values it mentions.
struct Derivation {
  std::vector<TokenId> tokens;
  ConceptAssignment mentioned;
};

class GrammarSpec {
 public:
  /// The hand-made one-object clause grammar (THIS/THE/OBJ/COL/POS).
  static GrammarSpec standard();

  const GrammarExpr& clause() const { return clause_; }

  Derivation sample_clause(const ConceptSchema& schema, Rng& rng) const;
  /// All derivations of the one-object clause, in expansion order.
  std::vector<Derivation> expand_clause(const ConceptSchema& schema) const;

 private:
  GrammarExpr clause_;
};

/// How a clause is drawn: uniformly at every grammar choice (each `?` taken
/// with probability 1/2), or uniformly among the distinct clauses.
enum class SentenceSampling { PerChoice, UniformSentence };

const char* to_string(SentenceSampling sampling);
SentenceSampling parse_sentence_sampling(std::string_view name);

/// Samples a sentence with one or two clauses and completes the unmentioned
/// scene concepts with uniformly random values.
Sample generate_sample(const ConceptSchema& schema, Rng& rng, int n_objects_in_sentence,
                       SentenceSampling sampling = SentenceSampling::UniformSentence);

/// n_one one-object and n_two two-object samples, shuffled.
std::vector<Sample> build_dataset(const ConceptSchema& schema, Rng& rng, std::size_t n_one,
                                  std::size_t n_two, SentenceSampling sampling = SentenceSampling::UniformSentence);

/// Builds the D-dimensional teacher of a scene.
std::vector<double> teacher_vector(const ConceptSchema& schema, const Scene& scene);

/// V-dimensional one-hot vector. Throws std::out_of_range on a bad index.
std::vector<double> one_hot(const ConceptSchema& schema, TokenId token);

/// Distinct one-object sentences without the BEGIN/END framing.
std::set<std::vector<TokenId>> enumerate_one_object_sentences(const ConceptSchema& schema);

std::vector<TokenId> tokenize(const ConceptSchema& schema, std::string_view sentence);
std::string detokenize(const ConceptSchema& schema, std::span<const TokenId> tokens);

/// Fraction of test sentences whose token sequence also occurs in train.
double sentence_overlap(const std::vector<Sample>& train, const std::vector<Sample>& test);

}  // namespace csl
