#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "csl/corpus.hpp"
#include "csl/esn.hpp"
#include "csl/lstm.hpp"
#include "csl/trace.hpp"

namespace csl {

enum class TraceSignal { State, Cell };

struct WordVariation {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;
};

/// Summed absolute per-step change of a unit set, grouped by the word read
/// at that step. Semantic words are the schema value words; function words
/// are the rest except BEGIN, END and "and".
struct VariationStats {
  std::vector<WordVariation> per_word;  // indexed by TokenId
  WordVariation semantic;
  WordVariation function;

  /// Word with the largest mean variation among words seen at least once.
  TokenId strongest_word() const;
};

/// The step before the first token is taken to be the zero initial state.
VariationStats unit_variation(const std::vector<SentenceTrace>& traces, std::span<const std::size_t> units,
                              const ConceptSchema& schema, TraceSignal signal = TraceSignal::State);

std::vector<SentenceTrace> capture_traces(const EsnModel& model, const std::vector<Sample>& corpus);
std::vector<SentenceTrace> capture_traces(const LstmModel& model, const std::vector<Sample>& corpus);

/// All unit indices 0..n-1.
std::vector<std::size_t> all_units(std::size_t n);

/// Units with the largest |W_out[output, 1 + unit]|, strongest first (bias
/// excluded). Throws std::invalid_argument when k exceeds the unit count.
std::vector<std::size_t> top_connected_units(const Eigen::MatrixXd& w_out, std::size_t output_index,
                                             std::size_t k);
std::vector<std::size_t> top_connected_units(const EsnModel& model, std::size_t output_index, std::size_t k);

/// Units appearing in at least `min_outputs` of the per-output top-k lists,
/// as (unit, number of lists), most frequent first.
std::vector<std::pair<std::size_t, std::size_t>> multipurpose_units(const Eigen::MatrixXd& w_out,
                                                                    std::size_t top_k = 20,
                                                                    std::size_t min_outputs = 5);

struct WingletCurve {
  /// Per output: its n+1 weights sorted ascending (signed).
  std::vector<Eigen::VectorXd> sorted_weights;
  /// Per output: fraction of strictly positive weights.
  std::vector<double> positive_fraction;
  /// Whole matrix: share of total |weight| held by the top 8% of weights.
  double top8_mass = 0.0;
  /// Whole matrix: smallest weight fraction holding at least 28% of the mass.
  double fraction_for_28_mass = 0.0;
};

WingletCurve winglet_curve(const Eigen::MatrixXd& w_out);

/// Share of total absolute mass held by the largest `fraction` of |values|.
double top_fraction_mass(std::span<const double> values, double fraction);
/// Smallest fraction of entries (largest first) holding at least `mass` of
/// the total absolute mass.
double fraction_for_mass(std::span<const double> values, double mass);

struct SwaProbe {
  SentenceTrace original;
  SentenceTrace and_prefixed;  // "and" inserted right after BEGIN
};

SwaProbe swa_probe(const EsnModel& model, std::span<const TokenId> sentence, const ConceptSchema& schema);
SwaProbe swa_probe(const LstmModel& model, std::span<const TokenId> sentence, const ConceptSchema& schema);

/// Sentence with "and" inserted after the leading BEGIN.
std::vector<TokenId> and_prefixed(std::span<const TokenId> sentence, const ConceptSchema& schema);

}  // namespace csl
