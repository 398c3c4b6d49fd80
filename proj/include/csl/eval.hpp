#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "csl/corpus.hpp"

namespace csl {

/// Per-concept threshold is factor / K_c on softmax probabilities.
struct ThresholdPolicy {
  double factor = 1.3;
};

/// Decoded scene: per slot and concept, a value index or kAbsent.
struct SceneRepresentation {
  std::array<ConceptAssignment, kObjectSlots> slots;

  bool operator==(const SceneRepresentation&) const = default;
};

enum class Outcome { NotValid, ValidNotExact, Exact };

const char* to_string(Outcome outcome);

/// Softmax within each concept block; Absent if every probability is below
/// the threshold, otherwise the argmax (lowest index on ties).
SceneRepresentation decode(std::span<const double> output, const ConceptSchema& schema,
                           ThresholdPolicy policy = {});
SceneRepresentation decode(const Eigen::VectorXd& output, const ConceptSchema& schema,
                           ThresholdPolicy policy = {});

/// Compares a decoded scene with what the sentence itself describes.
Outcome judge(const SceneRepresentation& rep, const Sample& sample);

struct ErrorRates {
  double valid_error = 0.0;
  double exact_error = 0.0;
  std::size_t not_valid = 0;
  std::size_t valid_not_exact = 0;
  std::size_t exact = 0;

  std::size_t total() const { return not_valid + valid_not_exact + exact; }
};

ErrorRates tally(std::span<const Outcome> outcomes);

/// Throws std::invalid_argument when the outputs and samples differ in length.
ErrorRates error_rates(const std::vector<Eigen::VectorXd>& outputs, const std::vector<Sample>& samples,
                       const ConceptSchema& schema, ThresholdPolicy policy = {});

std::vector<Outcome> judge_all(const std::vector<Eigen::VectorXd>& outputs,
                               const std::vector<Sample>& samples, const ConceptSchema& schema,
                               ThresholdPolicy policy = {});

struct SweepRow {
  double factor = 0.0;
  ErrorRates rates;
};

std::vector<SweepRow> threshold_sweep(const std::vector<Eigen::VectorXd>& outputs,
                                      const std::vector<Sample>& samples, const ConceptSchema& schema,
                                      std::span<const double> factors);

/// Evenly spaced factors from `first` to `last` inclusive.
std::vector<double> factor_grid(double first, double last, double step);

/// Tab-separated report: factor, valid_error, exact_error, not_valid,
/// valid_not_exact, exact.
void write_report(std::ostream& out, std::span<const SweepRow> rows);

}  // namespace csl
