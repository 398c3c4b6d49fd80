#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "csl/baseline.hpp"
#include "csl/corpus.hpp"
#include "csl/esn.hpp"
#include "csl/eval.hpp"
#include "csl/lstm.hpp"

namespace csl {

/// splitmix64 finaliser of (base, index, stream): independent-looking seeds
/// for every replica and purpose.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index, std::uint64_t stream);

enum SeedStream : std::uint64_t { kTrainStream = 0, kTestStream = 1, kModelStream = 2 };

struct DataSplit {
  std::vector<Sample> train;
  std::vector<Sample> test;
};

/// Train and test sets from two independent generators.
DataSplit make_split(const ConceptSchema& schema, std::uint64_t base_seed, std::uint64_t index,
                     std::size_t n_one = 300, std::size_t n_two = 700,
                     SentenceSampling sampling = SentenceSampling::UniformSentence);

struct RunResult {
  std::string model;
  ErrorRates rates;
  double seconds = 0.0;       // training only
  double init_seconds = 0.0;  // model construction
  std::vector<Eigen::VectorXd> outputs;
};

struct EsnRun {
  EsnModel model;
  EsnTrainingLog log;
  RunResult result;
};

struct LstmRun {
  LstmModel model;
  LstmTrainingLog log;
  RunResult result;
};

/// When `reservoir` is given its fixed weights are reused (its readout must
/// be untrained) instead of drawing a new one.
EsnRun run_esn(const ConceptSchema& schema, const DataSplit& data, const EsnConfig& config, LearningMode mode,
               const EsnModel* reservoir = nullptr, ThresholdPolicy policy = {});
LstmRun run_lstm(const ConceptSchema& schema, const DataSplit& data, const LstmConfig& config,
                 ThresholdPolicy policy = {});
RunResult run_baseline(const ConceptSchema& schema, const DataSplit& data, ThresholdPolicy policy = {});

/// Runs body(0..n-1) on up to `jobs` threads; each call must be independent.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& body);

// Vocabulary scaling -------------------------------------------------------

/// Model names: "esn", "lstm20", "lstm40", "lstm80", "baseline".
struct ScalingOptions {
  std::vector<std::string> models = {"esn", "lstm20", "lstm40", "lstm80", "baseline"};
  std::vector<std::size_t> object_counts = {4, 6, 8, 10, 12, 15, 18, 22, 26, 30};
  std::size_t seeds = 1;
  std::uint64_t base_seed = 0;
  EsnConfig esn;
  std::size_t jobs = 1;
  SentenceSampling sampling = SentenceSampling::UniformSentence;
};

struct ScalingCell {
  std::size_t n_objects = 0;
  std::string model;
  std::size_t replica = 0;
  ErrorRates rates;
  double seconds = 0.0;
};

std::vector<ScalingCell> run_scaling(const ScalingOptions& options,
                                     const std::function<void(const ScalingCell&)>& progress = {});

/// Mean (valid, exact) for one model and size over replicas.
std::pair<double, double> scaling_mean(std::span<const ScalingCell> cells, const std::string& model,
                                       std::size_t n_objects);

void write_scaling_table(std::ostream& out, std::span<const ScalingCell> cells);

// Hyperparameter grid -----------------------------------------------------

enum class HpAxis { LeakRate, SpectralRadius };
HpAxis parse_hp_axis(const std::string& name);
const char* to_string(HpAxis axis);

struct HpCell {
  HpAxis axis = HpAxis::LeakRate;
  double value = 0.0;
  ErrorRates rates;
  ErrorRates one_object_rates;
  ErrorRates two_object_rates;
  /// Largest |raw output| over the final test outputs.
  double max_abs_output = 0.0;
  EsnRun run;
};

/// `reservoir`, when given, supplies the fixed weights (see run_esn).
HpCell run_hp_cell(const ConceptSchema& schema, const DataSplit& data, const EsnConfig& base, HpAxis axis,
                   double value, const EsnModel* reservoir = nullptr);

struct Histogram {
  double lo = 0.0, hi = 0.0;
  std::vector<std::size_t> counts;
};

/// Equal-width bins over [min, max] of the values.
Histogram histogram(std::span<const double> values, std::size_t bins);

/// Component `index` of each output vector.
std::vector<double> output_component(const std::vector<Eigen::VectorXd>& outputs, std::size_t index);

/// Rates restricted to samples with the given object count.
ErrorRates error_rates_for(const std::vector<Eigen::VectorXd>& outputs, const std::vector<Sample>& samples,
                           const ConceptSchema& schema, std::size_t object_count, ThresholdPolicy policy = {});

// Learning stages ------------------------------------------------------------

/// (training sentences consumed, validation valid error)
using LearningCurve = std::vector<std::pair<std::size_t, double>>;

/// Valid error of the readout snapshots on a validation set, from the
/// series taken on the validation final states.
LearningCurve validation_curve(EsnModel& model, const std::vector<Sample>& train, LearningMode mode,
                               const std::vector<Sample>& validation, const ConceptSchema& schema,
                               std::size_t every);

/// First point t at least `window` sentences in, such that every error in
/// [t - window, t] is >= plateau and some error in (t, t + window] is both
/// <= err(t) - drop and below the plateau level.
std::optional<std::size_t> find_breakpoint(const LearningCurve& curve, double plateau = 0.6, double drop = 0.3,
                                           std::size_t window = 50);

}  // namespace csl
