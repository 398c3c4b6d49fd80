#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "csl/corpus.hpp"
#include "csl/trace.hpp"

namespace csl {

struct EsnConfig {
  std::size_t units = 1000;
  double spectral_radius = 1.1;
  double leak_rate = 0.05;
  double sparsity = 0.85;  // fraction of zero recurrent weights
  double regularization = 3.2e-4;
  double input_scaling = 1.0;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on out-of-range hyperparameters.
  void validate() const;
};

/// Final Learning updates the readout after END only; Continuous Learning
/// after every token, always against the full-scene teacher.
enum class LearningMode { Final, Continuous };

const char* to_string(LearningMode mode);

class EsnModel;

struct EsnTrainOptions {
  bool reset_between_sentences = true;
  /// Copy W_out into the log every N sentences (0 disables).
  std::size_t weight_snapshot_every = 0;
  /// Called after each sentence with the number of sentences consumed.
  std::function<void(std::size_t, const EsnModel&)> after_sentence;
};

struct EsnTrainingLog {
  /// Mean squared pre-update error per sentence (averaged over the
  /// sentence's updates in Continuous mode).
  std::vector<double> sentence_errors;
  std::vector<std::pair<std::size_t, Eigen::MatrixXd>> weight_snapshots;
  std::size_t updates = 0;
  double seconds = 0.0;
};

/// Largest eigenvalue magnitude of a square matrix.
double spectral_radius(const Eigen::MatrixXd& m);

/// Leaky-integrator echo state network with a FORCE-trained linear readout
/// on s = [1; r].
class EsnModel {
 public:
  using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  /// Random fixed input/recurrent weights, W_rec rescaled to the configured
  /// spectral radius; W_out = 0, P = I / regularization, r = 0.
  /// Throws std::runtime_error if the random recurrent matrix is degenerate.
  static EsnModel init(const EsnConfig& config, const ConceptSchema& schema);

  /// Rebuild a model from stored weights (checkpoint loading).
  static EsnModel from_parts(const EsnConfig& config, Eigen::MatrixXd w_in, SparseMatrix w_rec,
                             Eigen::MatrixXd w_out, Eigen::MatrixXd p);

  const EsnConfig& config() const { return config_; }
  std::size_t units() const { return config_.units; }
  std::size_t input_dim() const { return static_cast<std::size_t>(w_in_.cols()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(w_out_.rows()); }

  const Eigen::MatrixXd& w_in() const { return w_in_; }
  const SparseMatrix& w_rec() const { return w_rec_; }
  const Eigen::MatrixXd& w_out() const { return w_out_; }
  Eigen::MatrixXd& w_out() { return w_out_; }
  /// Full symmetric inverse-correlation estimate.
  Eigen::MatrixXd inverse_correlation() const;

  const Eigen::VectorXd& state() const { return r_; }
  void set_state(const Eigen::VectorXd& r);
  void reset_state() { r_.setZero(); }

  /// r <- (1 - a) r + a tanh(W_rec r + W_in x). Throws on dimension mismatch.
  const Eigen::VectorXd& step(const Eigen::VectorXd& x);
  /// Same update for a one-hot input (column lookup).
  const Eigen::VectorXd& step(TokenId token);

  Eigen::VectorXd readout() const { return readout(r_); }
  Eigen::VectorXd readout(const Eigen::VectorXd& state) const;

  /// One FORCE step on the current state. Returns e = readout - teacher,
  /// computed before the update.
  Eigen::VectorXd force_update(const Eigen::VectorXd& teacher);

  /// Runs a sentence from r = 0 without touching the model's own state.
  /// Throws std::out_of_range on an unknown token.
  SentenceRun run_sentence(std::span<const TokenId> tokens, bool capture) const;
  /// Reservoir state after the last token of a sentence, from r = 0.
  Eigen::VectorXd final_state(std::span<const TokenId> tokens) const;

  /// States after every token of each sentence (n x length, one column per
  /// token), from r = 0. Sentences are stepped together in blocks; the
  /// result is bitwise identical to run_sentence.
  std::vector<Eigen::MatrixXd> trajectories(std::span<const std::vector<TokenId>* const> sentences) const;
  /// Final states of a corpus, one column per sample.
  Eigen::MatrixXd final_states(const std::vector<Sample>& samples) const;

 private:
  EsnModel() = default;
  void advance(Eigen::VectorXd& r, const double* drive) const;
  void advance_token(Eigen::VectorXd& r, TokenId token) const;

  EsnConfig config_;
  Eigen::MatrixXd w_in_;
  SparseMatrix w_rec_;
  Eigen::MatrixXd w_out_;
  Eigen::MatrixXd p_;  // only the lower triangle is maintained
  Eigen::VectorXd r_;
};

EsnTrainingLog train_esn(EsnModel& model, const std::vector<Sample>& dataset, LearningMode mode,
                         const EsnTrainOptions& options = {});

/// Final outputs of a model over a list of samples.
std::vector<Eigen::VectorXd> final_outputs(const EsnModel& model, const std::vector<Sample>& samples);

}  // namespace csl
