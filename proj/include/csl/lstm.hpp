#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csl/corpus.hpp"
#include "csl/trace.hpp"

namespace csl {

struct AdamParams {
  double step_size = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct LstmConfig {
  std::size_t units = 20;
  std::size_t epochs = 35;
  std::size_t batch_size = 2;
  double dropout = 0.0;  // applied to h before the readout, training only
  AdamParams adam;
  std::uint64_t seed = 0;

  /// 20 units, 35 epochs, no dropout.
  static LstmConfig small();
  /// 40 units, 50 epochs, dropout 0.2.
  static LstmConfig medium();
  /// 80 units, 15 epochs, no dropout.
  static LstmConfig large();

  void validate() const;
};

/// Hard sigmoid: clip(0.2 z + 0.5, 0, 1).
inline double hard_sigmoid(double z) {
  const double y = 0.2 * z + 0.5;
  return y < 0.0 ? 0.0 : (y > 1.0 ? 1.0 : y);
}

/// LSTM with hard-sigmoid gates and a linear readout y = W_y h.
///
/// Every trainable value lives in one flat vector. The gate matrices are
/// stacked row-wise in the order forget, input, output, candidate:
///   W: [4n x V], U: [4n x n], b: [4n], W_y: [D x n].
class LstmModel {
 public:
  using MatrixMap = Eigen::Map<Eigen::MatrixXd>;
  using ConstMatrixMap = Eigen::Map<const Eigen::MatrixXd>;
  using VectorMap = Eigen::Map<Eigen::VectorXd>;
  using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

  /// Fan-scaled uniform input and readout weights, a stacked recurrent
  /// matrix with orthonormal columns, forget bias 1, other biases 0.
  static LstmModel init(const LstmConfig& config, const ConceptSchema& schema);
  /// All parameters zero (test hook).
  static LstmModel zeros(const LstmConfig& config, const ConceptSchema& schema);
  static LstmModel from_parameters(const LstmConfig& config, std::size_t vocab_size,
                                   std::size_t output_dim, Eigen::VectorXd parameters);

  static std::size_t parameter_count(std::size_t units, std::size_t vocab, std::size_t output_dim) {
    return 4 * (vocab + units + 1) * units + output_dim * units;
  }

  const LstmConfig& config() const { return config_; }
  std::size_t units() const { return config_.units; }
  std::size_t input_dim() const { return vocab_; }
  std::size_t output_dim() const { return out_dim_; }
  std::size_t parameter_count() const { return static_cast<std::size_t>(theta_.size()); }

  const Eigen::VectorXd& parameters() const { return theta_; }
  Eigen::VectorXd& parameters() { return theta_; }

  ConstMatrixMap w() const;
  ConstMatrixMap u() const;
  ConstVectorMap b() const;
  ConstMatrixMap w_y() const;
  MatrixMap w();
  MatrixMap u();
  VectorMap b();
  MatrixMap w_y();

  const Eigen::VectorXd& hidden() const { return h_; }
  const Eigen::VectorXd& cell() const { return c_; }
  void reset_state();

  /// One recurrent step on a V-dimensional input; returns the output y.
  /// Throws std::invalid_argument on dimension mismatch.
  Eigen::VectorXd step(const Eigen::VectorXd& x);
  Eigen::VectorXd step(TokenId token);

  /// Runs a sentence from h = c = 0 without touching the model's state.
  /// Throws std::out_of_range on an unknown token.
  SentenceRun run_sentence(std::span<const TokenId> tokens, bool capture) const;

  /// Squared-error loss (mean over outputs) of the END output against the
  /// teacher. When `gradient` is given it receives d loss / d parameters,
  /// by backpropagation through the whole sentence. `dropout_mask`, when
  /// given, multiplies h before the readout.
  double loss_and_gradient(const Sample& sample, Eigen::VectorXd* gradient,
                           const Eigen::VectorXd* dropout_mask = nullptr) const;

  /// Adam step with the given gradient.
  void apply_gradient(const Eigen::VectorXd& gradient);
  std::uint64_t optimizer_steps() const { return adam_t_; }
  const Eigen::VectorXd& first_moment() const { return adam_m_; }
  const Eigen::VectorXd& second_moment() const { return adam_v_; }
  /// Restores Adam state (checkpoint loading). Throws on size mismatch.
  void set_optimizer_state(Eigen::VectorXd m, Eigen::VectorXd v, std::uint64_t steps);

 private:
  LstmModel(const LstmConfig& config, std::size_t vocab, std::size_t out_dim);
  std::size_t off_u() const { return 4 * config_.units * vocab_; }
  std::size_t off_b() const { return off_u() + 4 * config_.units * config_.units; }
  std::size_t off_wy() const { return off_b() + 4 * config_.units; }
  void forward_step(TokenId token, const Eigen::VectorXd& h_prev, const Eigen::VectorXd& c_prev,
                    Eigen::VectorXd& z, Eigen::VectorXd& h, Eigen::VectorXd& c) const;

  LstmConfig config_;
  std::size_t vocab_ = 0;
  std::size_t out_dim_ = 0;
  Eigen::VectorXd theta_;
  Eigen::VectorXd adam_m_;
  Eigen::VectorXd adam_v_;
  std::uint64_t adam_t_ = 0;
  Eigen::VectorXd h_;
  Eigen::VectorXd c_;
};

struct LstmEpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> valid_error;
  std::optional<double> exact_error;
};

struct LstmTrainingLog {
  std::vector<LstmEpochLog> epochs;
  double seconds = 0.0;
};

/// Mini-batch training with Adam; batch gradients are averaged in sample
/// order. Samples are reshuffled every epoch from the config seed.
LstmTrainingLog train_lstm(LstmModel& model, const std::vector<Sample>& dataset,
                           const LstmConfig& config, const ConceptSchema* schema = nullptr,
                           const std::vector<Sample>* validation = nullptr);

std::vector<Eigen::VectorXd> final_outputs(const LstmModel& model, const std::vector<Sample>& samples);

}  // namespace csl
