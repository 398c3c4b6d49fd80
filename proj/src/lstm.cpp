#include "csl/lstm.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include <Eigen/QR>

#include "csl/eval.hpp"

namespace csl {

LstmConfig LstmConfig::small() { return LstmConfig{}; }

LstmConfig LstmConfig::medium() {
  LstmConfig c;
  c.units = 40;
  c.epochs = 50;
  c.dropout = 0.2;
  return c;
}

LstmConfig LstmConfig::large() {
  LstmConfig c;
  c.units = 80;
  c.epochs = 15;
  return c;
}

void LstmConfig::validate() const {
  if (units == 0) throw std::invalid_argument("LSTM needs at least one unit");
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("dropout must be in [0, 1)");
  if (!(adam.step_size > 0.0)) throw std::invalid_argument("step size must be positive");
}

LstmModel::LstmModel(const LstmConfig& config, std::size_t vocab, std::size_t out_dim)
    : config_(config), vocab_(vocab), out_dim_(out_dim) {
  config_.validate();
  const auto count = static_cast<Eigen::Index>(parameter_count(config.units, vocab, out_dim));
  theta_ = Eigen::VectorXd::Zero(count);
  adam_m_ = Eigen::VectorXd::Zero(count);
  adam_v_ = Eigen::VectorXd::Zero(count);
  h_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(config.units));
  c_ = h_;
}

LstmModel LstmModel::zeros(const LstmConfig& config, const ConceptSchema& schema) {
  return LstmModel(config, schema.vocab_size(), schema.output_dim());
}

LstmModel LstmModel::init(const LstmConfig& config, const ConceptSchema& schema) {
  LstmModel m(config, schema.vocab_size(), schema.output_dim());
  const auto n = static_cast<Eigen::Index>(config.units);
  const auto v = static_cast<Eigen::Index>(schema.vocab_size());
  const auto d = static_cast<Eigen::Index>(schema.output_dim());
  Rng rng(config.seed);

  const double in_limit = std::sqrt(6.0 / static_cast<double>(v + 4 * n));
  std::uniform_real_distribution<double> in_dist(-in_limit, in_limit);
  auto w = m.w();
  for (Eigen::Index j = 0; j < w.cols(); ++j)
    for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = in_dist(rng);

  // Orthonormal columns for the stacked [4n x n] recurrent matrix.
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd a(4 * n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < 4 * n; ++i) a(i, j) = gauss(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(4 * n, n);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  m.u() = q;

  m.b().segment(0, n).setOnes();

  const double out_limit = std::sqrt(6.0 / static_cast<double>(n + d));
  std::uniform_real_distribution<double> out_dist(-out_limit, out_limit);
  auto wy = m.w_y();
  for (Eigen::Index j = 0; j < wy.cols(); ++j)
    for (Eigen::Index i = 0; i < wy.rows(); ++i) wy(i, j) = out_dist(rng);
  return m;
}

LstmModel LstmModel::from_parameters(const LstmConfig& config, std::size_t vocab_size,
                                     std::size_t output_dim, Eigen::VectorXd parameters) {
  LstmModel m(config, vocab_size, output_dim);
  if (parameters.size() != m.theta_.size())
    throw std::invalid_argument("LSTM parameter vector has the wrong size");
  m.theta_ = std::move(parameters);
  return m;
}

LstmModel::ConstMatrixMap LstmModel::w() const {
  return {theta_.data(), static_cast<Eigen::Index>(4 * config_.units), static_cast<Eigen::Index>(vocab_)};
}
LstmModel::ConstMatrixMap LstmModel::u() const {
  const auto n = static_cast<Eigen::Index>(config_.units);
  return {theta_.data() + off_u(), 4 * n, n};
}
LstmModel::ConstVectorMap LstmModel::b() const {
  return {theta_.data() + off_b(), static_cast<Eigen::Index>(4 * config_.units)};
}
LstmModel::ConstMatrixMap LstmModel::w_y() const {
  return {theta_.data() + off_wy(), static_cast<Eigen::Index>(out_dim_),
          static_cast<Eigen::Index>(config_.units)};
}
LstmModel::MatrixMap LstmModel::w() {
  return {theta_.data(), static_cast<Eigen::Index>(4 * config_.units), static_cast<Eigen::Index>(vocab_)};
}
LstmModel::MatrixMap LstmModel::u() {
  const auto n = static_cast<Eigen::Index>(config_.units);
  return {theta_.data() + off_u(), 4 * n, n};
}
LstmModel::VectorMap LstmModel::b() {
  return {theta_.data() + off_b(), static_cast<Eigen::Index>(4 * config_.units)};
}
LstmModel::MatrixMap LstmModel::w_y() {
  return {theta_.data() + off_wy(), static_cast<Eigen::Index>(out_dim_),
          static_cast<Eigen::Index>(config_.units)};
}

void LstmModel::reset_state() {
  h_.setZero();
  c_.setZero();
}

void LstmModel::forward_step(TokenId token, const Eigen::VectorXd& h_prev,
                             const Eigen::VectorXd& c_prev, Eigen::VectorXd& z, Eigen::VectorXd& h,
                             Eigen::VectorXd& c) const {
  const auto n = static_cast<Eigen::Index>(config_.units);
  z = w().col(token) + u() * h_prev + b();
  c.resize(n);
  h.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double f = hard_sigmoid(z(k));
    const double i = hard_sigmoid(z(n + k));
    const double o = hard_sigmoid(z(2 * n + k));
    const double g = std::tanh(z(3 * n + k));
    c(k) = f * c_prev(k) + i * g;
    h(k) = o * std::tanh(c(k));
  }
}

Eigen::VectorXd LstmModel::step(const Eigen::VectorXd& x) {
  if (x.size() != static_cast<Eigen::Index>(vocab_))
    throw std::invalid_argument("LSTM input dimension mismatch");
  const auto n = static_cast<Eigen::Index>(config_.units);
  const Eigen::VectorXd z = w() * x + u() * h_ + b();
  for (Eigen::Index k = 0; k < n; ++k) {
    const double f = hard_sigmoid(z(k));
    const double i = hard_sigmoid(z(n + k));
    const double o = hard_sigmoid(z(2 * n + k));
    const double g = std::tanh(z(3 * n + k));
    c_(k) = f * c_(k) + i * g;
    h_(k) = o * std::tanh(c_(k));
  }
  return w_y() * h_;
}

Eigen::VectorXd LstmModel::step(TokenId token) {
  if (token >= vocab_) throw std::out_of_range("token out of vocabulary");
  Eigen::VectorXd z, h, c;
  forward_step(token, h_, c_, z, h, c);
  h_ = std::move(h);
  c_ = std::move(c);
  return w_y() * h_;
}

SentenceRun LstmModel::run_sentence(std::span<const TokenId> tokens, bool capture) const {
  SentenceRun run;
  const auto n = static_cast<Eigen::Index>(config_.units);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(n), c = Eigen::VectorXd::Zero(n), z, h_next, c_next;
  if (capture) run.trace.emplace();
  for (TokenId t : tokens) {
    if (t >= vocab_) throw std::out_of_range("token out of vocabulary");
    forward_step(t, h, c, z, h_next, c_next);
    h.swap(h_next);
    c.swap(c_next);
    if (capture) {
      run.trace->tokens.push_back(t);
      run.trace->states.push_back(h);
      run.trace->cells.push_back(c);
      run.trace->outputs.push_back(w_y() * h);
    }
  }
  run.output = w_y() * h;
  return run;
}

double LstmModel::loss_and_gradient(const Sample& sample, Eigen::VectorXd* gradient,
                                    const Eigen::VectorXd* dropout_mask) const {
  const auto n = static_cast<Eigen::Index>(config_.units);
  const auto d = static_cast<Eigen::Index>(out_dim_);
  const std::size_t steps = sample.tokens.size();
  if (steps == 0) throw std::invalid_argument("empty sentence");
  if (sample.teacher.size() != out_dim_) throw std::invalid_argument("teacher dimension mismatch");

  std::vector<Eigen::VectorXd> zs(steps), hs(steps + 1), cs(steps + 1);
  hs[0] = Eigen::VectorXd::Zero(n);
  cs[0] = Eigen::VectorXd::Zero(n);
  for (std::size_t t = 0; t < steps; ++t) {
    if (sample.tokens[t] >= vocab_) throw std::out_of_range("token out of vocabulary");
    forward_step(sample.tokens[t], hs[t], cs[t], zs[t], hs[t + 1], cs[t + 1]);
  }

  Eigen::VectorXd h_read = hs[steps];
  if (dropout_mask) h_read = h_read.cwiseProduct(*dropout_mask);
  const Eigen::VectorXd y = w_y() * h_read;
  const Eigen::VectorXd err = y - Eigen::Map<const Eigen::VectorXd>(sample.teacher.data(), d);
  const double loss = err.squaredNorm() / static_cast<double>(d);
  if (!gradient) return loss;

  gradient->setZero(theta_.size());
  MatrixMap g_w(gradient->data(), 4 * n, static_cast<Eigen::Index>(vocab_));
  MatrixMap g_u(gradient->data() + off_u(), 4 * n, n);
  VectorMap g_b(gradient->data() + off_b(), 4 * n);
  MatrixMap g_wy(gradient->data() + off_wy(), d, n);

  const Eigen::VectorXd dy = (2.0 / static_cast<double>(d)) * err;
  g_wy.noalias() = dy * h_read.transpose();
  Eigen::VectorXd dh = w_y().transpose() * dy;
  if (dropout_mask) dh = dh.cwiseProduct(*dropout_mask);
  Eigen::VectorXd dc = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd dz(4 * n);

  auto hs_grad = [](double z) { return (z > -2.5 && z < 2.5) ? 0.2 : 0.0; };
  for (std::size_t t = steps; t-- > 0;) {
    const Eigen::VectorXd& z = zs[t];
    for (Eigen::Index k = 0; k < n; ++k) {
      const double f = hard_sigmoid(z(k));
      const double i = hard_sigmoid(z(n + k));
      const double o = hard_sigmoid(z(2 * n + k));
      const double g = std::tanh(z(3 * n + k));
      const double tc = std::tanh(cs[t + 1](k));
      const double dck = dc(k) + dh(k) * o * (1.0 - tc * tc);
      dz(k) = dck * cs[t](k) * hs_grad(z(k));
      dz(n + k) = dck * g * hs_grad(z(n + k));
      dz(2 * n + k) = dh(k) * tc * hs_grad(z(2 * n + k));
      dz(3 * n + k) = dck * i * (1.0 - g * g);
      dc(k) = dck * f;
    }
    g_w.col(sample.tokens[t]) += dz;
    g_u.noalias() += dz * hs[t].transpose();
    g_b += dz;
    dh.noalias() = u().transpose() * dz;
  }
  return loss;
}

void LstmModel::set_optimizer_state(Eigen::VectorXd m, Eigen::VectorXd v, std::uint64_t steps) {
  if (m.size() != theta_.size() || v.size() != theta_.size())
    throw std::invalid_argument("optimizer state does not match the parameter count");
  adam_m_ = std::move(m);
  adam_v_ = std::move(v);
  adam_t_ = steps;
}

void LstmModel::apply_gradient(const Eigen::VectorXd& gradient) {
  const AdamParams& a = config_.adam;
  ++adam_t_;
  adam_m_ = a.beta1 * adam_m_ + (1.0 - a.beta1) * gradient;
  adam_v_ = a.beta2 * adam_v_ + (1.0 - a.beta2) * gradient.cwiseAbs2();
  const double t = static_cast<double>(adam_t_);
  const double lr_t = a.step_size * std::sqrt(1.0 - std::pow(a.beta2, t)) / (1.0 - std::pow(a.beta1, t));
  theta_.array() -= lr_t * adam_m_.array() / (adam_v_.array().sqrt() + a.epsilon);
}

LstmTrainingLog train_lstm(LstmModel& model, const std::vector<Sample>& dataset,
                           const LstmConfig& config, const ConceptSchema* schema,
                           const std::vector<Sample>* validation) {
  if (dataset.empty()) throw std::invalid_argument("cannot train on an empty dataset");
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  LstmTrainingLog log;

  // Separate stream from the weight initialisation.
  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::bernoulli_distribution keep(1.0 - config.dropout);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  const auto n = static_cast<Eigen::Index>(model.units());
  Eigen::VectorXd batch_grad(model.parameters().size());
  Eigen::VectorXd sample_grad(model.parameters().size());
  Eigen::VectorXd mask(n);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start_idx = 0; start_idx < order.size(); start_idx += config.batch_size) {
      const std::size_t end_idx = std::min(order.size(), start_idx + config.batch_size);
      batch_grad.setZero();
      for (std::size_t k = start_idx; k < end_idx; ++k) {
        const Eigen::VectorXd* mask_ptr = nullptr;
        if (config.dropout > 0.0) {
          for (Eigen::Index u = 0; u < n; ++u) mask(u) = keep(rng) ? 1.0 / (1.0 - config.dropout) : 0.0;
          mask_ptr = &mask;
        }
        loss_sum += model.loss_and_gradient(dataset[order[k]], &sample_grad, mask_ptr);
        batch_grad += sample_grad;
      }
      batch_grad /= static_cast<double>(end_idx - start_idx);
      model.apply_gradient(batch_grad);
    }

    LstmEpochLog entry;
    entry.epoch = epoch + 1;
    entry.train_loss = loss_sum / static_cast<double>(dataset.size());
    if (schema && validation && !validation->empty()) {
      const auto rates = error_rates(final_outputs(model, *validation), *validation, *schema);
      entry.valid_error = rates.valid_error;
      entry.exact_error = rates.exact_error;
    }
    log.epochs.push_back(entry);
  }
  log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return log;
}

std::vector<Eigen::VectorXd> final_outputs(const LstmModel& model, const std::vector<Sample>& samples) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(model.run_sentence(s.tokens, false).output);
  return out;
}

}  // namespace csl
