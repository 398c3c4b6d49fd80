#include "csl/esn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

namespace csl {

void EsnConfig::validate() const {
  if (units == 0) throw std::invalid_argument("ESN needs at least one unit");
  if (!(leak_rate > 0.0 && leak_rate <= 1.0)) throw std::invalid_argument("leak rate must be in (0, 1]");
  if (!(sparsity >= 0.0 && sparsity < 1.0)) throw std::invalid_argument("sparsity must be in [0, 1)");
  if (!(regularization > 0.0)) throw std::invalid_argument("regularization must be positive");
  if (!(spectral_radius > 0.0)) throw std::invalid_argument("spectral radius must be positive");
  if (!(input_scaling > 0.0)) throw std::invalid_argument("input scaling must be positive");
}

const char* to_string(LearningMode mode) {
  return mode == LearningMode::Final ? "final" : "continuous";
}

double spectral_radius(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("spectral radius of a non-square matrix");
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) throw std::runtime_error("eigenvalue computation failed");
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

EsnModel EsnModel::init(const EsnConfig& config, const ConceptSchema& schema) {
  config.validate();
  const auto n = static_cast<Eigen::Index>(config.units);
  const auto v = static_cast<Eigen::Index>(schema.vocab_size());
  const auto d = static_cast<Eigen::Index>(schema.output_dim());

  Rng rng(config.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  EsnModel m;
  m.config_ = config;
  m.w_in_.resize(n, v);
  for (Eigen::Index j = 0; j < v; ++j)
    for (Eigen::Index i = 0; i < n; ++i) m.w_in_(i, j) = config.input_scaling * unit(rng);

  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (coin(rng) >= config.sparsity) dense(i, j) = unit(rng);

  const double radius = spectral_radius(dense);
  if (!(radius > 1e-12))
    throw std::runtime_error("degenerate recurrent matrix: spectral radius is numerically zero");
  dense *= config.spectral_radius / radius;
  m.w_rec_ = dense.sparseView(0.0, 0.0);
  m.w_rec_.makeCompressed();

  m.w_out_ = Eigen::MatrixXd::Zero(d, n + 1);
  m.p_ = Eigen::MatrixXd::Identity(n + 1, n + 1) / config.regularization;
  m.r_ = Eigen::VectorXd::Zero(n);
  return m;
}

EsnModel EsnModel::from_parts(const EsnConfig& config, Eigen::MatrixXd w_in, SparseMatrix w_rec,
                              Eigen::MatrixXd w_out, Eigen::MatrixXd p) {
  config.validate();
  const auto n = static_cast<Eigen::Index>(config.units);
  if (w_in.rows() != n || w_rec.rows() != n || w_rec.cols() != n || w_out.cols() != n + 1 ||
      p.rows() != n + 1 || p.cols() != n + 1)
    throw std::invalid_argument("ESN weight shapes do not match the configuration");
  EsnModel m;
  m.config_ = config;
  m.w_in_ = std::move(w_in);
  m.w_rec_ = std::move(w_rec);
  m.w_rec_.makeCompressed();
  m.w_out_ = std::move(w_out);
  m.p_ = std::move(p);
  m.r_ = Eigen::VectorXd::Zero(n);
  return m;
}

Eigen::MatrixXd EsnModel::inverse_correlation() const {
  Eigen::MatrixXd full = p_.selfadjointView<Eigen::Lower>();
  return full;
}

void EsnModel::set_state(const Eigen::VectorXd& r) {
  if (r.size() != r_.size()) throw std::invalid_argument("state dimension mismatch");
  r_ = r;
}

namespace {

// out = W x. Products of a row are summed into four interleaved partial
// sums, combined as (s0 + s1) + (s2 + s3).
void spmv(const EsnModel::SparseMatrix& w, const double* x, double* out) {
  const double* val = w.valuePtr();
  const int* col = w.innerIndexPtr();
  const int* ptr = w.outerIndexPtr();
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    int p = ptr[i];
    const int end = ptr[i + 1];
    for (; p + 4 <= end; p += 4) {
      s0 += val[p] * x[col[p]];
      s1 += val[p + 1] * x[col[p + 1]];
      s2 += val[p + 2] * x[col[p + 2]];
      s3 += val[p + 3] * x[col[p + 3]];
    }
    if (p < end) s0 += val[p] * x[col[p]];
    if (p + 1 < end) s1 += val[p + 1] * x[col[p + 1]];
    if (p + 2 < end) s2 += val[p + 2] * x[col[p + 2]];
    out[i] = (s0 + s1) + (s2 + s3);
  }
}

constexpr std::size_t kLanes = 8;

// Same arithmetic as spmv for the first `active` of `width` states stored
// unit-major: x[j * width + k] is unit j of state k. `width` is a multiple of
// kLanes; lanes past `active` are computed and ignored.
void spmm(const EsnModel::SparseMatrix& w, const double* x, std::size_t width, std::size_t active, double* out) {
  const double* val = w.valuePtr();
  const int* col = w.innerIndexPtr();
  const int* ptr = w.outerIndexPtr();
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    const int begin = ptr[i];
    const int end = ptr[i + 1];
    double* o = out + static_cast<std::size_t>(i) * width;
    for (std::size_t kb = 0; kb < active; kb += kLanes) {
      using Lanes = Eigen::Array<double, kLanes, 1>;
      using LaneMap = Eigen::Map<const Lanes>;
      Lanes s0 = Lanes::Zero(), s1 = Lanes::Zero(), s2 = Lanes::Zero(), s3 = Lanes::Zero();
      auto row = [&](int q) { return LaneMap(x + static_cast<std::size_t>(col[q]) * width + kb); };
      int p = begin;
      for (; p + 4 <= end; p += 4) {
        s0 += val[p] * row(p);
        s1 += val[p + 1] * row(p + 1);
        s2 += val[p + 2] * row(p + 2);
        s3 += val[p + 3] * row(p + 3);
      }
      if (p < end) s0 += val[p] * row(p);
      if (p + 1 < end) s1 += val[p + 1] * row(p + 1);
      if (p + 2 < end) s2 += val[p + 2] * row(p + 2);
      Eigen::Map<Lanes>(o + kb) = (s0 + s1) + (s2 + s3);
    }
  }
}

constexpr std::size_t kBlock = 32;

}  // namespace

void EsnModel::advance(Eigen::VectorXd& r, const double* drive) const {
  const double a = config_.leak_rate;
  const double keep = 1.0 - a;
  thread_local std::vector<double> pre;
  pre.resize(static_cast<std::size_t>(r.size()));
  spmv(w_rec_, r.data(), pre.data());
  for (Eigen::Index i = 0; i < r.size(); ++i) r(i) = keep * r(i) + a * std::tanh(pre[i] + drive[i]);
}

void EsnModel::advance_token(Eigen::VectorXd& r, TokenId token) const {
  if (token >= static_cast<TokenId>(w_in_.cols())) throw std::out_of_range("token out of vocabulary");
  advance(r, w_in_.col(token).data());
}

const Eigen::VectorXd& EsnModel::step(const Eigen::VectorXd& x) {
  if (x.size() != w_in_.cols())
    throw std::invalid_argument("input dimension " + std::to_string(x.size()) + " != " +
                                std::to_string(w_in_.cols()));
  const Eigen::VectorXd drive = w_in_ * x;
  advance(r_, drive.data());
  return r_;
}

const Eigen::VectorXd& EsnModel::step(TokenId token) {
  advance_token(r_, token);
  return r_;
}

Eigen::VectorXd EsnModel::readout(const Eigen::VectorXd& state) const {
  return w_out_.col(0) + w_out_.rightCols(w_out_.cols() - 1) * state;
}

Eigen::VectorXd EsnModel::force_update(const Eigen::VectorXd& teacher) {
  if (teacher.size() != w_out_.rows()) throw std::invalid_argument("teacher dimension mismatch");
  const auto n1 = w_out_.cols();
  Eigen::VectorXd s(n1);
  s(0) = 1.0;
  s.tail(n1 - 1) = r_;

  const Eigen::VectorXd error = w_out_ * s - teacher;
  const Eigen::VectorXd ps = p_.selfadjointView<Eigen::Lower>() * s;
  const double denom = 1.0 + s.dot(ps);
  p_.selfadjointView<Eigen::Lower>().rankUpdate(ps, -1.0 / denom);
  // With the updated P, P s = ps / denom.
  w_out_.noalias() -= error * (ps / denom).transpose();
  return error;
}

SentenceRun EsnModel::run_sentence(std::span<const TokenId> tokens, bool capture) const {
  SentenceRun run;
  Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(config_.units));
  if (capture) run.trace.emplace();
  for (TokenId t : tokens) {
    advance_token(r, t);
    if (capture) {
      run.trace->tokens.push_back(t);
      run.trace->states.push_back(r);
      run.trace->outputs.push_back(readout(r));
    }
  }
  run.output = readout(r);
  return run;
}

Eigen::VectorXd EsnModel::final_state(std::span<const TokenId> tokens) const {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(config_.units));
  for (TokenId t : tokens) advance_token(r, t);
  return r;
}

std::vector<Eigen::MatrixXd> EsnModel::trajectories(std::span<const std::vector<TokenId>* const> sentences) const {
  const auto n = static_cast<std::size_t>(config_.units);
  const double a = config_.leak_rate;
  const double keep = 1.0 - a;
  for (const auto* s : sentences)
    for (TokenId t : *s)
      if (t >= static_cast<TokenId>(w_in_.cols())) throw std::out_of_range("token out of vocabulary");

  std::vector<Eigen::MatrixXd> out(sentences.size());
  std::vector<double> state, pre;
  std::vector<const double*> drives(kBlock);
  std::vector<double*> cols(kBlock);
  for (std::size_t begin = 0; begin < sentences.size(); begin += kBlock) {
    const std::size_t width = std::min(kBlock, sentences.size() - begin);
    // Longest sentences first so the still-running ones form a prefix.
    std::vector<std::size_t> order(width);
    std::iota(order.begin(), order.end(), begin);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      return sentences[x]->size() > sentences[y]->size();
    });
    for (std::size_t k = 0; k < width; ++k)
      out[order[k]].resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(sentences[order[k]]->size()));

    const std::size_t lanes = (width + kLanes - 1) / kLanes * kLanes;
    state.assign(n * lanes, 0.0);
    pre.assign(n * lanes, 0.0);
    const std::size_t steps = sentences[order[0]]->size();
    std::size_t active = width;
    for (std::size_t t = 0; t < steps; ++t) {
      while (active > 0 && sentences[order[active - 1]]->size() <= t) --active;
      spmm(w_rec_, state.data(), lanes, active, pre.data());
      for (std::size_t k = 0; k < active; ++k) {
        drives[k] = w_in_.col((*sentences[order[k]])[t]).data();
        cols[k] = out[order[k]].col(static_cast<Eigen::Index>(t)).data();
      }
      for (std::size_t j = 0; j < n; ++j) {
        double* r = state.data() + j * lanes;
        const double* p = pre.data() + j * lanes;
        for (std::size_t k = 0; k < active; ++k) {
          r[k] = keep * r[k] + a * std::tanh(p[k] + drives[k][j]);
          cols[k][j] = r[k];
        }
      }
    }
  }
  return out;
}

Eigen::MatrixXd EsnModel::final_states(const std::vector<Sample>& samples) const {
  std::vector<const std::vector<TokenId>*> sentences;
  sentences.reserve(samples.size());
  for (const auto& s : samples) sentences.push_back(&s.tokens);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(config_.units),
                                              static_cast<Eigen::Index>(samples.size()));
  const auto traj = trajectories(sentences);
  for (std::size_t i = 0; i < traj.size(); ++i)
    if (traj[i].cols() > 0) out.col(static_cast<Eigen::Index>(i)) = traj[i].rightCols(1);
  return out;
}

EsnTrainingLog train_esn(EsnModel& model, const std::vector<Sample>& dataset, LearningMode mode,
                         const EsnTrainOptions& options) {
  if (dataset.empty()) throw std::invalid_argument("cannot train on an empty dataset");
  const auto start = std::chrono::steady_clock::now();
  EsnTrainingLog log;
  log.sentence_errors.reserve(dataset.size());

  Eigen::VectorXd teacher(static_cast<Eigen::Index>(model.output_dim()));
  auto update = [&](const Eigen::VectorXd* state, double& err_sum, std::size_t& updates) {
    if (state) model.set_state(*state);
    err_sum += model.force_update(teacher).squaredNorm() / static_cast<double>(teacher.size());
    ++updates;
  };

  // States do not depend on the readout, so with resets they can be computed
  // a block of sentences ahead of the updates.
  std::vector<Eigen::MatrixXd> block;
  std::size_t block_begin = 0;
  for (std::size_t k = 0; k < dataset.size(); ++k) {
    const Sample& sample = dataset[k];
    if (sample.teacher.size() != model.output_dim())
      throw std::invalid_argument("sample teacher does not match the model output dimension");
    for (Eigen::Index i = 0; i < teacher.size(); ++i) teacher(i) = sample.teacher[i];

    double err_sum = 0.0;
    std::size_t updates = 0;
    if (options.reset_between_sentences) {
      if (k == block_begin + block.size() || block.empty()) {
        block_begin = k;
        std::vector<const std::vector<TokenId>*> chunk;
        for (std::size_t j = k; j < std::min(dataset.size(), k + 64); ++j) chunk.push_back(&dataset[j].tokens);
        block = model.trajectories(chunk);
      }
      const Eigen::MatrixXd& traj = block[k - block_begin];
      model.reset_state();
      if (mode == LearningMode::Continuous) {
        for (Eigen::Index t = 0; t < traj.cols(); ++t) {
          const Eigen::VectorXd r = traj.col(t);
          update(&r, err_sum, updates);
        }
      } else {
        if (traj.cols() > 0) model.set_state(traj.rightCols(1));
        update(nullptr, err_sum, updates);
      }
    } else {
      for (TokenId t : sample.tokens) {
        model.step(t);
        if (mode == LearningMode::Continuous) update(nullptr, err_sum, updates);
      }
      if (mode == LearningMode::Final) update(nullptr, err_sum, updates);
    }
    log.updates += updates;
    log.sentence_errors.push_back(updates ? err_sum / static_cast<double>(updates) : 0.0);

    if (options.weight_snapshot_every && (k + 1) % options.weight_snapshot_every == 0)
      log.weight_snapshots.emplace_back(k + 1, model.w_out());
    if (options.after_sentence) options.after_sentence(k + 1, model);
  }
  log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return log;
}

std::vector<Eigen::VectorXd> final_outputs(const EsnModel& model, const std::vector<Sample>& samples) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(samples.size());
  const Eigen::MatrixXd states = model.final_states(samples);
  for (Eigen::Index i = 0; i < states.cols(); ++i) out.push_back(model.readout(states.col(i)));
  return out;
}

}  // namespace csl
