#include "csl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "csl/statedump.hpp"

namespace csl {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

RunResult score(std::string name, std::vector<Eigen::VectorXd> outputs, const std::vector<Sample>& test,
                const ConceptSchema& schema, ThresholdPolicy policy) {
  RunResult r;
  r.model = std::move(name);
  r.rates = error_rates(outputs, test, schema, policy);
  r.outputs = std::move(outputs);
  return r;
}

/// Fixed weights of `reservoir` adapted to `config`: W_rec and W_in are
/// rescaled when the spectral radius or input scaling differ.
EsnModel adapt_reservoir(const EsnModel& reservoir, const EsnConfig& config) {
  const EsnConfig& rc = reservoir.config();
  if (rc.units != config.units || rc.sparsity != config.sparsity || rc.seed != config.seed)
    throw std::invalid_argument("reservoir does not match the requested configuration");
  Eigen::MatrixXd w_in = reservoir.w_in() * (config.input_scaling / rc.input_scaling);
  EsnModel::SparseMatrix w_rec = reservoir.w_rec() * (config.spectral_radius / rc.spectral_radius);
  const auto n1 = static_cast<Eigen::Index>(config.units + 1);
  return EsnModel::from_parts(config, std::move(w_in), std::move(w_rec),
                              Eigen::MatrixXd::Zero(reservoir.w_out().rows(), n1),
                              Eigen::MatrixXd::Identity(n1, n1) / config.regularization);
}

LstmConfig preset(const std::string& name) {
  if (name == "lstm20") return LstmConfig::small();
  if (name == "lstm40") return LstmConfig::medium();
  if (name == "lstm80") return LstmConfig::large();
  throw std::invalid_argument("unknown LSTM preset '" + name + "'");
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index, std::uint64_t stream) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ index) ^ stream);
}

DataSplit make_split(const ConceptSchema& schema, std::uint64_t base_seed, std::uint64_t index,
                     std::size_t n_one, std::size_t n_two, SentenceSampling sampling) {
  Rng train_rng(derive_seed(base_seed, index, kTrainStream));
  Rng test_rng(derive_seed(base_seed, index, kTestStream));
  DataSplit d;
  d.train = build_dataset(schema, train_rng, n_one, n_two, sampling);
  d.test = build_dataset(schema, test_rng, n_one, n_two, sampling);
  return d;
}

EsnRun run_esn(const ConceptSchema& schema, const DataSplit& data, const EsnConfig& config, LearningMode mode,
               const EsnModel* reservoir, ThresholdPolicy policy) {
  const auto start = Clock::now();
  EsnModel model = reservoir ? adapt_reservoir(*reservoir, config) : EsnModel::init(config, schema);
  const double init_seconds = seconds_since(start);
  EsnTrainingLog log = train_esn(model, data.train, mode);
  RunResult result = score(mode == LearningMode::Final ? "esn-fl" : "esn-cl", final_outputs(model, data.test),
                           data.test, schema, policy);
  result.seconds = log.seconds;
  result.init_seconds = init_seconds;
  return {std::move(model), std::move(log), std::move(result)};
}

LstmRun run_lstm(const ConceptSchema& schema, const DataSplit& data, const LstmConfig& config,
                 ThresholdPolicy policy) {
  const auto start = Clock::now();
  LstmModel model = LstmModel::init(config, schema);
  const double init_seconds = seconds_since(start);
  LstmTrainingLog log = train_lstm(model, data.train, config);
  RunResult result = score("lstm" + std::to_string(config.units), final_outputs(model, data.test), data.test,
                           schema, policy);
  result.seconds = log.seconds;
  result.init_seconds = init_seconds;
  return {std::move(model), std::move(log), std::move(result)};
}

RunResult run_baseline(const ConceptSchema& schema, const DataSplit& data, ThresholdPolicy policy) {
  const auto start = Clock::now();
  KeywordBaseline model(schema);
  model.train(data.train);
  const double seconds = seconds_since(start);
  RunResult result = score("baseline", final_outputs(model, data.test), data.test, schema, policy);
  result.seconds = seconds;
  return result;
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& body) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < jobs; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<ScalingCell> run_scaling(const ScalingOptions& options,
                                     const std::function<void(const ScalingCell&)>& progress) {
  struct Task {
    std::size_t n_objects, replica;
    std::string model;
  };
  std::vector<Task> tasks;
  for (std::size_t n : options.object_counts)
    for (std::size_t r = 0; r < options.seeds; ++r)
      for (const auto& m : options.models) tasks.push_back({n, r, m});

  std::vector<ScalingCell> cells(tasks.size());
  std::mutex progress_mutex;
  parallel_for(tasks.size(), options.jobs, [&](std::size_t k) {
    const Task& t = tasks[k];
    const ConceptSchema schema = scaled_schema(t.n_objects);
    // The same data for every model at a given size and replica.
    const DataSplit data = make_split(schema, options.base_seed, t.n_objects * 1000 + t.replica, 300, 700, options.sampling);
    const std::uint64_t model_seed = derive_seed(options.base_seed, t.n_objects * 1000 + t.replica, kModelStream);
    RunResult r;
    if (t.model == "esn") {
      EsnConfig c = options.esn;
      c.seed = model_seed;
      r = run_esn(schema, data, c, LearningMode::Final).result;
    } else if (t.model == "baseline") {
      r = run_baseline(schema, data);
    } else {
      LstmConfig c = preset(t.model);
      c.seed = model_seed;
      r = run_lstm(schema, data, c).result;
    }
    cells[k] = {t.n_objects, t.model, t.replica, r.rates, r.seconds};
    if (progress) {
      std::lock_guard lock(progress_mutex);
      progress(cells[k]);
    }
  });
  return cells;
}

std::pair<double, double> scaling_mean(std::span<const ScalingCell> cells, const std::string& model,
                                       std::size_t n_objects) {
  double v = 0.0, e = 0.0;
  std::size_t count = 0;
  for (const auto& c : cells)
    if (c.model == model && c.n_objects == n_objects) {
      v += c.rates.valid_error;
      e += c.rates.exact_error;
      ++count;
    }
  if (count == 0) throw std::invalid_argument("no scaling results for " + model + " at " + std::to_string(n_objects));
  return {v / static_cast<double>(count), e / static_cast<double>(count)};
}

void write_scaling_table(std::ostream& out, std::span<const ScalingCell> cells) {
  out << "n_objects\tmodel\treplica\tvalid_error\texact_error\ttrain_seconds\n";
  for (const auto& c : cells)
    out << c.n_objects << '\t' << c.model << '\t' << c.replica << '\t' << c.rates.valid_error << '\t'
        << c.rates.exact_error << '\t' << c.seconds << '\n';
}

HpAxis parse_hp_axis(const std::string& name) {
  if (name == "leak_rate") return HpAxis::LeakRate;
  if (name == "spectral_radius") return HpAxis::SpectralRadius;
  throw std::invalid_argument("unknown hyperparameter axis '" + name + "'");
}

const char* to_string(HpAxis axis) { return axis == HpAxis::LeakRate ? "leak_rate" : "spectral_radius"; }

HpCell run_hp_cell(const ConceptSchema& schema, const DataSplit& data, const EsnConfig& base, HpAxis axis,
                   double value, const EsnModel* reservoir) {
  EsnConfig c = base;
  (axis == HpAxis::LeakRate ? c.leak_rate : c.spectral_radius) = value;
  EsnRun run = run_esn(schema, data, c, LearningMode::Final, reservoir);
  double max_abs = 0.0;
  for (const auto& y : run.result.outputs) max_abs = std::max(max_abs, y.cwiseAbs().maxCoeff());
  HpCell cell{axis,
              value,
              run.result.rates,
              error_rates_for(run.result.outputs, data.test, schema, 1),
              error_rates_for(run.result.outputs, data.test, schema, 2),
              max_abs,
              std::move(run)};
  return cell;
}

Histogram histogram(std::span<const double> values, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("histogram needs at least one bin");
  Histogram h;
  h.counts.assign(bins, 0);
  if (values.empty()) return h;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  h.lo = *lo;
  h.hi = *hi;
  const double width = (h.hi - h.lo) / static_cast<double>(bins);
  for (double v : values) {
    std::size_t b = width > 0.0 ? static_cast<std::size_t>((v - h.lo) / width) : 0;
    ++h.counts[std::min(b, bins - 1)];
  }
  return h;
}

std::vector<double> output_component(const std::vector<Eigen::VectorXd>& outputs, std::size_t index) {
  std::vector<double> out;
  out.reserve(outputs.size());
  for (const auto& y : outputs) out.push_back(y(static_cast<Eigen::Index>(index)));
  return out;
}

ErrorRates error_rates_for(const std::vector<Eigen::VectorXd>& outputs, const std::vector<Sample>& samples,
                           const ConceptSchema& schema, std::size_t object_count, ThresholdPolicy policy) {
  if (outputs.size() != samples.size()) throw std::invalid_argument("outputs and samples differ in length");
  std::vector<Eigen::VectorXd> sub_out;
  std::vector<Sample> sub;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (samples[i].object_count() == object_count) {
      sub_out.push_back(outputs[i]);
      sub.push_back(samples[i]);
    }
  return error_rates(sub_out, sub, schema, policy);
}

LearningCurve validation_curve(EsnModel& model, const std::vector<Sample>& train, LearningMode mode,
                               const std::vector<Sample>& validation, const ConceptSchema& schema,
                               std::size_t every) {
  const Eigen::MatrixXd probes = model.final_states(validation);
  LearningCurve curve;
  std::vector<Eigen::VectorXd> outputs(validation.size());
  for (const Snapshot& s : snapshot_series(model, train, mode, probes, every)) {
    for (std::size_t i = 0; i < validation.size(); ++i) outputs[i] = s.outputs.col(static_cast<Eigen::Index>(i));
    curve.emplace_back(s.sentences, error_rates(outputs, validation, schema).valid_error);
  }
  return curve;
}

std::optional<std::size_t> find_breakpoint(const LearningCurve& curve, double plateau, double drop,
                                           std::size_t window) {
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const auto [t, err] = curve[i];
    if (t < window) continue;
    bool on_plateau = true;
    for (std::size_t j = 0; j <= i; ++j)
      if (curve[j].first + window >= t && curve[j].second < plateau) on_plateau = false;
    if (!on_plateau) continue;
    for (std::size_t j = i + 1; j < curve.size() && curve[j].first <= t + window; ++j)
      if (curve[j].second <= err - drop && curve[j].second < plateau) return t;
  }
  return std::nullopt;
}

}  // namespace csl
