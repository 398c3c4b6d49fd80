#include "csl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace csl {
namespace {

struct Accumulator {
  std::size_t n = 0;
  double sum = 0.0, sum_sq = 0.0;

  void add(double x) {
    ++n;
    sum += x;
    sum_sq += x * x;
  }
  WordVariation result() const {
    WordVariation w;
    w.count = n;
    if (n == 0) return w;
    w.mean = sum / static_cast<double>(n);
    const double var = std::max(0.0, sum_sq / static_cast<double>(n) - w.mean * w.mean);
    w.stddev = std::sqrt(var);
    return w;
  }
};

}  // namespace

TokenId VariationStats::strongest_word() const {
  TokenId best = 0;
  double best_mean = -1.0;
  for (std::size_t t = 0; t < per_word.size(); ++t)
    if (per_word[t].count > 0 && per_word[t].mean > best_mean) {
      best_mean = per_word[t].mean;
      best = static_cast<TokenId>(t);
    }
  return best;
}

VariationStats unit_variation(const std::vector<SentenceTrace>& traces, std::span<const std::size_t> units,
                              const ConceptSchema& schema, TraceSignal signal) {
  std::vector<Accumulator> words(schema.vocab_size());
  Accumulator semantic, function;
  for (const auto& trace : traces) {
    const auto& series = signal == TraceSignal::Cell ? trace.cells : trace.states;
    if (series.size() != trace.tokens.size())
      throw std::invalid_argument("trace has no recorded values for the requested signal");
    for (std::size_t t = 0; t < series.size(); ++t) {
      double delta = 0.0;
      for (std::size_t u : units) {
        const double prev = t == 0 ? 0.0 : series[t - 1](static_cast<Eigen::Index>(u));
        delta += std::abs(series[t](static_cast<Eigen::Index>(u)) - prev);
      }
      const TokenId tok = trace.tokens[t];
      words.at(tok).add(delta);
      if (schema.is_value_word(tok))
        semantic.add(delta);
      else if (tok != schema.begin_id() && tok != schema.end_id() && tok != schema.and_id())
        function.add(delta);
    }
  }
  VariationStats stats;
  for (const auto& w : words) stats.per_word.push_back(w.result());
  stats.semantic = semantic.result();
  stats.function = function.result();
  return stats;
}

std::vector<SentenceTrace> capture_traces(const EsnModel& model, const std::vector<Sample>& corpus) {
  std::vector<SentenceTrace> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus) out.push_back(std::move(*model.run_sentence(s.tokens, true).trace));
  return out;
}

std::vector<SentenceTrace> capture_traces(const LstmModel& model, const std::vector<Sample>& corpus) {
  std::vector<SentenceTrace> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus) out.push_back(std::move(*model.run_sentence(s.tokens, true).trace));
  return out;
}

std::vector<std::size_t> all_units(std::size_t n) {
  std::vector<std::size_t> out(n);
  std::iota(out.begin(), out.end(), 0);
  return out;
}

std::vector<std::size_t> top_connected_units(const Eigen::MatrixXd& w_out, std::size_t output_index,
                                             std::size_t k) {
  const auto units = static_cast<std::size_t>(w_out.cols()) - 1;
  if (k > units) throw std::invalid_argument("k exceeds the number of reservoir units");
  if (output_index >= static_cast<std::size_t>(w_out.rows())) throw std::out_of_range("output index out of range");
  std::vector<std::size_t> idx = all_units(units);
  const auto row = w_out.row(static_cast<Eigen::Index>(output_index));
  auto weight = [&](std::size_t u) { return std::abs(row(static_cast<Eigen::Index>(u) + 1)); };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) { return weight(a) > weight(b) || (weight(a) == weight(b) && a < b); });
  idx.resize(k);
  return idx;
}

std::vector<std::size_t> top_connected_units(const EsnModel& model, std::size_t output_index, std::size_t k) {
  return top_connected_units(model.w_out(), output_index, k);
}

std::vector<std::pair<std::size_t, std::size_t>> multipurpose_units(const Eigen::MatrixXd& w_out,
                                                                    std::size_t top_k, std::size_t min_outputs) {
  std::vector<std::size_t> hits(static_cast<std::size_t>(w_out.cols()) - 1, 0);
  for (Eigen::Index o = 0; o < w_out.rows(); ++o)
    for (std::size_t u : top_connected_units(w_out, static_cast<std::size_t>(o), top_k)) ++hits[u];
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t u = 0; u < hits.size(); ++u)
    if (hits[u] >= min_outputs) out.emplace_back(u, hits[u]);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

double top_fraction_mass(std::span<const double> values, double fraction) {
  if (values.empty()) return 0.0;
  std::vector<double> mags;
  mags.reserve(values.size());
  for (double v : values) mags.push_back(std::abs(v));
  std::sort(mags.begin(), mags.end(), std::greater<>());
  const double total = std::accumulate(mags.begin(), mags.end(), 0.0);
  if (total == 0.0) return fraction;
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(mags.size())));
  return std::accumulate(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(k), 0.0) / total;
}

double fraction_for_mass(std::span<const double> values, double mass) {
  if (values.empty()) return 0.0;
  std::vector<double> mags;
  mags.reserve(values.size());
  for (double v : values) mags.push_back(std::abs(v));
  std::sort(mags.begin(), mags.end(), std::greater<>());
  const double total = std::accumulate(mags.begin(), mags.end(), 0.0);
  if (total == 0.0) return mass;
  double acc = 0.0;
  for (std::size_t i = 0; i < mags.size(); ++i) {
    acc += mags[i];
    if (acc >= mass * total * (1.0 - 1e-12)) return static_cast<double>(i + 1) / static_cast<double>(mags.size());
  }
  return 1.0;
}

WingletCurve winglet_curve(const Eigen::MatrixXd& w_out) {
  WingletCurve curve;
  for (Eigen::Index o = 0; o < w_out.rows(); ++o) {
    Eigen::VectorXd row = w_out.row(o).transpose();
    std::sort(row.data(), row.data() + row.size());
    const auto positive = (row.array() > 0.0).count();
    curve.positive_fraction.push_back(static_cast<double>(positive) / static_cast<double>(row.size()));
    curve.sorted_weights.push_back(std::move(row));
  }
  const std::span<const double> all(w_out.data(), static_cast<std::size_t>(w_out.size()));
  curve.top8_mass = top_fraction_mass(all, 0.08);
  curve.fraction_for_28_mass = fraction_for_mass(all, 0.28);
  return curve;
}

std::vector<TokenId> and_prefixed(std::span<const TokenId> sentence, const ConceptSchema& schema) {
  std::vector<TokenId> out(sentence.begin(), sentence.end());
  const auto pos = (!out.empty() && out.front() == schema.begin_id()) ? out.begin() + 1 : out.begin();
  out.insert(pos, schema.and_id());
  return out;
}

SwaProbe swa_probe(const EsnModel& model, std::span<const TokenId> sentence, const ConceptSchema& schema) {
  const auto prefixed = and_prefixed(sentence, schema);
  return {std::move(*model.run_sentence(sentence, true).trace), std::move(*model.run_sentence(prefixed, true).trace)};
}

SwaProbe swa_probe(const LstmModel& model, std::span<const TokenId> sentence, const ConceptSchema& schema) {
  const auto prefixed = and_prefixed(sentence, schema);
  return {std::move(*model.run_sentence(sentence, true).trace), std::move(*model.run_sentence(prefixed, true).trace)};
}

}  // namespace csl
