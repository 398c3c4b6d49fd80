#include "csl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace csl {

const char* to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::NotValid: return "not_valid";
    case Outcome::ValidNotExact: return "valid_not_exact";
    case Outcome::Exact: return "exact";
  }
  return "?";
}

SceneRepresentation decode(std::span<const double> output, const ConceptSchema& schema,
                           ThresholdPolicy policy) {
  if (output.size() != schema.output_dim())
    throw std::invalid_argument("output dimension does not match the schema");
  if (!(policy.factor > 0.0)) throw std::invalid_argument("threshold factor must be positive");

  SceneRepresentation rep;
  std::vector<double> probs;
  for (std::size_t slot = 0; slot < kObjectSlots; ++slot) {
    rep.slots[slot].assign(schema.concept_count(), kAbsent);
    for (std::size_t c = 0; c < schema.concept_count(); ++c) {
      const std::size_t k = schema.value_count(c);
      const auto block = output.subspan(schema.offset(slot, c), k);
      const double peak = *std::max_element(block.begin(), block.end());
      probs.resize(k);
      double z = 0.0;
      for (std::size_t v = 0; v < k; ++v) z += (probs[v] = std::exp(block[v] - peak));
      std::size_t best = 0;
      for (std::size_t v = 0; v < k; ++v) {
        probs[v] /= z;
        if (probs[v] > probs[best]) best = v;
      }
      if (probs[best] >= policy.factor / static_cast<double>(k)) rep.slots[slot][c] = static_cast<int>(best);
    }
  }
  return rep;
}

SceneRepresentation decode(const Eigen::VectorXd& output, const ConceptSchema& schema,
                           ThresholdPolicy policy) {
  return decode(std::span<const double>(output.data(), static_cast<std::size_t>(output.size())), schema,
                policy);
}

Outcome judge(const SceneRepresentation& rep, const Sample& sample) {
  bool extra = false;
  for (std::size_t slot = 0; slot < kObjectSlots; ++slot) {
    const auto& described = sample.described[slot];
    for (std::size_t c = 0; c < rep.slots[slot].size(); ++c) {
      const int got = rep.slots[slot][c];
      if (c < described.size() && described[c]) {
        if (got != sample.scene.objects.at(slot)[c]) return Outcome::NotValid;
      } else if (got != kAbsent) {
        extra = true;
      }
    }
  }
  return extra ? Outcome::ValidNotExact : Outcome::Exact;
}

ErrorRates tally(std::span<const Outcome> outcomes) {
  ErrorRates r;
  for (Outcome o : outcomes) {
    switch (o) {
      case Outcome::NotValid: ++r.not_valid; break;
      case Outcome::ValidNotExact: ++r.valid_not_exact; break;
      case Outcome::Exact: ++r.exact; break;
    }
  }
  const double n = static_cast<double>(r.total());
  if (n > 0) {
    r.valid_error = static_cast<double>(r.not_valid) / n;
    r.exact_error = static_cast<double>(r.not_valid + r.valid_not_exact) / n;
  }
  return r;
}

std::vector<Outcome> judge_all(const std::vector<Eigen::VectorXd>& outputs,
                               const std::vector<Sample>& samples, const ConceptSchema& schema,
                               ThresholdPolicy policy) {
  if (outputs.size() != samples.size())
    throw std::invalid_argument("outputs and samples differ in length");
  std::vector<Outcome> out;
  out.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    out.push_back(judge(decode(outputs[i], schema, policy), samples[i]));
  return out;
}

ErrorRates error_rates(const std::vector<Eigen::VectorXd>& outputs, const std::vector<Sample>& samples,
                       const ConceptSchema& schema, ThresholdPolicy policy) {
  const auto outcomes = judge_all(outputs, samples, schema, policy);
  return tally(outcomes);
}

std::vector<SweepRow> threshold_sweep(const std::vector<Eigen::VectorXd>& outputs,
                                      const std::vector<Sample>& samples, const ConceptSchema& schema,
                                      std::span<const double> factors) {
  std::vector<SweepRow> rows;
  rows.reserve(factors.size());
  for (double f : factors) rows.push_back({f, error_rates(outputs, samples, schema, ThresholdPolicy{f})});
  return rows;
}

std::vector<double> factor_grid(double first, double last, double step) {
  if (!(step > 0.0) || last < first) throw std::invalid_argument("bad factor grid");
  std::vector<double> out;
  const auto count = static_cast<std::size_t>(std::floor((last - first) / step + 1e-9)) + 1;
  for (std::size_t i = 0; i < count; ++i) out.push_back(first + static_cast<double>(i) * step);
  return out;
}

void write_report(std::ostream& out, std::span<const SweepRow> rows) {
  out << "factor\tvalid_error\texact_error\tnot_valid\tvalid_not_exact\texact\n";
  for (const auto& row : rows)
    out << row.factor << '\t' << row.rates.valid_error << '\t' << row.rates.exact_error << '\t'
        << row.rates.not_valid << '\t' << row.rates.valid_not_exact << '\t' << row.rates.exact << '\n';
}

}  // namespace csl
