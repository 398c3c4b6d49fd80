#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "csl/corpus.hpp"

namespace csl {

/// Per-token record of one sentence run. `states` holds the recurrent state
/// after each token (reservoir r for the ESN, hidden h for the LSTM); `cells`
/// is only filled by the LSTM.
struct SentenceTrace {
  std::vector<TokenId> tokens;
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> outputs;
  std::vector<Eigen::VectorXd> cells;

  std::size_t size() const { return tokens.size(); }
};

struct SentenceRun {
  Eigen::VectorXd output;  // output after the last token
  std::optional<SentenceTrace> trace;
};

}  // namespace csl
