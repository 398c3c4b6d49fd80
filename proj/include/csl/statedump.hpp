#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csl/corpus.hpp"
#include "csl/esn.hpp"
#include "csl/lstm.hpp"
#include "csl/trace.hpp"

namespace csl {

/// Recurrent-state dump read by the visualization tools.
///
/// File layout: an ASCII header of "key value" lines
///
///   RSSDUMP 1
///   kind <esn|lstm>
///   state_dim <n>
///   output_dim <D>
///   schema_hash <16 hex digits>
///   corpus_seed <u64>
///   snapshot_tag <string without spaces>
///   rows <N>
///   vocabulary <V words separated by single spaces>
///   end_header
///
/// each terminated by '\n'. With H the byte length of the header
/// (including the final newline), the little-endian columns follow:
///
///   offset H                     sentence_id  u32[N]
///   H + 4N                       position     u32[N]
///   H + 8N                       token        u32[N]   index into vocabulary
///   H + 12N                      states       f32[N x n], row-major
///   H + 12N + 4Nn                outputs      f32[N x D], row-major
///   H + 12N + 4N(n + D)          is_final     u8[N]
///
/// and the file ends at H + 13N + 4N(n + D).
struct StateDump {
  std::string kind;
  std::size_t state_dim = 0;
  std::size_t output_dim = 0;
  std::uint64_t schema_hash = 0;
  std::uint64_t corpus_seed = 0;
  std::string snapshot_tag = "final";
  std::vector<std::string> vocabulary;

  std::vector<std::uint32_t> sentence_id;
  std::vector<std::uint32_t> position;
  std::vector<std::uint32_t> token;
  std::vector<float> states;   // rows() x state_dim
  std::vector<float> outputs;  // rows() x output_dim
  std::vector<std::uint8_t> is_final;

  std::size_t rows() const { return sentence_id.size(); }
  const float* state_row(std::size_t i) const { return states.data() + i * state_dim; }
  const float* output_row(std::size_t i) const { return outputs.data() + i * output_dim; }

  /// States as a double matrix, one column per row of the dump.
  Eigen::MatrixXd state_matrix() const;

  bool operator==(const StateDump&) const = default;
};

struct DumpMetadata {
  std::string kind;
  std::uint64_t corpus_seed = 0;
  std::string snapshot_tag = "final";
};

/// Builds an undeduplicated dump from captured traces, in sentence order.
StateDump make_dump(const std::vector<SentenceTrace>& traces, const ConceptSchema& schema,
                    const DumpMetadata& meta);

/// Keeps the first row of every distinct state vector. With no tolerance
/// the comparison is bitwise on the stored f32 values; with a tolerance the
/// states are compared after rounding each component to a multiple of it.
StateDump dedupe(const StateDump& dump, std::optional<double> tolerance = std::nullopt);

StateDump capture_dump(const EsnModel& model, const std::vector<Sample>& corpus, const ConceptSchema& schema,
                       bool dedupe_states, std::uint64_t corpus_seed = 0, std::string snapshot_tag = "final");
StateDump capture_dump(const LstmModel& model, const std::vector<Sample>& corpus, const ConceptSchema& schema,
                       bool dedupe_states, std::uint64_t corpus_seed = 0, std::string snapshot_tag = "final");

void write_dump(std::ostream& out, const StateDump& dump);
/// Throws std::runtime_error on a malformed or truncated stream.
StateDump read_dump(std::istream& in);
void save_dump(const std::string& path, const StateDump& dump);
StateDump load_dump(const std::string& path);

/// Readout outputs over fixed probe states, taken every N training
/// sentences (the first entry is before any training).
struct Snapshot {
  std::size_t sentences = 0;
  Eigen::MatrixXd outputs;  // D x probe count
};

/// Trains `model` on `train` and records W_out applied to the probe states
/// (columns of `probe_states`) at sentence 0, every `every` sentences and
/// after the last sentence.
/// Reservoir states do not depend on the readout, so the probes are fixed.
std::vector<Snapshot> snapshot_series(EsnModel& model, const std::vector<Sample>& train, LearningMode mode,
                                      const Eigen::MatrixXd& probe_states, std::size_t every);

/// Snapshot file: "RSSSNAP 1\n" then "probes <M>\noutput_dim <D>\nsnapshots <K>\nend_header\n",
/// followed per snapshot by u32 sentence count and f32[M x D] row-major outputs.
void write_snapshots(std::ostream& out, const std::vector<Snapshot>& series);
std::vector<Snapshot> read_snapshots(std::istream& in);

}  // namespace csl
