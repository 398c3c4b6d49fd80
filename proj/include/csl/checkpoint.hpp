#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "csl/corpus.hpp"
#include "csl/esn.hpp"
#include "csl/lstm.hpp"

namespace csl {

/// Model checkpoint container, all integers little-endian:
///
///   char[8]   magic "CSLCKPT\0"
///   u32       format version (1)
///   u32 + s   architecture tag, "esn" or "lstm"
///   u64       schema hash
///   u64 + s   JSON document {"schema": ..., "config": ...}
///   u32       array count, then per array:
///     u32 + s   name
///     u8        0 = dense, 1 = sparse triplets
///     u64 u64   rows, cols
///     dense:    f64[rows * cols], column-major
///     sparse:   u64 nnz, u32 row[nnz], u32 col[nnz], f64 value[nnz]
///
/// ESN arrays: w_in, w_rec (sparse), w_out, p. LSTM arrays: theta, adam_m,
/// adam_v (the Adam step count is part of the config document).
struct EsnCheckpoint {
  ConceptSchema schema;
  EsnModel model;
};

struct LstmCheckpoint {
  ConceptSchema schema;
  LstmModel model;
};

void write_checkpoint(std::ostream& out, const EsnModel& model, const ConceptSchema& schema);
void write_checkpoint(std::ostream& out, const LstmModel& model, const ConceptSchema& schema);
void save_checkpoint(const std::string& path, const EsnModel& model, const ConceptSchema& schema);
void save_checkpoint(const std::string& path, const LstmModel& model, const ConceptSchema& schema);

/// Architecture tag of a checkpoint file ("esn" or "lstm").
std::string checkpoint_architecture(const std::string& path);

/// Throw std::runtime_error on malformed input, a wrong architecture tag or
/// a schema hash that does not match the embedded schema.
EsnCheckpoint read_esn_checkpoint(std::istream& in);
LstmCheckpoint read_lstm_checkpoint(std::istream& in);
EsnCheckpoint load_esn_checkpoint(const std::string& path);
LstmCheckpoint load_lstm_checkpoint(const std::string& path);

}  // namespace csl
