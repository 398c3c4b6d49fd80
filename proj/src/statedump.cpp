#include "csl/statedump.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string_view>
#include <unordered_map>

#include "csl/analysis.hpp"

namespace csl {

static_assert(std::endian::native == std::endian::little, "dump I/O assumes a little-endian host");

namespace {

template <class T>
void write_array(std::ostream& out, const std::vector<T>& v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <class T>
void read_array(std::istream& in, std::vector<T>& v, std::size_t n) {
  v.resize(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
  if (static_cast<std::size_t>(in.gcount()) != n * sizeof(T)) throw std::runtime_error("truncated dump data");
}

std::string expect_line(std::istream& in, std::string_view key) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("truncated header, expected " + std::string(key));
  if (line.compare(0, key.size(), key) != 0 || (line.size() > key.size() && line[key.size()] != ' '))
    throw std::runtime_error("bad header line '" + line + "', expected " + std::string(key));
  return line.size() > key.size() ? line.substr(key.size() + 1) : std::string();
}

std::uint64_t parse_u64(const std::string& s, int base = 10) {
  std::size_t used = 0;
  const auto v = std::stoull(s, &used, base);
  if (used != s.size()) throw std::runtime_error("bad integer '" + s + "'");
  return v;
}

struct RowKeyHash {
  std::size_t operator()(const std::string& s) const { return std::hash<std::string>{}(s); }
};

}  // namespace

Eigen::MatrixXd StateDump::state_matrix() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(state_dim), static_cast<Eigen::Index>(rows()));
  for (std::size_t i = 0; i < rows(); ++i)
    for (std::size_t k = 0; k < state_dim; ++k)
      m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = state_row(i)[k];
  return m;
}

StateDump make_dump(const std::vector<SentenceTrace>& traces, const ConceptSchema& schema,
                    const DumpMetadata& meta) {
  StateDump d;
  d.kind = meta.kind;
  d.corpus_seed = meta.corpus_seed;
  d.snapshot_tag = meta.snapshot_tag;
  d.schema_hash = schema.hash();
  d.vocabulary = schema.vocabulary();
  bool first = true;
  for (std::size_t s = 0; s < traces.size(); ++s) {
    const auto& tr = traces[s];
    for (std::size_t t = 0; t < tr.size(); ++t) {
      const auto& st = tr.states[t];
      const auto& y = tr.outputs[t];
      if (first) {
        d.state_dim = static_cast<std::size_t>(st.size());
        d.output_dim = static_cast<std::size_t>(y.size());
        first = false;
      } else if (static_cast<std::size_t>(st.size()) != d.state_dim ||
                 static_cast<std::size_t>(y.size()) != d.output_dim) {
        throw std::invalid_argument("inconsistent state dimension in traces");
      }
      d.sentence_id.push_back(static_cast<std::uint32_t>(s));
      d.position.push_back(static_cast<std::uint32_t>(t));
      d.token.push_back(tr.tokens[t]);
      for (Eigen::Index k = 0; k < st.size(); ++k) d.states.push_back(static_cast<float>(st(k)));
      for (Eigen::Index k = 0; k < y.size(); ++k) d.outputs.push_back(static_cast<float>(y(k)));
      d.is_final.push_back(t + 1 == tr.size() ? 1 : 0);
    }
  }
  return d;
}

StateDump dedupe(const StateDump& dump, std::optional<double> tolerance) {
  if (tolerance && !(*tolerance > 0.0)) throw std::invalid_argument("dedupe tolerance must be positive");
  StateDump out = dump;
  out.sentence_id.clear();
  out.position.clear();
  out.token.clear();
  out.states.clear();
  out.outputs.clear();
  out.is_final.clear();

  std::unordered_map<std::string, std::size_t, RowKeyHash> seen;
  std::string key;
  for (std::size_t i = 0; i < dump.rows(); ++i) {
    const float* row = dump.state_row(i);
    if (tolerance) {
      key.resize(dump.state_dim * sizeof(std::int64_t));
      for (std::size_t k = 0; k < dump.state_dim; ++k) {
        const auto q = static_cast<std::int64_t>(std::llround(static_cast<double>(row[k]) / *tolerance));
        std::memcpy(key.data() + k * sizeof q, &q, sizeof q);
      }
    } else {
      key.assign(reinterpret_cast<const char*>(row), dump.state_dim * sizeof(float));
    }
    if (!seen.emplace(key, i).second) continue;
    out.sentence_id.push_back(dump.sentence_id[i]);
    out.position.push_back(dump.position[i]);
    out.token.push_back(dump.token[i]);
    out.states.insert(out.states.end(), row, row + dump.state_dim);
    out.outputs.insert(out.outputs.end(), dump.output_row(i), dump.output_row(i) + dump.output_dim);
    out.is_final.push_back(dump.is_final[i]);
  }
  return out;
}

StateDump capture_dump(const EsnModel& model, const std::vector<Sample>& corpus, const ConceptSchema& schema,
                       bool dedupe_states, std::uint64_t corpus_seed, std::string snapshot_tag) {
  auto d = make_dump(capture_traces(model, corpus), schema, {"esn", corpus_seed, std::move(snapshot_tag)});
  d.state_dim = model.units();
  d.output_dim = model.output_dim();
  return dedupe_states ? dedupe(d) : d;
}

StateDump capture_dump(const LstmModel& model, const std::vector<Sample>& corpus, const ConceptSchema& schema,
                       bool dedupe_states, std::uint64_t corpus_seed, std::string snapshot_tag) {
  auto d = make_dump(capture_traces(model, corpus), schema, {"lstm", corpus_seed, std::move(snapshot_tag)});
  d.state_dim = model.units();
  d.output_dim = model.output_dim();
  return dedupe_states ? dedupe(d) : d;
}

void write_dump(std::ostream& out, const StateDump& d) {
  const std::size_t n = d.rows();
  if (d.position.size() != n || d.token.size() != n || d.is_final.size() != n ||
      d.states.size() != n * d.state_dim || d.outputs.size() != n * d.output_dim)
    throw std::invalid_argument("dump columns have inconsistent lengths");
  for (const auto& w : d.vocabulary)
    if (w.empty() || w.find_first_of(" \n") != std::string::npos)
      throw std::invalid_argument("vocabulary word cannot be written to a dump header");
  if (d.kind.find_first_of(" \n") != std::string::npos || d.snapshot_tag.find_first_of(" \n") != std::string::npos)
    throw std::invalid_argument("kind and snapshot tag must not contain spaces");

  std::ostringstream h;
  h << "RSSDUMP 1\n";
  h << "kind " << d.kind << '\n';
  h << "state_dim " << d.state_dim << '\n';
  h << "output_dim " << d.output_dim << '\n';
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(d.schema_hash));
  h << "schema_hash " << hash << '\n';
  h << "corpus_seed " << d.corpus_seed << '\n';
  h << "snapshot_tag " << d.snapshot_tag << '\n';
  h << "rows " << n << '\n';
  h << "vocabulary";
  for (const auto& w : d.vocabulary) h << ' ' << w;
  h << "\nend_header\n";
  const std::string header = h.str();
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  write_array(out, d.sentence_id);
  write_array(out, d.position);
  write_array(out, d.token);
  write_array(out, d.states);
  write_array(out, d.outputs);
  write_array(out, d.is_final);
  if (!out) throw std::runtime_error("failed to write dump");
}

StateDump read_dump(std::istream& in) {
  std::string magic;
  if (!std::getline(in, magic) || magic != "RSSDUMP 1") throw std::runtime_error("not a state dump (bad magic)");
  StateDump d;
  d.kind = expect_line(in, "kind");
  d.state_dim = parse_u64(expect_line(in, "state_dim"));
  d.output_dim = parse_u64(expect_line(in, "output_dim"));
  d.schema_hash = parse_u64(expect_line(in, "schema_hash"), 16);
  d.corpus_seed = parse_u64(expect_line(in, "corpus_seed"));
  d.snapshot_tag = expect_line(in, "snapshot_tag");
  const std::size_t n = parse_u64(expect_line(in, "rows"));
  std::istringstream words(expect_line(in, "vocabulary"));
  for (std::string w; words >> w;) d.vocabulary.push_back(w);
  std::string end;
  if (!std::getline(in, end) || end != "end_header") throw std::runtime_error("missing end_header");

  read_array(in, d.sentence_id, n);
  read_array(in, d.position, n);
  read_array(in, d.token, n);
  read_array(in, d.states, n * d.state_dim);
  read_array(in, d.outputs, n * d.output_dim);
  read_array(in, d.is_final, n);
  for (auto t : d.token)
    if (t >= d.vocabulary.size()) throw std::runtime_error("dump token index outside the vocabulary");
  return d;
}

void save_dump(const std::string& path, const StateDump& dump) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_dump(out, dump);
}

StateDump load_dump(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_dump(in);
}

std::vector<Snapshot> snapshot_series(EsnModel& model, const std::vector<Sample>& train, LearningMode mode,
                                      const Eigen::MatrixXd& probe_states, std::size_t every) {
  if (every == 0) throw std::invalid_argument("snapshot interval must be positive");
  if (probe_states.rows() != static_cast<Eigen::Index>(model.units()))
    throw std::invalid_argument("probe states do not match the reservoir size");
  std::vector<Snapshot> series;
  auto take = [&](std::size_t k, const EsnModel& m) {
    Eigen::MatrixXd y = m.w_out().rightCols(m.w_out().cols() - 1) * probe_states;
    y.colwise() += m.w_out().col(0);
    series.push_back({k, std::move(y)});
  };
  take(0, model);
  EsnTrainOptions options;
  options.after_sentence = [&](std::size_t k, const EsnModel& m) {
    if (k % every == 0) take(k, m);
  };
  train_esn(model, train, mode, options);
  if (train.size() % every != 0) take(train.size(), model);
  return series;
}

void write_snapshots(std::ostream& out, const std::vector<Snapshot>& series) {
  const std::size_t m = series.empty() ? 0 : static_cast<std::size_t>(series.front().outputs.cols());
  const std::size_t d = series.empty() ? 0 : static_cast<std::size_t>(series.front().outputs.rows());
  out << "RSSSNAP 1\nprobes " << m << "\noutput_dim " << d << "\nsnapshots " << series.size() << "\nend_header\n";
  std::vector<float> buf(m * d);
  for (const auto& s : series) {
    if (static_cast<std::size_t>(s.outputs.cols()) != m || static_cast<std::size_t>(s.outputs.rows()) != d)
      throw std::invalid_argument("snapshots have inconsistent shapes");
    const auto count = static_cast<std::uint32_t>(s.sentences);
    out.write(reinterpret_cast<const char*>(&count), sizeof count);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < d; ++k)
        buf[i * d + k] = static_cast<float>(s.outputs(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)));
    write_array(out, buf);
  }
  if (!out) throw std::runtime_error("failed to write snapshots");
}

std::vector<Snapshot> read_snapshots(std::istream& in) {
  std::string magic;
  if (!std::getline(in, magic) || magic != "RSSSNAP 1") throw std::runtime_error("not a snapshot file");
  const std::size_t m = parse_u64(expect_line(in, "probes"));
  const std::size_t d = parse_u64(expect_line(in, "output_dim"));
  const std::size_t k = parse_u64(expect_line(in, "snapshots"));
  std::string end;
  if (!std::getline(in, end) || end != "end_header") throw std::runtime_error("missing end_header");
  std::vector<Snapshot> series;
  std::vector<float> buf;
  for (std::size_t s = 0; s < k; ++s) {
    std::vector<std::uint32_t> count;
    read_array(in, count, 1);
    read_array(in, buf, m * d);
    Snapshot snap{count[0], Eigen::MatrixXd(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(m))};
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t c = 0; c < d; ++c)
        snap.outputs(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i)) = buf[i * d + c];
    series.push_back(std::move(snap));
  }
  return series;
}

}  // namespace csl
