#include "csl/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "csl/dataset_io.hpp"

namespace csl {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

using nlohmann::json;

constexpr std::array<char, 8> kMagic = {'C', 'S', 'L', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_string(std::ostream& out, const std::string& s, bool wide = false) {
  if (wide)
    put<std::uint64_t>(out, s.size());
  else
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (in.gcount() != sizeof v) throw std::runtime_error("truncated checkpoint");
  return v;
}

template <class T>
void get_block(std::istream& in, T* data, std::size_t n) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(T)));
  if (static_cast<std::size_t>(in.gcount()) != n * sizeof(T)) throw std::runtime_error("truncated checkpoint");
}

std::string get_string(std::istream& in, bool wide = false) {
  const std::uint64_t n = wide ? get<std::uint64_t>(in) : get<std::uint32_t>(in);
  if (n > (std::uint64_t{1} << 32)) throw std::runtime_error("implausible string length in checkpoint");
  std::string s(n, '\0');
  get_block(in, s.data(), n);
  return s;
}

void put_dense(std::ostream& out, const std::string& name, const Eigen::MatrixXd& m) {
  put_string(out, name);
  put<std::uint8_t>(out, 0);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
}

void put_sparse(std::ostream& out, const std::string& name, const EsnModel::SparseMatrix& m) {
  std::vector<std::uint32_t> rows, cols;
  std::vector<double> vals;
  for (Eigen::Index r = 0; r < m.outerSize(); ++r)
    for (EsnModel::SparseMatrix::InnerIterator it(m, r); it; ++it) {
      rows.push_back(static_cast<std::uint32_t>(it.row()));
      cols.push_back(static_cast<std::uint32_t>(it.col()));
      vals.push_back(it.value());
    }
  put_string(out, name);
  put<std::uint8_t>(out, 1);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  put<std::uint64_t>(out, vals.size());
  out.write(reinterpret_cast<const char*>(rows.data()), static_cast<std::streamsize>(rows.size() * 4));
  out.write(reinterpret_cast<const char*>(cols.data()), static_cast<std::streamsize>(cols.size() * 4));
  out.write(reinterpret_cast<const char*>(vals.data()), static_cast<std::streamsize>(vals.size() * 8));
}

struct Array {
  Eigen::MatrixXd dense;
  std::optional<EsnModel::SparseMatrix> sparse;
};

struct Container {
  std::string architecture;
  std::uint64_t schema_hash = 0;
  json document;
  std::map<std::string, Array> arrays;

  const Array& at(const std::string& name) const {
    auto it = arrays.find(name);
    if (it == arrays.end()) throw std::runtime_error("checkpoint is missing array '" + name + "'");
    return it->second;
  }
};

void write_header(std::ostream& out, const std::string& arch, const ConceptSchema& schema, const json& config,
                  std::uint32_t array_count) {
  out.write(kMagic.data(), kMagic.size());
  put(out, kVersion);
  put_string(out, arch);
  put<std::uint64_t>(out, schema.hash());
  json doc = {{"schema", schema_to_json(schema)}, {"config", config}};
  put_string(out, doc.dump(), true);
  put(out, array_count);
}

Container read_container(std::istream& in) {
  std::array<char, 8> magic{};
  get_block(in, magic.data(), magic.size());
  if (magic != kMagic) throw std::runtime_error("not a checkpoint (bad magic)");
  if (get<std::uint32_t>(in) != kVersion) throw std::runtime_error("unsupported checkpoint version");
  Container c;
  c.architecture = get_string(in);
  c.schema_hash = get<std::uint64_t>(in);
  c.document = json::parse(get_string(in, true));
  const auto count = get<std::uint32_t>(in);
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::string name = get_string(in);
    const auto kind = get<std::uint8_t>(in);
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    if (rows > (1u << 20) || cols > (1u << 20)) throw std::runtime_error("implausible array shape in checkpoint");
    Array a;
    if (kind == 0) {
      a.dense.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
      get_block(in, a.dense.data(), rows * cols);
    } else if (kind == 1) {
      const auto nnz = get<std::uint64_t>(in);
      if (nnz > rows * cols) throw std::runtime_error("too many sparse entries in checkpoint");
      std::vector<std::uint32_t> r(nnz), cl(nnz);
      std::vector<double> v(nnz);
      get_block(in, r.data(), nnz);
      get_block(in, cl.data(), nnz);
      get_block(in, v.data(), nnz);
      std::vector<Eigen::Triplet<double>> trips;
      trips.reserve(nnz);
      for (std::size_t i = 0; i < nnz; ++i) {
        if (r[i] >= rows || cl[i] >= cols) throw std::runtime_error("sparse entry outside the matrix");
        trips.emplace_back(r[i], cl[i], v[i]);
      }
      EsnModel::SparseMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
      m.setFromTriplets(trips.begin(), trips.end());
      a.sparse = std::move(m);
    } else {
      throw std::runtime_error("unknown array kind in checkpoint");
    }
    c.arrays.emplace(name, std::move(a));
  }
  return c;
}

ConceptSchema checked_schema(const Container& c, const std::string& arch) {
  if (c.architecture != arch)
    throw std::runtime_error("checkpoint holds a '" + c.architecture + "' model, expected '" + arch + "'");
  ConceptSchema schema = schema_from_json(c.document.at("schema"));
  if (schema.hash() != c.schema_hash) throw std::runtime_error("checkpoint schema hash mismatch");
  return schema;
}

Eigen::VectorXd as_vector(const Eigen::MatrixXd& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

}  // namespace

void write_checkpoint(std::ostream& out, const EsnModel& model, const ConceptSchema& schema) {
  const auto& c = model.config();
  json config = {{"units", c.units},
                 {"spectral_radius", c.spectral_radius},
                 {"leak_rate", c.leak_rate},
                 {"sparsity", c.sparsity},
                 {"regularization", c.regularization},
                 {"input_scaling", c.input_scaling},
                 {"seed", c.seed}};
  write_header(out, "esn", schema, config, 4);
  put_dense(out, "w_in", model.w_in());
  put_sparse(out, "w_rec", model.w_rec());
  put_dense(out, "w_out", model.w_out());
  put_dense(out, "p", model.inverse_correlation());
  if (!out) throw std::runtime_error("failed to write checkpoint");
}

void write_checkpoint(std::ostream& out, const LstmModel& model, const ConceptSchema& schema) {
  const auto& c = model.config();
  json config = {{"units", c.units},
                 {"epochs", c.epochs},
                 {"batch_size", c.batch_size},
                 {"dropout", c.dropout},
                 {"adam",
                  {{"step_size", c.adam.step_size},
                   {"beta1", c.adam.beta1},
                   {"beta2", c.adam.beta2},
                   {"epsilon", c.adam.epsilon}}},
                 {"seed", c.seed},
                 {"optimizer_steps", model.optimizer_steps()}};
  write_header(out, "lstm", schema, config, 3);
  put_dense(out, "theta", model.parameters());
  put_dense(out, "adam_m", model.first_moment());
  put_dense(out, "adam_v", model.second_moment());
  if (!out) throw std::runtime_error("failed to write checkpoint");
}

EsnCheckpoint read_esn_checkpoint(std::istream& in) {
  const Container c = read_container(in);
  ConceptSchema schema = checked_schema(c, "esn");
  const json& j = c.document.at("config");
  EsnConfig config;
  config.units = j.at("units").get<std::size_t>();
  config.spectral_radius = j.at("spectral_radius").get<double>();
  config.leak_rate = j.at("leak_rate").get<double>();
  config.sparsity = j.at("sparsity").get<double>();
  config.regularization = j.at("regularization").get<double>();
  config.input_scaling = j.at("input_scaling").get<double>();
  config.seed = j.at("seed").get<std::uint64_t>();
  const Array& w_rec = c.at("w_rec");
  if (!w_rec.sparse) throw std::runtime_error("w_rec must be stored as sparse triplets");
  const Eigen::MatrixXd& w_out = c.at("w_out").dense;
  if (c.at("w_in").dense.cols() != static_cast<Eigen::Index>(schema.vocab_size()) ||
      w_out.rows() != static_cast<Eigen::Index>(schema.output_dim()))
    throw std::runtime_error("checkpoint weights do not match its schema");
  EsnModel model = EsnModel::from_parts(config, c.at("w_in").dense, *w_rec.sparse, w_out, c.at("p").dense);
  return {std::move(schema), std::move(model)};
}

LstmCheckpoint read_lstm_checkpoint(std::istream& in) {
  const Container c = read_container(in);
  ConceptSchema schema = checked_schema(c, "lstm");
  const json& j = c.document.at("config");
  LstmConfig config;
  config.units = j.at("units").get<std::size_t>();
  config.epochs = j.at("epochs").get<std::size_t>();
  config.batch_size = j.at("batch_size").get<std::size_t>();
  config.dropout = j.at("dropout").get<double>();
  const json& a = j.at("adam");
  config.adam.step_size = a.at("step_size").get<double>();
  config.adam.beta1 = a.at("beta1").get<double>();
  config.adam.beta2 = a.at("beta2").get<double>();
  config.adam.epsilon = a.at("epsilon").get<double>();
  config.seed = j.at("seed").get<std::uint64_t>();
  LstmModel model = LstmModel::from_parameters(config, schema.vocab_size(), schema.output_dim(),
                                               as_vector(c.at("theta").dense));
  model.set_optimizer_state(as_vector(c.at("adam_m").dense), as_vector(c.at("adam_v").dense),
                            j.at("optimizer_steps").get<std::uint64_t>());
  return {std::move(schema), std::move(model)};
}

void save_checkpoint(const std::string& path, const EsnModel& model, const ConceptSchema& schema) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_checkpoint(out, model, schema);
}

void save_checkpoint(const std::string& path, const LstmModel& model, const ConceptSchema& schema) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_checkpoint(out, model, schema);
}

std::string checkpoint_architecture(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::array<char, 8> magic{};
  get_block(in, magic.data(), magic.size());
  if (magic != kMagic) throw std::runtime_error("not a checkpoint (bad magic)");
  get<std::uint32_t>(in);
  return get_string(in);
}

EsnCheckpoint load_esn_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_esn_checkpoint(in);
}

LstmCheckpoint load_lstm_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_lstm_checkpoint(in);
}

}  // namespace csl
