#include "csl/dataset_io.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace csl {

using nlohmann::json;

json schema_to_json(const ConceptSchema& schema) {
  json concepts = json::array();
  for (const auto& c : schema.concepts()) concepts.push_back({{"name", c.name}, {"values", c.values}});
  return {{"concepts", concepts}};
}

ConceptSchema schema_from_json(const json& j) {
  std::vector<Concept> concepts;
  for (const auto& c : j.at("concepts"))
    concepts.push_back({c.at("name").get<std::string>(), c.at("values").get<std::vector<std::string>>()});
  return ConceptSchema(std::move(concepts));
}

json sample_to_json(const ConceptSchema& schema, const Sample& sample) {
  json tokens = json::array();
  for (TokenId t : sample.tokens) tokens.push_back(schema.word(t));

  json scene = json::array();
  for (const auto& obj : sample.scene.objects) {
    json o = json::object();
    for (std::size_t c = 0; c < schema.concept_count(); ++c) {
      const auto& concept_ = schema.concepts()[c];
      o[concept_.name] = obj[c] == kAbsent ? json(nullptr) : json(concept_.values[obj[c]]);
    }
    scene.push_back(std::move(o));
  }

  json described = json::array();
  for (const auto& slot : sample.described) described.push_back(std::vector<bool>(slot));

  return {{"tokens", tokens}, {"teacher", sample.teacher}, {"described", described}, {"scene", scene}};
}

Sample sample_from_json(const ConceptSchema& schema, const json& j) {
  Sample s;
  for (const auto& w : j.at("tokens")) s.tokens.push_back(schema.word_id(w.get<std::string>()));
  s.teacher = j.at("teacher").get<std::vector<double>>();
  if (s.teacher.size() != schema.output_dim())
    throw std::runtime_error("teacher dimension does not match the schema");

  const auto& described = j.at("described");
  if (described.size() != kObjectSlots) throw std::runtime_error("described must have two slots");
  for (std::size_t slot = 0; slot < kObjectSlots; ++slot) {
    s.described[slot] = described[slot].get<std::vector<bool>>();
    if (s.described[slot].size() != schema.concept_count())
      throw std::runtime_error("described slot size does not match the schema");
  }

  for (const auto& o : j.at("scene")) {
    ConceptAssignment obj(schema.concept_count(), kAbsent);
    for (std::size_t c = 0; c < schema.concept_count(); ++c) {
      const auto& concept_ = schema.concepts()[c];
      const auto it = o.find(concept_.name);
      if (it == o.end() || it->is_null()) continue;
      const auto name = it->get<std::string>();
      const auto pos = std::find(concept_.values.begin(), concept_.values.end(), name);
      if (pos == concept_.values.end()) throw std::runtime_error("unknown value '" + name + "'");
      obj[c] = static_cast<int>(pos - concept_.values.begin());
    }
    s.scene.objects.push_back(std::move(obj));
  }
  return s;
}

void write_dataset(std::ostream& out, const ConceptSchema& schema, const std::vector<Sample>& samples) {
  const json header = {{"format", "csl-dataset"}, {"version", 1}, {"schema", schema_to_json(schema)}};
  out << header.dump() << '\n';
  for (const auto& s : samples) out << sample_to_json(schema, s).dump() << '\n';
}

Dataset read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty dataset file");
  const json header = json::parse(line);
  if (header.value("format", "") != "csl-dataset") throw std::runtime_error("not a csl dataset file");
  Dataset ds{schema_from_json(header.at("schema")), {}};
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ds.samples.push_back(sample_from_json(ds.schema, json::parse(line)));
  }
  return ds;
}

void save_dataset(const std::string& path, const ConceptSchema& schema,
                  const std::vector<Sample>& samples) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_dataset(out, schema, samples);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  return read_dataset(in);
}

}  // namespace csl
