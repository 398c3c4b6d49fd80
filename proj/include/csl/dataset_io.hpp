#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "csl/corpus.hpp"

namespace csl {

/// JSON-lines dataset file. Line 1 is the header record
///   {"format": "csl-dataset", "version": 1, "schema": {...}}
/// and every following line is one sample:
///   {"tokens": [...], "teacher": [...], "described": [[...], [...]],
///    "scene": [{"object": "cup", "color": "red", "position": "left"}, ...]}
struct Dataset {
  ConceptSchema schema;
  std::vector<Sample> samples;
};

nlohmann::json schema_to_json(const ConceptSchema& schema);
ConceptSchema schema_from_json(const nlohmann::json& j);

nlohmann::json sample_to_json(const ConceptSchema& schema, const Sample& sample);
Sample sample_from_json(const ConceptSchema& schema, const nlohmann::json& j);

void write_dataset(std::ostream& out, const ConceptSchema& schema, const std::vector<Sample>& samples);
Dataset read_dataset(std::istream& in);

/// Throws std::runtime_error when the file cannot be opened.
void save_dataset(const std::string& path, const ConceptSchema& schema,
                  const std::vector<Sample>& samples);
Dataset load_dataset(const std::string& path);

}  // namespace csl
