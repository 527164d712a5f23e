#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "isokam/rds.hpp"

namespace isokam {

// A random dynamical system description, see docs/FORMATS.md.
struct SystemSpec {
  GeneratorTuple generators;
  std::vector<TangentField> fields;  // one per generator; empty: isometric
  double epsilon = 0.0;
  std::shared_ptr<const TangentField> conjugator;  // set: psi_{eps W} R_i psi_{eps W}^{-1}
  nlohmann::json source;

  int ambient() const { return generators.dim(); }
  MapList maps() const;
};

GeneratorTuple parse_generators(const nlohmann::json& j);
TangentField parse_field(const nlohmann::json& j, int ambient, const std::vector<TangentField>& previous);
SystemSpec parse_system(const nlohmann::json& j);
SystemSpec load_system(const std::string& path);

nlohmann::json field_to_json(const TangentField& y);
nlohmann::json matrix_to_json(const Mat& m);
Mat matrix_from_json(const nlohmann::json& j);

}  // namespace isokam
