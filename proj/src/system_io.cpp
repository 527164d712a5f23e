#include "isokam/system_io.hpp"

#include <fstream>

#include "isokam/kam.hpp"

namespace isokam {

using nlohmann::json;

namespace {

double number(const json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigInvalid(field, "expected a number");
  return j.get<double>();
}

}  // namespace

json matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(row);
  }
  return rows;
}

Mat matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw ConfigInvalid("matrix", "expected an array of rows");
  const int rows = static_cast<int>(j.size()), cols = static_cast<int>(j[0].size());
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (!j[i].is_array() || static_cast<int>(j[i].size()) != cols) throw ConfigInvalid("matrix", "ragged rows");
    for (int k = 0; k < cols; ++k) m(i, k) = number(j[i][k], "matrix");
  }
  return m;
}

namespace {

GroupElement parse_generator(const json& g) {
  if (g.is_array()) {
    try {
      return GroupElement(matrix_from_json(g));
    } catch (const SingularInput& e) {
      throw ConfigInvalid("generators", e.what());
    }
  }
  if (!g.is_object() || g.size() != 1) throw ConfigInvalid("generators", "unrecognized generator entry");
  const std::string key = g.begin().key();
  const json& val = g.begin().value();
  if (key == "rot_x") return rot_x(number(val, "generators.rot_x"));
  if (key == "rot_y") return rot_y(number(val, "generators.rot_y"));
  if (key == "rot_z") return rot_z(number(val, "generators.rot_z"));
  if (key == "haar") {
    if (!val.is_object() || !val.contains("dim") || !val.contains("seed"))
      throw ConfigInvalid("generators.haar", "needs dim and seed");
    const int dim = val["dim"].get<int>();
    if (dim < 2) throw ConfigInvalid("generators.haar.dim", "must be >= 2");
    return haar_sample(dim, val["seed"].get<std::uint64_t>());
  }
  if (key == "plane") {
    const int dim = val.at("dim").get<int>(), i = val.at("i").get<int>(), k = val.at("j").get<int>();
    if (dim < 2 || i < 0 || k < 0 || i >= dim || k >= dim || i == k)
      throw ConfigInvalid("generators.plane", "invalid plane");
    return plane_rotation(dim, i, k, number(val.at("theta"), "generators.plane.theta"));
  }
  throw ConfigInvalid("generators", "unknown generator kind '" + key + "'");
}

}  // namespace

GeneratorTuple parse_generators(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "reference") return reference_pair();
    try {
      std::vector<GroupElement> elems;
      for (const auto& m : read_matrices_file(j.get<std::string>())) elems.emplace_back(m);
      return GeneratorTuple(std::move(elems));
    } catch (const SingularInput& e) {
      throw ConfigInvalid("generators", e.what());
    }
  }
  if (!j.is_array() || j.empty()) throw ConfigInvalid("generators", "expected \"reference\", a file path, or a list");
  std::vector<GroupElement> elems;
  for (const auto& g : j) elems.push_back(parse_generator(g));
  for (const auto& e : elems)
    if (e.dim() != elems.front().dim()) throw ConfigInvalid("generators", "dimension mismatch");
  return GeneratorTuple(std::move(elems));
}

TangentField parse_field(const json& j, int ambient, const std::vector<TangentField>& previous) {
  if (!j.is_object()) throw ConfigInvalid("fields", "expected an object");
  TangentField y(ambient);
  if (j.contains("terms")) {
    for (const auto& t : j["terms"]) {
      const auto e = t.at("exponent").get<std::vector<int>>();
      const auto c = t.at("coeff").get<std::vector<double>>();
      PVec coeff(static_cast<int>(c.size()));
      for (std::size_t i = 0; i < c.size(); ++i) coeff(static_cast<int>(i)) = c[i];
      y.add_term(e, coeff);
    }
  } else if (j.contains("random")) {
    const auto& r = j["random"];
    const int degree = r.value("degree", 3);
    if (degree < 0 || degree > 3) throw ConfigInvalid("fields.random.degree", "must be in 0..3");
    y = TangentField::random(ambient, degree, r.value("c0", 1.0), r.value("seed", std::uint64_t{1}));
  } else if (j.contains("gradient_of")) {
    std::vector<std::pair<std::vector<int>, double>> h;
    for (const auto& t : j["gradient_of"]) h.emplace_back(t.at("exponent").get<std::vector<int>>(), t.at("coeff").get<double>());
    y = TangentField::gradient_of(ambient, h);
  } else if (j.contains("copy_of")) {
    const int k = j["copy_of"].get<int>();
    if (k < 0 || k >= static_cast<int>(previous.size())) throw ConfigInvalid("fields.copy_of", "must reference an earlier field");
    y = previous[k];
  } else if (!j.contains("zero")) {
    throw ConfigInvalid("fields", "field needs one of terms, random, gradient_of, copy_of, zero");
  }
  if (j.contains("scale")) y = y * number(j["scale"], "fields.scale");
  return y;
}

SystemSpec parse_system(const json& j) {
  if (!j.is_object()) throw ConfigInvalid("system", "expected an object");
  SystemSpec s;
  s.source = j;
  if (!j.contains("generators")) throw ConfigInvalid("generators", "missing");
  s.generators = parse_generators(j["generators"]);
  const int n = s.generators.dim();
  if (n < 2 || n > kMaxAmbient) throw ConfigInvalid("generators", "ambient dimension must be in 2..8");
  s.epsilon = j.contains("epsilon") ? number(j["epsilon"], "epsilon") : 0.0;
  if (j.contains("fields")) {
    if (!j["fields"].is_array() || static_cast<int>(j["fields"].size()) != s.generators.size())
      throw ConfigInvalid("fields", "need one field per generator");
    for (const auto& f : j["fields"]) s.fields.push_back(parse_field(f, n, s.fields));
  }
  if (j.contains("conjugator")) {
    if (!s.fields.empty()) throw ConfigInvalid("conjugator", "give either fields or conjugator");
    s.conjugator = std::make_shared<TangentField>(parse_field(j["conjugator"], n, {}));
  }
  return s;
}

SystemSpec load_system(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("system", "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigInvalid("system", std::string("malformed JSON: ") + e.what());
  }
  return parse_system(j);
}

MapList SystemSpec::maps() const {
  if (conjugator) return conjugated_tuple(generators, conjugator, epsilon);
  if (fields.empty()) {
    MapList out;
    for (const auto& g : generators) out.push_back(std::make_shared<IsometryMap>(g));
    return out;
  }
  return perturbed_tuple(generators, fields, epsilon);
}

json field_to_json(const TangentField& y) {
  json terms = json::array();
  for (const auto& t : y.terms()) {
    json c = json::array();
    for (int i = 0; i < t.coeff.size(); ++i) c.push_back(t.coeff(i));
    terms.push_back({{"exponent", t.exponent}, {"coeff", c}});
  }
  return {{"terms", terms}};
}

}  // namespace isokam
