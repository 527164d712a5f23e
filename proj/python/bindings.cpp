#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "isokam/cli.hpp"
#include "isokam/grassmann.hpp"
#include "isokam/harmonic.hpp"
#include "isokam/kam.hpp"
#include "isokam/wordsynth.hpp"

namespace py = pybind11;
using namespace isokam;

namespace {

std::vector<Mat> matrices(const GeneratorTuple& s) {
  std::vector<Mat> out;
  for (const auto& g : s) out.push_back(g.mat());
  return out;
}

GeneratorTuple tuple_from(const std::vector<Mat>& ms) {
  std::vector<GroupElement> elems;
  for (const auto& m : ms) elems.emplace_back(m);
  return GeneratorTuple(std::move(elems));
}

}  // namespace

PYBIND11_MODULE(_impl, m) {
  m.doc() = "isokam core bindings";
  m.attr("__version__") = kVersion;

  py::register_exception<Error>(m, "IsokamError");

  m.def("reference_pair", [] { return matrices(reference_pair()); });
  m.def("haar_sample", [](int dim, std::uint64_t seed) { return haar_sample(dim, seed).mat(); }, py::arg("dim"),
        py::arg("seed"));
  m.def("project_to_group", [](const Mat& a) { return project_to_group(a).mat(); });
  m.def("distance", [](const Mat& g, const Mat& h) { return distance(GroupElement(g), GroupElement(h)); });
  m.def("exp_so", [](const Mat& x) { return exp_so(x).mat(); });
  m.def("log_so", [](const Mat& g) { return log_so(GroupElement(g)); });

  m.def(
      "sphere_moments",
      [](int d, long n, std::uint64_t seed) {
        const auto s = sphere_moments(d, n, seed);
        auto est = [](const McEstimate& e) { return py::make_tuple(e.value, e.se); };
        py::dict out;
        out["m2"] = est(s.m2);
        out["m4"] = est(s.m4);
        out["m22"] = est(s.m22);
        return out;
      },
      py::arg("dim"), py::arg("samples"), py::arg("seed") = 7);

  m.def("lambda_r_taylor", &lambda_r_taylor, py::arg("L"), py::arg("r"));
  m.def(
      "lambda_r_mc",
      [](const Mat& l, int r, long n, std::uint64_t seed) {
        const auto e = lambda_r_mc(l, r, n, seed);
        return py::make_tuple(e.value, e.se);
      },
      py::arg("L"), py::arg("r"), py::arg("samples"), py::arg("seed") = 5);
  m.def("subspace_det", [](const Mat& l, const Mat& e) { return subspace_det(l, e, Mat::Identity(l.rows(), l.rows()),
                                                                             Mat::Identity(l.rows(), l.rows())); });

  m.def("wigner_block", [](const Mat& g, int l) { return wigner_block(GroupElement(g), l); });
  m.def(
      "spectral_gaps",
      [](const std::vector<Mat>& gens, int lmax, int powers) {
        std::vector<double> gaps;
        for (const auto& r : gap_profile(tuple_from(gens), lmax, powers).records) gaps.push_back(r.gap);
        return gaps;
      },
      py::arg("generators"), py::arg("lmax"), py::arg("powers") = 8);

  m.def(
      "approximate_inverse",
      [](const Mat& h, double eps) {
        const auto r = approximate_inverse(GroupElement(h), eps);
        return py::make_tuple(r.n, r.achieved);
      },
      py::arg("h"), py::arg("eps"));

  // Full experiment from a JSON config; returns the JSON output as a string.
  m.def(
      "run_command", [](const std::string& config) { return run_command(nlohmann::json::parse(config)).dump(); },
      py::arg("config"));
}
