#include "isokam/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "isokam/grassmann.hpp"
#include "isokam/harmonic.hpp"
#include "isokam/kam.hpp"
#include "isokam/strain.hpp"
#include "isokam/system_io.hpp"
#include "isokam/wordsynth.hpp"

namespace isokam {

using nlohmann::json;

namespace {

const std::map<std::string, json>& defaults() {
  static const std::map<std::string, json> table = {
      {"moments", {{"dim", 3}, {"samples", 1000000}, {"seed", 7}}},
      {"gap", {{"generators", "reference"}, {"lmax", 64}, {"powers", 8}}},
      {"coboundary", {{"generators", "reference"}, {"lmax", 16}, {"seed", 1}, {"decay", 2.0}}},
      {"lyapunov",
       {{"system", nullptr}, {"steps", 100000}, {"seed", 1}, {"batches", 20}, {"burn_in", 0}, {"x0", nullptr},
        {"trace_every", 0}, {"trace", ""}}},
      {"strain", {{"system", nullptr}, {"nquad", 100000}, {"seed", 3}}},
      {"grassmann-check",
       {{"dim", 4}, {"rank", 2}, {"norm", 0.05}, {"count", 20}, {"samples", 1000000}, {"seed", 5}}},
      {"kam-step",
       {{"system", nullptr}, {"lambda", 10.0}, {"lmax", 16}, {"derivative_panel", 2000}, {"strain_quad", 4000}}},
      {"kam-run",
       {{"system", nullptr}, {"schedule", "10,2,0.1,3"}, {"lmax", 16}, {"derivative_panel", 2000},
        {"strain_quad", 4000}, {"trace", ""}}},
      {"symmetry", {{"system", nullptr}, {"steps", 1000000}, {"seed", 99}, {"batches", 20}, {"x0", nullptr}}},
      {"sk-compile",
       {{"target", nullptr}, {"generators", "reference"}, {"epsilon", 0.05}, {"depth", 3}, {"inverse_free", false},
        {"net_epsilon", kSkBasin}, {"net_max_len", 40}}},
  };
  return table;
}

const char* describe(const std::string& cmd) {
  static const std::map<std::string, const char*> text = {
      {"moments", "Monte-Carlo moments of a uniform point on S^{d-1}"},
      {"gap", "spectral-gap profile of the averaging operator on S^2"},
      {"coboundary", "solve (I - M) psi = phi - mean(phi) for a random band-limited phi"},
      {"lyapunov", "Lyapunov spectrum of a random dynamical system"},
      {"strain", "pullback strain norms of each map"},
      {"grassmann-check", "Grassmannian log-det Taylor expansion against Monte Carlo"},
      {"kam-step", "one KAM conjugation step"},
      {"kam-run", "iterated KAM steps under a schedule"},
      {"symmetry", "top/bottom Lyapunov exponent symmetry defect"},
      {"sk-compile", "Solovay-Kitaev word synthesis on SO(3)"},
  };
  return text.at(cmd);
}

json require(const json& cfg, const std::string& key) {
  if (!cfg.contains(key) || cfg[key].is_null()) throw ConfigInvalid(key, "required");
  return cfg[key];
}

long get_long(const json& cfg, const std::string& key, long min_value) {
  const json& v = cfg.at(key);
  if (!v.is_number_integer()) throw ConfigInvalid(key, "expected an integer");
  const long x = v.get<long>();
  if (x < min_value) throw ConfigInvalid(key, "must be >= " + std::to_string(min_value));
  return x;
}

double get_double(const json& cfg, const std::string& key) {
  const json& v = cfg.at(key);
  if (!v.is_number()) throw ConfigInvalid(key, "expected a number");
  return v.get<double>();
}

std::uint64_t get_seed(const json& cfg, const std::string& key) {
  const json& v = cfg.at(key);
  if (!v.is_number_integer()) throw ConfigInvalid(key, "expected an integer seed");
  return v.get<std::uint64_t>();
}

json load_json_file(const std::string& path, const std::string& field) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid(field, "cannot open " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw ConfigInvalid(field, std::string("malformed JSON: ") + e.what());
  }
}

json matrices_json(const std::string& path, const std::string& field) {
  std::vector<Mat> mats;
  try {
    mats = read_matrices_file(path);
  } catch (const Error& e) {
    throw ConfigInvalid(field, e.what());
  }
  json out = json::array();
  for (const auto& m : mats) out.push_back(matrix_to_json(m));
  return out;
}

json estimate(const McEstimate& e) { return {{"value", e.value}, {"se", e.se}}; }

json vec_json(const Vec& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

PVec x0_from(const json& cfg, int ambient) {
  if (!cfg.contains("x0") || cfg["x0"].is_null()) {
    PVec x = PVec::Zero(ambient);
    x(ambient - 1) = 1.0;
    x(0) = 0.6;
    return x.normalized();
  }
  const auto v = cfg["x0"].get<std::vector<double>>();
  if (static_cast<int>(v.size()) != ambient) throw ConfigInvalid("x0", "length must equal the ambient dimension");
  PVec x(ambient);
  for (int i = 0; i < ambient; ++i) x(i) = v[i];
  if (!(x.norm() > 0.0)) throw ConfigInvalid("x0", "must be nonzero");
  return x.normalized();
}

json eps_json(const EpsNorms& e) { return {{"c0", e.c0}, {"c1", e.c1}, {"c2", e.c2}, {"hs", e.hs}}; }

json hodge_json(const HodgeCoeffs& h) {
  return {{"lmax", h.lmax()}, {"a", vec_json(h.a.coeffs())}, {"b", vec_json(h.b.coeffs())}};
}

json step_json(const KamStepReport& r) {
  json before = json::array(), after = json::array();
  for (const auto& e : r.before) before.push_back(eps_json(e));
  for (const auto& e : r.after) after.push_back(eps_json(e));
  return {{"lambda", r.lambda},
          {"lmax", r.lmax},
          {"eps_before", before},
          {"eps_after", after},
          {"eps_before_max", eps_json(r.before_max)},
          {"eps_after_max", eps_json(r.after_max)},
          {"strain_h0_before", r.strain_before},
          {"strain_h0_after", r.strain_after},
          {"rotation_shift", r.rotation_shift},
          {"mean_field_before", r.mean_field_before},
          {"mean_field_after", r.mean_field_after},
          {"mean_field_after_extracted", r.mean_field_after_extracted},
          {"coboundary_residual", r.coboundary_residual},
          {"fit_residual", r.fit_residual},
          {"inverse_residual", r.inverse_residual},
          {"v", hodge_json(r.v)}};
}

json rle_letters(const Word& w) {
  json out = json::array();
  const auto& ls = w.letters();
  for (std::size_t i = 0; i < ls.size();) {
    std::size_t k = i;
    while (k < ls.size() && ls[k] == ls[i]) ++k;
    out.push_back({ls[i].gen, ls[i].power, static_cast<long>(k - i)});
    i = k;
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigInvalid("trace", "cannot write " + path);
  out << text;
}

// ---------------------------------------------------------------------------

json cmd_moments(const json& c) {
  const int d = static_cast<int>(get_long(c, "dim", 2));
  const SphereMoments m = sphere_moments(d, get_long(c, "samples", 2), get_seed(c, "seed"));
  return {{"m2", estimate(m.m2)},
          {"m4", estimate(m.m4)},
          {"m22", estimate(m.m22)},
          {"expected", {{"m2", 1.0 / d}, {"m4", 3.0 / (d * (d + 2.0))}, {"m22", 1.0 / (d * (d + 2.0))}}}};
}

json cmd_gap(const json& c) {
  const GeneratorTuple s = parse_generators(c.at("generators"));
  const GapProfile p = gap_profile(s, static_cast<int>(get_long(c, "lmax", 1)),
                                   static_cast<int>(get_long(c, "powers", 1)));
  json recs = json::array();
  for (const auto& r : p.records)
    recs.push_back({{"degree", r.degree},
                    {"casimir", r.casimir},
                    {"norm", r.norm},
                    {"power_norm", r.power_norm},
                    {"gap", r.gap},
                    {"bound", r.bound},
                    {"inverse_norm", r.inverse_norm}});
  return {{"records", recs},
          {"d2", p.d2},
          {"alpha", p.alpha},
          {"violations", p.violations},
          {"tameness_max", p.tameness_max}};
}

json cmd_coboundary(const json& c) {
  const GeneratorTuple s = parse_generators(c.at("generators"));
  const int lmax = static_cast<int>(get_long(c, "lmax", 1));
  const double decay = get_double(c, "decay");
  Rng rng(get_seed(c, "seed"));
  std::normal_distribution<double> normal(0.0, 1.0);
  HarmonicCoeffs phi(lmax);
  for (int l = 0; l <= lmax; ++l)
    for (int m = -l; m <= l; ++m) phi(l, m) = normal(rng) * std::pow(1.0 + casimir(l), -0.5 * decay);
  std::vector<HarmonicBlock> blocks(lmax + 1);
  for (int l = 0; l <= lmax; ++l) blocks[l] = make_block(s, l);
  const HarmonicCoeffs psi = solve_coboundary(blocks, phi);
  return {{"phi", vec_json(phi.coeffs())},
          {"psi", vec_json(psi.coeffs())},
          {"residual", coboundary_residual(blocks, psi, phi)},
          {"phi_h1", std::sqrt(phi.hs_norm_sq(1.0))},
          {"psi_h1", std::sqrt(psi.hs_norm_sq(1.0))}};
}

json cmd_lyapunov(const json& c) {
  const SystemSpec sys = parse_system(require(c, "system"));
  LyapunovOptions opt;
  opt.batches = static_cast<int>(get_long(c, "batches", 1));
  opt.burn_in = get_long(c, "burn_in", 0);
  opt.trace_every = get_long(c, "trace_every", 0);
  const LyapunovSpectrum sp =
      lyapunov_spectrum(sys.maps(), x0_from(c, sys.ambient()), get_long(c, "steps", 1), get_seed(c, "seed"), opt);
  const std::string trace = c.at("trace").get<std::string>();
  if (!trace.empty()) {
    std::ostringstream csv;
    csv.precision(17);
    csv << "step";
    for (int k = 0; k < sp.exponents.size(); ++k) csv << ",lambda" << k + 1;
    csv << "\n";
    for (const auto& [step, v] : sp.trace) {
      csv << step;
      for (int k = 0; k < v.size(); ++k) csv << "," << v(k);
      csv << "\n";
    }
    write_text(trace, csv.str());
  }
  return {{"exponents", vec_json(sp.exponents)},
          {"standard_errors", vec_json(sp.standard_errors)},
          {"partial_sums", vec_json(sp.partial_sums)},
          {"partial_sum_se", vec_json(sp.partial_sum_se)},
          {"logdet_average", sp.logdet_average(0)},
          {"n_steps", sp.n_steps},
          {"max_norm_drift", sp.max_norm_drift}};
}

json cmd_strain(const json& c) {
  const SystemSpec sys = parse_system(require(c, "system"));
  json maps = json::array();
  for (const auto& f : sys.maps()) {
    const StrainNorms n = strain_norms(*f, get_long(c, "nquad", 2), get_seed(c, "seed"));
    maps.push_back({{"h0_sq", estimate(n.h0_sq)},
                    {"h0_e_c_sq", estimate(n.h0_e_c_sq)},
                    {"h0_e_nc_sq", estimate(n.h0_e_nc_sq)},
                    {"sup", n.sup}});
  }
  return {{"maps", maps}};
}

json cmd_grassmann(const json& c) {
  const int d = static_cast<int>(get_long(c, "dim", 1));
  const int r = static_cast<int>(get_long(c, "rank", 1));
  if (r > d) throw ConfigInvalid("rank", "must satisfy 1 <= r <= dim");
  const double norm = get_double(c, "norm");
  const long count = get_long(c, "count", 1), samples = get_long(c, "samples", 2);
  const std::uint64_t seed = get_seed(c, "seed");
  json rows = json::array();
  int within = 0;
  for (long k = 0; k < count; ++k) {
    Rng rng(split_seed(seed, static_cast<std::uint64_t>(k)));
    Mat l = gaussian_matrix(d, d, rng);
    l *= norm / l.norm();
    const McEstimate mc = lambda_r_mc(l, r, samples, split_seed(seed ^ 0x6d63ULL, static_cast<std::uint64_t>(k)));
    const double taylor = lambda_r_taylor(l, r);
    const double err = std::abs(mc.value - taylor);
    const bool ok = err <= 5.0 * norm * norm * norm + 3.0 * mc.se;
    within += ok;
    rows.push_back({{"taylor", taylor}, {"mc", estimate(mc)}, {"error", err}, {"within_bound", ok}});
  }
  return {{"instances", rows}, {"within_bound", within}, {"count", count}};
}

json cmd_kam_step(const json& c) {
  const SystemSpec sys = parse_system(require(c, "system"));
  KamOptions opt;
  opt.derivative_panel = static_cast<int>(get_long(c, "derivative_panel", 0));
  opt.strain_quad = get_long(c, "strain_quad", 2);
  const KamStepResult r =
      kam_step(sys.maps(), sys.generators, get_double(c, "lambda"), static_cast<int>(get_long(c, "lmax", 1)), opt);
  json rot = json::array();
  for (const auto& g : r.rotations) rot.push_back(matrix_to_json(g.mat()));
  json out = step_json(r.report);
  out["rotations_after"] = rot;
  return out;
}

Schedule parse_schedule(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      v.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigInvalid("schedule", "expected N,ALPHA,TAU,STEPS");
    }
  }
  if (v.size() != 4 || v[3] != std::floor(v[3])) throw ConfigInvalid("schedule", "expected N,ALPHA,TAU,STEPS");
  return Schedule(v[0], v[1], v[2], static_cast<int>(v[3]));
}

json cmd_kam_run(const json& c) {
  const SystemSpec sys = parse_system(require(c, "system"));
  const Schedule sched = parse_schedule(c.at("schedule").get<std::string>());
  KamOptions opt;
  opt.derivative_panel = static_cast<int>(get_long(c, "derivative_panel", 0));
  opt.strain_quad = get_long(c, "strain_quad", 2);
  const KamRun run = kam_run(sys.maps(), sys.generators, sched, static_cast<int>(get_long(c, "lmax", 1)), opt);
  json steps = json::array();
  for (const auto& s : run.steps) steps.push_back(step_json(s));
  const std::string trace = c.at("trace").get<std::string>();
  if (!trace.empty()) {
    std::ostringstream csv;
    csv.precision(17);
    csv << "step,eps0,eps2,strainH0,dist_R\n";
    for (std::size_t k = 0; k < run.steps.size(); ++k) {
      const auto& s = run.steps[k];
      double strain = 0.0, shift = 0.0;
      for (double v : s.strain_after) strain = std::max(strain, v);
      for (double v : s.rotation_shift) shift = std::max(shift, v);
      csv << k + 1 << "," << s.after_max.c0 << "," << s.after_max.c2 << "," << strain << "," << shift << "\n";
    }
    write_text(trace, csv.str());
  }
  json lambdas = json::array();
  for (int k = 0; k < sched.steps; ++k) lambdas.push_back(sched.lambda(k));
  return {{"steps", steps},
          {"eps0_trace", run.eps0_trace},
          {"lambdas", lambdas},
          {"stagnated", run.stagnated},
          {"halted_error", run.halted_error},
          {"halted_degree", run.halted_degree}};
}

json cmd_symmetry(const json& c) {
  const SystemSpec sys = parse_system(require(c, "system"));
  const SymmetryReport s = top_bottom_symmetry(sys.maps(), get_long(c, "steps", 1), get_seed(c, "seed"),
                                               x0_from(c, sys.ambient()), static_cast<int>(get_long(c, "batches", 1)));
  json out = {{"lambda1", s.lambda1},      {"lambda_d", s.lambda_d}, {"lambda_d_se", s.lambda_d_se},
              {"Lambda_d", s.big_lambda_d}, {"defect", s.defect},     {"defect_se", s.defect_se},
              {"d", s.d},                   {"trivial", s.trivial}};
  if (s.trivial) out["warning"] = "d = 2: the defect vanishes identically";
  return out;
}

json cmd_sk(const json& c) {
  const GeneratorTuple s = parse_generators(c.at("generators"));
  const json tj = require(c, "target");
  Mat target_m = tj.is_array() && !tj.empty() && tj[0].is_array() && tj[0][0].is_array() ? matrix_from_json(tj[0])
                                                                                            : matrix_from_json(tj);
  GroupElement target;
  try {
    target = GroupElement(target_m);
  } catch (const SingularInput& e) {
    throw ConfigInvalid("target", e.what());
  }
  const double eps = get_double(c, "epsilon");
  const EpsilonNet net = epsilon_net_bfs(s, get_double(c, "net_epsilon"), static_cast<int>(get_long(c, "net_max_len", 1)), true);
  json out = {{"net_size", net.size()}, {"net_radius", net.covering_radius()}, {"net_length", net.max_length()}};
  Word w;
  if (c.at("inverse_free").get<bool>()) {
    w = compile_without_inverses(target, s, eps, net);
  } else {
    const int depth = static_cast<int>(get_long(c, "depth", 0));
    out["distance_trace"] = solovay_kitaev_trace(target, net, depth);
    w = solovay_kitaev(target, net, depth);
  }
  out["letters"] = rle_letters(w);
  out["length"] = w.length();
  out["distance"] = so3_distance(target.mat(), w.value().mat());
  out["inverse_free"] = w.inverse_free();
  out["balanced"] = w.balanced();
  return out;
}

using Handler = json (*)(const json&);
const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> h = {
      {"moments", cmd_moments},   {"gap", cmd_gap},         {"coboundary", cmd_coboundary},
      {"lyapunov", cmd_lyapunov}, {"strain", cmd_strain},   {"grassmann-check", cmd_grassmann},
      {"kam-step", cmd_kam_step}, {"kam-run", cmd_kam_run}, {"symmetry", cmd_symmetry},
      {"sk-compile", cmd_sk}};
  return h;
}

}  // namespace

json normalize_config(const json& config) {
  if (!config.is_object() || !config.contains("command") || !config["command"].is_string())
    throw ConfigInvalid("command", "missing");
  const std::string cmd = config["command"].get<std::string>();
  const auto it = defaults().find(cmd);
  if (it == defaults().end()) throw ConfigInvalid("command", "unknown command '" + cmd + "'");
  json out = it->second;
  for (const auto& [key, val] : config.items()) {
    if (key == "command" || key == "threads") continue;
    if (!out.contains(key)) throw ConfigInvalid(key, "unknown field for " + cmd);
    out[key] = val;
  }
  // Inline referenced files so the embedded config is self-contained.
  if (out.contains("system") && out["system"].is_string())
    out["system"] = load_json_file(out["system"].get<std::string>(), "system");
  if (out.contains("generators") && out["generators"].is_string() && out["generators"] != "reference")
    out["generators"] = matrices_json(out["generators"].get<std::string>(), "generators");
  if (out.contains("target") && out["target"].is_string())
    out["target"] = matrices_json(out["target"].get<std::string>(), "target");
  out["command"] = cmd;
  out["threads"] = config.value("threads", 0);
  return out;
}

json run_command(const json& config) {
  json cfg = normalize_config(config);
  const int threads = cfg["threads"].get<int>();
  if (threads > 0) setenv("ISOKAM_THREADS", std::to_string(threads).c_str(), 1);
  json result;
  try {
    result = handlers().at(cfg["command"].get<std::string>())(cfg);
  } catch (const json::exception& e) {
    throw ConfigInvalid("config", e.what());
  }
  return {{"command", cfg["command"]}, {"config", cfg}, {"result", result}, {"version", kVersion}};
}

namespace {

json parse_cli_value(const std::string& text, const json& def) {
  if (def.is_string()) return text;
  if (def.is_boolean()) return text == "true" || text == "1";
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    if (def.is_null()) return text;  // e.g. a file path
    throw ConfigInvalid("option", "cannot parse '" + text + "'");
  }
}

std::string dashed(std::string s) {
  for (auto& ch : s)
    if (ch == '_') ch = '-';
  return s;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"isokam: numerics for random isometric systems on spheres"};
  app.require_subcommand(1);
  std::string out_path;
  int threads = 0;
  app.add_option("--out", out_path, "write the JSON output to this file");
  app.add_option("--threads", threads, "worker threads (default: ISOKAM_THREADS or all cores)");
  app.set_version_flag("--version", kVersion);

  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, std::map<std::string, bool>> flags;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [cmd, def] : defaults()) {
    CLI::App* sub = app.add_subcommand(cmd, describe(cmd));
    subs[cmd] = sub;
    for (const auto& [key, val] : def.items()) {
      const std::string name = "--" + dashed(key);
      if (val.is_boolean()) {
        sub->add_flag(name, flags[cmd][key]);
      } else {
        sub->add_option(name, values[cmd][key])
            ->type_name(val.is_string() ? "TEXT" : val.is_null() ? "FILE|JSON" : "VALUE")
            ->default_str(val.is_null() ? "required" : val.is_string() ? val.get<std::string>() : val.dump());
      }
    }
  }
  std::string replay_path;
  CLI::App* replay = app.add_subcommand("replay", "re-run from a config or a previous output file");
  replay->add_option("file", replay_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    json config;
    if (replay->parsed()) {
      json j = load_json_file(replay_path, "replay");
      config = j.contains("config") ? j["config"] : j;
    } else {
      for (const auto& [cmd, sub] : subs) {
        if (!sub->parsed()) continue;
        config["command"] = cmd;
        const json& def = defaults().at(cmd);
        for (const auto& [key, text] : values[cmd])
          if (sub->count("--" + dashed(key)) > 0) config[key] = parse_cli_value(text, def[key]);
        for (const auto& [key, on] : flags[cmd])
          if (on) config[key] = true;
      }
    }
    if (threads > 0) config["threads"] = threads;
    const std::string text = run_command(config).dump(2) + "\n";
    if (out_path.empty()) {
      out << text;
    } else {
      std::ofstream f(out_path);
      if (!f) throw ConfigInvalid("out", "cannot write " + out_path);
      f << text;
    }
    return kExitOk;
  } catch (const ConfigInvalid& e) {
    err << json({{"error", e.name()}, {"field", e.field()}, {"message", e.what()}}).dump() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    err << json({{"error", e.name()}, {"message", e.what()}}).dump() << "\n";
    return kExitDomain;
  } catch (const std::exception& e) {
    err << json({{"error", "InternalError"}, {"message", e.what()}}).dump() << "\n";
    return kExitDomain;
  }
}

}  // namespace isokam
