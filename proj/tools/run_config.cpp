#include "run_config.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <set>

#include "blochfem/field_io.hpp"
#include "blochfem/reduced_model.hpp"

namespace blochfem::app {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
}

template <class T>
T get(const json& j, const std::string& key, const std::string& where, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

Complex parse_complex(const json& v, const std::string& where) {
  if (v.is_number()) return Complex(v.get<Real>(), 0.0);
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return Complex(v[0].get<Real>(), v[1].get<Real>());
  throw ConfigError(where + ": expected a number or [re, im]");
}

json complex_json(Complex c) { return json::array({c.real(), c.imag()}); }

Point parse_point(const json& v, int d, const std::string& where) {
  if (!v.is_array() || static_cast<int>(v.size()) != d) throw ConfigError(where + ": expected " + std::to_string(d) + " coordinates");
  Point p = Point::Zero();
  for (int k = 0; k < d; ++k) {
    if (!v[k].is_number()) throw ConfigError(where + ": coordinates must be numbers");
    p[k] = v[k].get<Real>();
  }
  return p;
}

json point_json(const Point& p, int d) {
  json a = json::array();
  for (int k = 0; k < d; ++k) a.push_back(p[k]);
  return a;
}

RegionSpec parse_region(const json& j, int d, const std::string& where, const RegionSpec& fallback) {
  check_keys(j, where, {"default", "boxes"});
  RegionSpec s = fallback;
  if (j.contains("default")) s.default_value = parse_complex(j["default"], where + ".default");
  if (j.contains("boxes")) {
    if (!j["boxes"].is_array()) throw ConfigError(where + ".boxes: expected an array");
    s.boxes.clear();
    for (size_t i = 0; i < j["boxes"].size(); ++i) {
      const json& b = j["boxes"][i];
      const std::string w = where + ".boxes[" + std::to_string(i) + "]";
      check_keys(b, w, {"lo", "hi", "value"});
      if (!b.contains("lo") || !b.contains("hi") || !b.contains("value")) throw ConfigError(w + ": lo, hi and value required");
      Box box;
      box.lo = parse_point(b["lo"], d, w + ".lo");
      box.hi = parse_point(b["hi"], d, w + ".hi");
      box.value = parse_complex(b["value"], w + ".value");
      for (int k = 0; k < d; ++k)
        if (!(box.lo[k] < box.hi[k])) throw ConfigError(w + ": lo must be below hi");
      s.boxes.push_back(box);
    }
  }
  return s;
}

json region_json(const RegionSpec& s, int d) {
  json boxes = json::array();
  for (const Box& b : s.boxes)
    boxes.push_back({{"lo", point_json(b.lo, d)}, {"hi", point_json(b.hi, d)}, {"value", complex_json(b.value)}});
  return {{"default", complex_json(s.default_value)}, {"boxes", boxes}};
}

std::vector<int> parse_int_list(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ConfigError(where + ": expected a non-empty list");
  std::vector<int> out;
  for (const auto& x : v) {
    if (!x.is_number_integer()) throw ConfigError(where + ": entries must be integers");
    out.push_back(x.get<int>());
  }
  return out;
}

const char* mode_name(MeasurementMode m) { return m == MeasurementMode::Volume ? "volume" : "trace"; }

json to_json(const RunConfig& c) {
  const ProblemConfig& p = c.problem;
  const int d = p.d;
  json j;
  j["format_version"] = kManifestVersion;
  j["command"] = c.command;
  j["d"] = d;
  j["k"] = p.k;
  j["R"] = p.R;
  j["R0"] = p.R0;
  j["M"] = p.M;
  j["N"] = p.N;
  j["fourier_cutoff"] = p.J;
  j["transform"] = p.transform;
  j["material"] = {{"background", region_json(p.background, d)}, {"perturbation", region_json(p.perturbation, d)}};
  j["solver"] = {{"tolerance", p.solver.tolerance},
                 {"max_iterations", p.solver.max_iterations},
                 {"restart", p.solver.restart},
                 {"block_solver", p.solver.block_solver == BlockSolverKind::Direct ? "direct" : "ilu"},
                 {"inner_factor", p.solver.inner_factor},
                 {"inner_max_iterations", p.solver.inner_max_iterations}};
  j["source"] = {{"case", c.source_case}};
  j["table"] = {{"M_list", c.M_list}, {"N_list", c.N_list}};
  const InverseSettings& iv = c.inverse;
  j["inverse"] = {{"regions", {iv.nx, iv.nz}},
                  {"mode", mode_name(iv.mode)},
                  {"epsilon", iv.epsilon},
                  {"seed", iv.seed},
                  {"model", iv.model},
                  {"data", iv.data},
                  {"mu_start", iv.reginn.mu_start},
                  {"gamma", iv.reginn.gamma},
                  {"mu_max", iv.reginn.mu_max},
                  {"tau", iv.reginn.tau},
                  {"max_outer", iv.reginn.max_outer},
                  {"max_inner", iv.reginn.max_inner},
                  {"fine", {{"M", iv.fine_M}, {"N", iv.fine_N}, {"fourier_cutoff", iv.fine_J}}}};
  j["workers"] = p.solver.workers;
  j["out"] = c.out;
  j["diagnostics"] = c.diagnostics;
  return j;
}

std::string timestamp() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

json manifest(const RunConfig& c, json results) {
  return {{"format_version", kManifestVersion},
          {"library_version", kLibraryVersion},
          {"command", c.command},
          {"created", timestamp()},
          {"config", c.resolved},
          {"results", std::move(results)}};
}

std::string path_in(const RunConfig& c, const std::string& name) {
  return (std::filesystem::path(c.out) / name).string();
}

ProblemConfig fine_problem(const RunConfig& c) {
  ProblemConfig f = c.problem;
  f.M = c.inverse.fine_M;
  f.N = c.inverse.fine_N;
  f.J = c.inverse.fine_J;
  return f;
}

void log(const RunConfig& c, const std::string& msg) {
  if (c.diagnostics) std::cerr << "[blochfem] " << msg << '\n';
}

int run_direct(const RunConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  ForwardSolver solver(c.problem);
  const ManufacturedCase mc = manufactured_case(c.source_case, solver.material());
  const BlochSolution sol = solver.solve(mc.source);
  const Real err = relative_l2_error(sol.field, mc.exact);
  const Real secs = std::chrono::duration<Real>(std::chrono::steady_clock::now() - t0).count();
  json blocks = json::array();
  for (const auto& s : sol.stats) blocks.push_back({{"block", s.block}, {"iterations", s.iterations}});
  if (c.diagnostics) {
    for (const auto& s : sol.stats) log(c, "block " + std::to_string(s.block) + " iterations " + std::to_string(s.iterations));
    log(c, "outer iterations " + std::to_string(sol.outer_iterations));
  }
  json res = {{"cells", solver.mesh()->cell_count()},
              {"N", c.problem.N},
              {"rel_l2_error", err},
              {"outer_iterations", sol.outer_iterations},
              {"outer_residual", sol.outer_residual},
              {"energy_balance", energy_balance(solver, sol)},
              {"seconds", secs},
              {"blocks", blocks}};
  write_atomic(path_in(c, "field.txt"), field_dump(sol.field));
  write_atomic(path_in(c, "manifest.json"), manifest(c, res).dump(2) + "\n");
  std::printf("rel_l2_error %.9e\n", err);
  return kOk;
}

int run_table(const RunConfig& c) {
  const auto rows = convergence_table(c.problem, c.source_case, c.M_list, c.N_list);
  const std::string csv = table_csv(rows);
  json res = json::array();
  for (const auto& r : rows) res.push_back({{"cells", r.cells}, {"N", r.N}, {"rel_l2_error", r.rel_l2_error}, {"seconds", r.seconds}});
  write_atomic(path_in(c, "table.csv"), csv);
  write_atomic(path_in(c, "manifest.json"), manifest(c, {{"rows", res}}).dump(2) + "\n");
  std::cout << csv;
  return kOk;
}

RhsBasis basis_of(const RunConfig& c) {
  return make_rhs_basis(c.problem.d, c.problem.R0, c.inverse.nx, c.inverse.nz);
}

int run_synth(const RunConfig& c) {
  const auto mesh = c.problem.mesh();
  const RhsBasis basis = basis_of(c);
  log(c, "solving " + std::to_string(basis.regions_count()) + " fine problems");
  const auto states = synthetic_states(fine_problem(c), c.problem, basis);
  const MeasurementData clean = measurement_from_states(states, *mesh, c.inverse.mode);
  const MeasurementSpace space(mesh, c.inverse.mode, basis.size());
  const MeasurementData noisy = add_noise(clean, space, c.inverse.epsilon, c.inverse.seed);
  const Real cn = space.norm(clean.stacked());
  const Real realized = cn > 0.0 ? space.norm(CVector(noisy.stacked() - clean.stacked())) / cn : 0.0;
  write_atomic(path_in(c, "data.txt"), measurement_dump(noisy));
  json res = {{"fields", noisy.fields.size()},
              {"field_size", noisy.fields.empty() ? 0 : noisy.fields.front().size()},
              {"clean_norm", cn},
              {"relative_noise", realized}};
  write_atomic(path_in(c, "manifest.json"), manifest(c, res).dump(2) + "\n");
  std::printf("relative_noise %.6e\n", realized);
  return kOk;
}

int run_invert(const RunConfig& c) {
  const RhsBasis basis = basis_of(c);
  auto solver = std::make_shared<ForwardSolver>(c.problem);
  std::unique_ptr<MeasurementModel> model;
  if (c.inverse.model == "dense")
    model = std::make_unique<DenseReducedModel>(solver, basis, c.inverse.mode, c.problem.R0);
  else
    model = std::make_unique<IterativeModel>(solver, basis, c.inverse.mode, c.problem.R0);

  MeasurementData data;
  if (!c.inverse.data.empty()) {
    data = parse_measurement(read_file(c.inverse.data));
    if (data.mode != c.inverse.mode) throw ConfigError("measurement file mode differs from inverse.mode");
  } else {
    log(c, "synthesising data");
    const auto states = synthetic_states(fine_problem(c), c.problem, basis);
    data = add_noise(measurement_from_states(states, *solver->mesh(), c.inverse.mode), model->space(),
                     c.inverse.epsilon, c.inverse.seed);
  }
  const CVector y = data.stacked();
  if (y.size() != model->data_size()) throw ConfigError("measurement data do not match the configured mesh and basis");

  const auto t0 = std::chrono::steady_clock::now();
  const ReginnState st = reginn(*model, y, data.epsilon, CVector::Zero(model->parameter_size()), c.inverse.reginn,
                                [&](const ReginnState& s) {
                                  if (!c.diagnostics) return;
                                  char buf[160];
                                  std::snprintf(buf, sizeof buf, "outer %d residual %.6e target %.6e inner %d", s.outer,
                                                s.residual.back(), s.target, s.inner.empty() ? 0 : s.inner.back());
                                  log(c, buf);
                                });
  const Real secs = std::chrono::duration<Real>(std::chrono::steady_clock::now() - t0).count();
  const NodalField q = model->parameters().to_field(st.q);
  json res = {{"converged", st.converged},
              {"outer", st.outer},
              {"inner", st.inner},
              {"mu", st.mu},
              {"mu_tilde", st.mu_tilde},
              {"residual", st.residual},
              {"target", st.target},
              {"epsilon", data.epsilon},
              {"seed", data.seed},
              {"seconds", secs}};
  if (!c.problem.perturbation.boxes.empty() || c.problem.perturbation.default_value != 0.0)
    res["reconstruction_error"] = reconstruction_error(q, c.problem.perturbation);
  write_atomic(path_in(c, "q_rec.txt"), field_dump(q));
  write_atomic(path_in(c, "manifest.json"), manifest(c, res).dump(2) + "\n");
  if (res.contains("reconstruction_error"))
    std::printf("reconstruction_error %.6e\n", res["reconstruction_error"].get<Real>());
  std::printf("converged %s after %d outer steps\n", st.converged ? "yes" : "no", st.outer);
  return st.converged ? kOk : kNonConvergence;
}

}  // namespace

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json* node = &j;
  size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override '" + assignment + "' has an empty key segment");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

RunConfig parse_run_config(const json& j) {
  check_keys(j, "", {"format_version", "command", "d", "k", "R", "R0", "M", "N", "fourier_cutoff", "transform",
                     "material", "solver", "source", "table", "inverse", "workers", "out", "diagnostics"});
  if (j.contains("format_version") && get<int>(j, "format_version", "", 0) != kManifestVersion)
    throw ConfigError("unsupported format_version");
  RunConfig c;
  c.command = get<std::string>(j, "command", "", c.command);
  if (c.command != "direct" && c.command != "table" && c.command != "synth" && c.command != "invert")
    throw ConfigError("command must be one of direct, table, synth, invert");
  const int d = get<int>(j, "d", "", 2);
  if (d != 2 && d != 3) throw ConfigError("d must be 2 or 3");
  ProblemConfig& p = c.problem;
  p = example_config(d);
  p.k = get<Real>(j, "k", "", p.k);
  p.R = get<Real>(j, "R", "", p.R);
  p.R0 = get<Real>(j, "R0", "", p.R0);
  p.M = get<int>(j, "M", "", p.M);
  p.N = get<int>(j, "N", "", p.N);
  p.J = get<int>(j, "fourier_cutoff", "", p.J);
  p.transform = get<bool>(j, "transform", "", p.transform);
  if (j.contains("material")) {
    const json& m = j["material"];
    check_keys(m, "material", {"background", "perturbation"});
    if (m.contains("background")) p.background = parse_region(m["background"], d, "material.background", p.background);
    if (m.contains("perturbation"))
      p.perturbation = parse_region(m["perturbation"], d, "material.perturbation", p.perturbation);
  }
  if (j.contains("solver")) {
    const json& s = j["solver"];
    check_keys(s, "solver", {"tolerance", "max_iterations", "restart", "block_solver", "inner_factor",
                             "inner_max_iterations"});
    p.solver.tolerance = get<Real>(s, "tolerance", "solver", p.solver.tolerance);
    p.solver.max_iterations = get<int>(s, "max_iterations", "solver", p.solver.max_iterations);
    p.solver.restart = get<int>(s, "restart", "solver", p.solver.restart);
    p.solver.inner_factor = get<Real>(s, "inner_factor", "solver", p.solver.inner_factor);
    p.solver.inner_max_iterations = get<int>(s, "inner_max_iterations", "solver", p.solver.inner_max_iterations);
    const std::string bs = get<std::string>(s, "block_solver", "solver", "direct");
    if (bs == "direct")
      p.solver.block_solver = BlockSolverKind::Direct;
    else if (bs == "ilu")
      p.solver.block_solver = BlockSolverKind::IluGmres;
    else
      throw ConfigError("solver.block_solver must be direct or ilu");
  }
  p.solver.workers = get<int>(j, "workers", "", p.solver.workers);
  if (j.contains("source")) {
    check_keys(j["source"], "source", {"case"});
    c.source_case = get<std::string>(j["source"], "case", "source", c.source_case);
  } else if (d == 3) {
    c.source_case = "u3";
  }
  if (j.contains("table")) {
    const json& t = j["table"];
    check_keys(t, "table", {"M_list", "N_list"});
    if (t.contains("M_list")) c.M_list = parse_int_list(t["M_list"], "table.M_list");
    if (t.contains("N_list")) c.N_list = parse_int_list(t["N_list"], "table.N_list");
  }
  if (j.contains("inverse")) {
    const json& v = j["inverse"];
    check_keys(v, "inverse", {"regions", "mode", "epsilon", "seed", "model", "data", "mu_start", "gamma", "mu_max",
                              "tau", "max_outer", "max_inner", "fine"});
    InverseSettings& iv = c.inverse;
    if (v.contains("regions")) {
      const auto r = parse_int_list(v["regions"], "inverse.regions");
      if (r.size() != 2) throw ConfigError("inverse.regions must be [horizontal, vertical]");
      iv.nx = r[0];
      iv.nz = r[1];
    }
    const std::string mode = get<std::string>(v, "mode", "inverse", "volume");
    if (mode == "volume")
      iv.mode = MeasurementMode::Volume;
    else if (mode == "trace")
      iv.mode = MeasurementMode::Trace;
    else
      throw ConfigError("inverse.mode must be volume or trace");
    iv.epsilon = get<Real>(v, "epsilon", "inverse", iv.epsilon);
    iv.seed = get<std::uint64_t>(v, "seed", "inverse", iv.seed);
    iv.model = get<std::string>(v, "model", "inverse", iv.model);
    iv.data = get<std::string>(v, "data", "inverse", iv.data);
    iv.reginn.mu_start = get<Real>(v, "mu_start", "inverse", iv.reginn.mu_start);
    iv.reginn.gamma = get<Real>(v, "gamma", "inverse", iv.reginn.gamma);
    iv.reginn.mu_max = get<Real>(v, "mu_max", "inverse", iv.reginn.mu_max);
    iv.reginn.tau = get<Real>(v, "tau", "inverse", iv.reginn.tau);
    iv.reginn.max_outer = get<int>(v, "max_outer", "inverse", iv.reginn.max_outer);
    iv.reginn.max_inner = get<int>(v, "max_inner", "inverse", iv.reginn.max_inner);
    if (v.contains("fine")) {
      const json& f = v["fine"];
      check_keys(f, "inverse.fine", {"M", "N", "fourier_cutoff"});
      iv.fine_M = get<int>(f, "M", "inverse.fine", iv.fine_M);
      iv.fine_N = get<int>(f, "N", "inverse.fine", iv.fine_N);
      iv.fine_J = get<int>(f, "fourier_cutoff", "inverse.fine", iv.fine_J);
    }
  }
  c.out = get<std::string>(j, "out", "", c.out);
  c.diagnostics = get<bool>(j, "diagnostics", "", c.diagnostics);

  // Physical and structural checks before any computation.
  p.validate();
  p.material();
  if (c.command == "direct" || c.command == "table") {
    const bool ok = d == 2 ? (c.source_case == "u1" || c.source_case == "u2")
                           : (c.source_case == "u3" || c.source_case == "u4");
    if (!ok) throw ConfigError("source.case '" + c.source_case + "' is not available for d = " + std::to_string(d));
    for (int M : c.M_list)
      if (M < 1) throw ConfigError("table.M_list entries must be >= 1");
    for (int N : c.N_list)
      if (N < 1) throw ConfigError("table.N_list entries must be >= 1");
  }
  if (c.command == "synth" || c.command == "invert") {
    const InverseSettings& iv = c.inverse;
    if (iv.nx < 1 || iv.nz < 1) throw ConfigError("inverse.regions entries must be >= 1");
    if (!(iv.epsilon >= 0.0 && iv.epsilon < 1.0)) throw ConfigError("inverse.epsilon must lie in [0,1)");
    if (iv.model != "dense" && iv.model != "iterative") throw ConfigError("inverse.model must be dense or iterative");
    if (iv.model == "dense" && d != 2) throw ConfigError("inverse.model dense requires d = 2");
    if (iv.fine_M < p.M || iv.fine_N < p.N || iv.fine_J < p.J)
      throw ConfigError("inverse.fine must not be coarser than the problem discretisation");
    const ReginnConfig& r = iv.reginn;
    if (!(r.mu_start > 0.0 && r.mu_start < 1.0 && r.mu_max > 0.0 && r.mu_max < 1.0 && r.gamma > 0.0 &&
          r.gamma < 1.0 && r.tau > 1.0 && r.max_outer >= 1 && r.max_inner >= 1))
      throw ConfigError("inverse REGINN constants out of range");
    ProblemConfig f = p;
    f.M = iv.fine_M;
    f.N = iv.fine_N;
    f.J = iv.fine_J;
    f.validate();
  }
  c.resolved = to_json(c);
  return c;
}

int run(const RunConfig& c) {
  if (c.command == "direct") return run_direct(c);
  if (c.command == "table") return run_table(c);
  if (c.command == "synth") return run_synth(c);
  return run_invert(c);
}

int run_from_file(const std::string& path, const std::vector<std::string>& overrides, bool diagnostics,
                  int workers, const std::string& out) {
  try {
    json j;
    try {
      j = json::parse(read_file(path), nullptr, true, true);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    for (const auto& o : overrides) apply_override(j, o);
    if (diagnostics) j["diagnostics"] = true;
    if (workers > 0) j["workers"] = workers;
    if (!out.empty()) j["out"] = out;
    const RunConfig cfg = parse_run_config(j);
    return run(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const NonConvergence& e) {
    std::cerr << "non-convergence: " << e.what() << '\n';
    return kNonConvergence;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kSolverError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUnexpected;
  }
}

}  // namespace blochfem::app
