#include "blochfem/field_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace blochfem {

using Eigen::Index;

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open " + tmp.string() + " for writing");
    os << content;
    if (!os.flush()) throw Error("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string field_dump(const NodalField& field) {
  const Mesh& m = field.mesh();
  std::ostringstream os;
  os << "# blochfem-field v" << kFieldFormatVersion << ' ' << m.dim() << ' ' << m.level() << ' ';
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.17g\n", m.height());
  os << buf;
  for (Index n = 0; n < m.node_count(); ++n) {
    const Point x = m.node_point(n);
    const Complex v = field[n];
    if (m.dim() == 2)
      std::snprintf(buf, sizeof buf, "%.9e %.9e %.12e %.12e\n", x[0], x[1], v.real(), v.imag());
    else
      std::snprintf(buf, sizeof buf, "%.9e %.9e %.9e %.12e %.12e\n", x[0], x[1], x[2], v.real(), v.imag());
    os << buf;
  }
  return os.str();
}

NodalField parse_field(const std::string& text) {
  std::istringstream is(text);
  std::string hash, tag, version;
  int d = 0, M = 0;
  Real R = 0.0;
  is >> hash >> tag >> version >> d >> M >> R;
  if (!is || hash != "#" || tag != "blochfem-field") throw ConfigError("field file: bad header");
  if (version != "v" + std::to_string(kFieldFormatVersion)) throw ConfigError("field file: unsupported version");
  auto mesh = std::make_shared<const Mesh>(d, R, M);
  NodalField f(mesh);
  for (Index n = 0; n < mesh->node_count(); ++n) {
    Real x, re, im;
    for (int k = 0; k < d; ++k) is >> x;
    is >> re >> im;
    if (!is) throw ConfigError("field file: truncated");
    f.values()[n] = Complex(re, im);
  }
  return f;
}

std::string measurement_dump(const MeasurementData& data) {
  std::ostringstream os;
  const Index n = data.fields.empty() ? 0 : data.fields.front().size();
  char buf[160];
  std::snprintf(buf, sizeof buf, "# blochfem-measurement v%d %s %zu %lld %.17g %llu\n", kFieldFormatVersion,
                data.mode == MeasurementMode::Volume ? "volume" : "trace", data.fields.size(),
                static_cast<long long>(n), data.epsilon, static_cast<unsigned long long>(data.seed));
  os << buf;
  for (size_t f = 0; f < data.fields.size(); ++f)
    for (Index i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof buf, "%zu %lld %.17e %.17e\n", f, static_cast<long long>(i), data.fields[f][i].real(),
                    data.fields[f][i].imag());
      os << buf;
    }
  return os.str();
}

MeasurementData parse_measurement(const std::string& text) {
  std::istringstream is(text);
  std::string hash, tag, version, mode;
  size_t count = 0;
  long long n = 0;
  MeasurementData d;
  unsigned long long seed = 0;
  is >> hash >> tag >> version >> mode >> count >> n >> d.epsilon >> seed;
  if (!is || hash != "#" || tag != "blochfem-measurement") throw ConfigError("measurement file: bad header");
  if (version != "v" + std::to_string(kFieldFormatVersion)) throw ConfigError("measurement file: unsupported version");
  if (mode == "volume")
    d.mode = MeasurementMode::Volume;
  else if (mode == "trace")
    d.mode = MeasurementMode::Trace;
  else
    throw ConfigError("measurement file: unknown mode " + mode);
  d.seed = seed;
  d.fields.assign(count, CVector::Zero(n));
  for (size_t f = 0; f < count; ++f)
    for (long long i = 0; i < n; ++i) {
      size_t ff;
      long long ii;
      Real re, im;
      is >> ff >> ii >> re >> im;
      if (!is || ff != f || ii != i) throw ConfigError("measurement file: malformed body");
      d.fields[f][i] = Complex(re, im);
    }
  return d;
}

}  // namespace blochfem
