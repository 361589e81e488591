#include "meevc/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <vector>

namespace meevc {

namespace {

constexpr const char* kCheckpointFormat = "meevc-checkpoint";
constexpr int kCheckpointVersion = 1;

}  // namespace

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_exact(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw IoError("cannot format value");
  return std::string(buf, ptr);
}

double parse_exact(const std::string& text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) throw IoError("malformed number '" + text + "'");
  return v;
}

// ---------------------------------------------------------------------------

std::string csv_header() {
  std::string h;
  for (std::size_t i = 0; i < kLedgerColumns.size(); ++i) {
    if (i) h += ',';
    h += kLedgerColumns[i];
  }
  return h;
}

std::string csv_line(const LedgerRow& row) {
  const auto values = row_values(row);
  std::string line = std::to_string(row.step);
  for (std::size_t i = 1; i < values.size(); ++i) {
    line += ',';
    line += format_value(values[i]);
  }
  return line;
}

CsvWriter::CsvWriter(const std::string& path, bool append) : path_(path) {
  out_.open(path, append ? std::ios::app : std::ios::trunc);
  if (!out_) throw IoError("cannot open '" + path + "' for writing");
  if (!append) out_ << csv_header() << '\n' << std::flush;
}

void CsvWriter::write(const LedgerRow& row) {
  out_ << csv_line(row) << '\n' << std::flush;
  if (!out_) throw IoError("write to '" + path_ + "' failed");
}

void truncate_csv(const std::string& path, long k) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::string line, kept;
  if (!std::getline(in, line) || line != csv_header())
    throw IoError("'" + path + "' does not start with the diagnostics header");
  kept = line + '\n';
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    long step = 0;
    const auto [ptr, ec] = std::from_chars(line.data(), line.data() + comma, step);
    if (ec != std::errc() || ptr != line.data() + comma) throw IoError("malformed row in '" + path + "'");
    if (step > k) break;
    kept += line + '\n';
  }
  in.close();
  std::ofstream out(path, std::ios::trunc);
  out << kept;
  if (!out) throw IoError("cannot rewrite '" + path + "'");
}

// ---------------------------------------------------------------------------

void write_vtk(const std::string& path, const SimulationState& state, double t) {
  const FunctionSpace& W = *state.omega.space;
  const Mesh& mesh = W.mesh();
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "# vtk DataFile Version 3.0\n";
  out << "step " << state.k << " t " << format_exact(t)
      << "; velocity sampled at cell centroids (RT tangential components jump across edges)\n";
  out << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_points() << " double\n";
  for (Mesh::Index p = 0; p < mesh.num_points(); ++p)
    out << format_value(mesh.point(p).x) << ' ' << format_value(mesh.point(p).y) << " 0\n";
  out << "CELLS " << mesh.num_cells() << ' ' << 4 * mesh.num_cells() << '\n';
  for (Mesh::Index c = 0; c < mesh.num_cells(); ++c) {
    const auto& v = mesh.cell_points(c);
    out << "3 " << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
  }
  out << "CELL_TYPES " << mesh.num_cells() << '\n';
  for (Mesh::Index c = 0; c < mesh.num_cells(); ++c) out << "5\n";

  // CG vertex dofs are numbered by topological vertex
  auto point_scalars = [&](const char* name, const Field* f) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (Mesh::Index p = 0; p < mesh.num_points(); ++p) {
      const double v = f ? f->coeffs[static_cast<Eigen::Index>(mesh.vertex_of_point(p))] : 0.0;
      out << format_value(v) << '\n';
    }
  };
  out << "POINT_DATA " << mesh.num_points() << '\n';
  if (state.phi.space) point_scalars("phi", &state.phi);
  point_scalars("omega", &state.omega);
  point_scalars("omega_tilde", state.omega_tilde.space ? &state.omega_tilde : nullptr);

  out << "CELL_DATA " << mesh.num_cells() << '\n';
  out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
  const FunctionSpace& Q = *state.p_bar.space;
  const Vector qi = Q.basis_integrals();
  for (Mesh::Index c = 0; c < mesh.num_cells(); ++c) {
    double integral = 0.0;
    for (auto d : Q.cell_dofs(c))
      integral += qi[static_cast<Eigen::Index>(d)] * state.p_bar.coeffs[static_cast<Eigen::Index>(d)];
    out << format_value(integral / mesh.cell_area(c)) << '\n';
  }
  out << "VECTORS velocity double\n";
  for (Mesh::Index c = 0; c < mesh.num_cells(); ++c) {
    const Vec2 u = evaluate_vector_in_cell(state.u_half, c, Point{1.0 / 3.0, 1.0 / 3.0});
    out << format_value(u.x()) << ' ' << format_value(u.y()) << " 0\n";
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------

namespace {

void write_vector(std::ostream& out, const char* name, const Field& f) {
  out << "vector " << name << ' ' << f.coeffs.size() << '\n';
  for (Eigen::Index i = 0; i < f.coeffs.size(); ++i) out << format_exact(f.coeffs[i]) << '\n';
}

struct LineReader {
  std::istream& in;
  std::string path;
  long line = 0;

  std::string next() {
    std::string s;
    if (!std::getline(in, s)) fail("unexpected end of file");
    ++line;
    return s;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw IoError(path + ":" + std::to_string(line) + ": " + what);
  }
  std::vector<std::string> fields(const std::string& expected_tag, std::size_t count) {
    std::istringstream ls(next());
    std::vector<std::string> out;
    std::string tok;
    while (ls >> tok) out.push_back(tok);
    if (out.empty() || out[0] != expected_tag) fail("expected '" + expected_tag + "'");
    if (out.size() != count + 1) fail("wrong number of entries after '" + expected_tag + "'");
    return {out.begin() + 1, out.end()};
  }
};

long to_long(LineReader& r, const std::string& s) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) r.fail("malformed integer '" + s + "'");
  return v;
}

double to_double(LineReader& r, const std::string& s) {
  try {
    return parse_exact(s);
  } catch (const IoError& e) {
    r.fail(e.what());
  }
}

Field read_vector(LineReader& r, const char* name, const SpacePtr& space) {
  const auto f = r.fields("vector", 2);
  if (f[0] != name) r.fail(std::string("expected vector '") + name + "', found '" + f[0] + "'");
  const long n = to_long(r, f[1]);
  if (!space) {
    if (n != 0) r.fail(std::string("vector '") + name + "' is not used in this mode");
    return Field();
  }
  if (static_cast<std::size_t>(n) != space->dim())
    r.fail(std::string("vector '") + name + "' has " + std::to_string(n) + " entries, space dimension is " +
           std::to_string(space->dim()));
  Vector v(n);
  for (long i = 0; i < n; ++i) v[i] = to_double(r, r.next());
  return Field(space, std::move(v));
}

}  // namespace

void write_checkpoint(const std::string& path, const SimulationState& s, double t, const LedgerTotals& totals) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp + "' for writing");
    const FunctionSpace& U = *s.u_half.space;
    out << kCheckpointFormat << ' ' << kCheckpointVersion << '\n';
    out << "degree " << U.degree() << '\n';
    out << "mode " << (s.phi.space ? "turbidity" : "homogeneous") << '\n';
    out << "k " << s.k << '\n';
    out << "t " << format_exact(t) << '\n';
    out << "dims " << U.dim() << ' ' << s.omega.space->dim() << ' ' << s.p_bar.space->dim() << ' '
        << (s.phi.space ? s.phi.space->dim() : 0) << '\n';
    out << "totals " << format_exact(totals.Ev) << ' ' << format_exact(totals.Es) << ' '
        << format_exact(totals.Ep0) << ' ' << format_exact(totals.K_half0) << ' '
        << format_exact(totals.mass0) << ' ' << format_exact(totals.buoyancy0) << '\n';
    write_vector(out, "u_half", s.u_half);
    write_vector(out, "u_prev_half", s.u_prev_half);
    write_vector(out, "omega", s.omega);
    write_vector(out, "omega_tilde", s.omega_tilde);
    write_vector(out, "p_bar", s.p_bar);
    const Field empty;
    write_vector(out, "phi", s.phi.space ? s.phi : empty);
    write_vector(out, "phi_prev", s.phi_prev.space ? s.phi_prev : empty);
    out << "end\n";
    if (!out) throw IoError("write to '" + tmp + "' failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw IoError("cannot move checkpoint into '" + path + "'");
}

Checkpoint read_checkpoint(const std::string& path, const Stepper& stepper) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  LineReader r{in, path};
  const Spaces& sp = stepper.spaces();

  const auto head = r.fields(kCheckpointFormat, 1);
  if (to_long(r, head[0]) != kCheckpointVersion) r.fail("unsupported checkpoint version " + head[0]);
  const long degree = to_long(r, r.fields("degree", 1)[0]);
  if (degree != sp.U->degree())
    r.fail("checkpoint degree " + std::to_string(degree) + " differs from configured " +
           std::to_string(sp.U->degree()));
  const std::string mode = r.fields("mode", 1)[0];
  if (mode != to_string(stepper.physics().mode)) r.fail("checkpoint mode '" + mode + "' differs from configuration");

  Checkpoint cp;
  cp.state.k = to_long(r, r.fields("k", 1)[0]);
  if (cp.state.k < 0) r.fail("negative step index");
  cp.t = to_double(r, r.fields("t", 1)[0]);
  const auto dims = r.fields("dims", 4);
  const std::size_t expect[4] = {sp.U->dim(), sp.W->dim(), sp.Q->dim(), sp.Phi ? sp.Phi->dim() : 0};
  for (int i = 0; i < 4; ++i)
    if (static_cast<std::size_t>(to_long(r, dims[static_cast<std::size_t>(i)])) != expect[i])
      r.fail("space dimensions differ from the configured mesh and degree");
  const auto tot = r.fields("totals", 6);
  cp.totals = {to_double(r, tot[0]), to_double(r, tot[1]), to_double(r, tot[2]),
               to_double(r, tot[3]), to_double(r, tot[4]), to_double(r, tot[5])};
  cp.state.u_half = read_vector(r, "u_half", sp.U);
  cp.state.u_prev_half = read_vector(r, "u_prev_half", sp.U);
  cp.state.omega = read_vector(r, "omega", sp.W);
  cp.state.omega_tilde = read_vector(r, "omega_tilde", sp.W);
  cp.state.p_bar = read_vector(r, "p_bar", sp.Q);
  cp.state.phi = read_vector(r, "phi", sp.Phi);
  cp.state.phi_prev = read_vector(r, "phi_prev", sp.Phi);
  if (r.next() != "end") r.fail("missing end marker");
  return cp;
}

}  // namespace meevc
