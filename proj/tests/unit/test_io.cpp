#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "meevc/io.hpp"

using namespace meevc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const char* name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const char* name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

PhysicsConfig turbidity() { return PhysicsConfig{}; }

TimeConfig time_cfg() {
  TimeConfig t;
  t.dt = 1e-3;
  return t;
}

/// Values of the named VTK array, in file order.
std::vector<double> vtk_array(const std::string& text, const std::string& header, std::size_t count) {
  std::istringstream in(text.substr(text.find(header) + header.size()));
  std::string skip;
  if (header.rfind("SCALARS", 0) == 0) std::getline(in, skip), std::getline(in, skip);
  std::vector<double> out(count);
  for (double& v : out) in >> v;
  return out;
}

}  // namespace

TEST_CASE("number formatting round trips") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(gen) * std::pow(10.0, static_cast<int>(gen() % 40) - 20);
    CHECK(parse_exact(format_exact(v)) == v);
    CHECK(std::strtod(format_value(v).c_str(), nullptr) == v);
  }
  for (double v : {0.0, -0.0, 1e-310, std::numeric_limits<double>::max(), 0.1})
    CHECK(parse_exact(format_exact(v)) == v);
  CHECK(format_value(0.1) == "0.10000000000000001");
  CHECK(format_value(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK_THROWS_AS(parse_exact("1.5x"), IoError);
  CHECK_THROWS_AS(parse_exact(""), IoError);
}

TEST_CASE("CSV header, rows and truncation") {
  TempDir dir("meevc_io_csv");
  CHECK(csv_header() ==
        "step,t,K,Ep,eps_v,eps_s,Ev,Es,E_res,enstrophy,total_vorticity,m_p_ratio,mdot_s,x_f,phi_min,phi_max,div_inf");
  LedgerRow r;
  r.x_f = std::numeric_limits<double>::quiet_NaN();
  {
    CsvWriter w(dir.file("d.csv"), false);
    for (long k = 1; k <= 5; ++k) {
      r.step = k;
      r.t = 1e-3 * static_cast<double>(k);
      w.write(r);
    }
  }
  auto l = lines(slurp(dir.file("d.csv")));
  REQUIRE(l.size() == 6);
  CHECK(l[0] == csv_header());
  CHECK(l[3].rfind("3,0.0030000000000000001,0,", 0) == 0);
  CHECK(l[3].find(",nan,") != std::string::npos);
  CHECK(std::count(l[5].begin(), l[5].end(), ',') == 16);

  truncate_csv(dir.file("d.csv"), 2);
  CHECK(lines(slurp(dir.file("d.csv"))).size() == 3);
  {
    CsvWriter w(dir.file("d.csv"), true);
    r.step = 3;
    r.t = 3e-3;
    w.write(r);
  }
  l = lines(slurp(dir.file("d.csv")));
  REQUIRE(l.size() == 4);
  CHECK(l[3].rfind("3,", 0) == 0);

  std::ofstream(dir.file("bad.csv")) << "step,t\n1,0\n";
  CHECK_THROWS_AS(truncate_csv(dir.file("bad.csv"), 0), IoError);
  CHECK_THROWS_AS(CsvWriter((dir.path / "no" / "such" / "x.csv").string(), false), IoError);
}

TEST_CASE("VTK of a two-cell zero state") {
  TempDir dir("meevc_io_vtk");
  const auto mesh = std::make_shared<const Mesh>(build_channel_mesh({1.0, 1.0, 0.5}, 1, 1, DiagonalPattern::Left));
  Stepper s(mesh, 1, turbidity(), time_cfg());
  SimulationState st = s.initial_fields({});
  st.phi.coeffs.setZero();
  write_vtk(dir.file("z.vtk"), st, 0.0);
  const std::string text = slurp(dir.file("z.vtk"));
  CHECK(text.find("DATASET UNSTRUCTURED_GRID") != std::string::npos);
  CHECK(text.find("POINTS 4 double") != std::string::npos);
  CHECK(text.find("CELLS 2 8") != std::string::npos);
  CHECK(text.find("CELL_TYPES 2\n5\n5\n") != std::string::npos);
  CHECK(text.find("centroids") != std::string::npos);
  for (const char* name : {"SCALARS phi", "SCALARS omega double", "SCALARS omega_tilde"})
    for (double v : vtk_array(text, name, 4)) CHECK(v == 0.0);
  for (double v : vtk_array(text, "SCALARS pressure", 2)) CHECK(v == 0.0);
  for (double v : vtk_array(text, "VECTORS velocity double\n", 6)) CHECK(v == 0.0);
}

TEST_CASE("VTK snapshot of the initial lock") {
  TempDir dir("meevc_io_lock");
  const auto mesh = std::make_shared<const Mesh>(build_channel_mesh({13.0, 1.0, 1.0}, 104, 4, DiagonalPattern::Right));
  Stepper s(mesh, 2, turbidity(), time_cfg());
  const SimulationState st = s.initial_fields({});
  write_vtk(dir.file("lock.vtk"), st, 0.0);
  const std::string text = slurp(dir.file("lock.vtk"));
  CHECK(text.find("CELLS " + std::to_string(mesh->num_cells()) + " ") != std::string::npos);
  const double d = s.interface_width({});
  const auto phi = vtk_array(text, "SCALARS phi", mesh->num_points());
  int left = 0, right = 0;
  for (Mesh::Index p = 0; p < mesh->num_points(); ++p) {
    const double x = mesh->point(p).x;
    if (x < -2.0 * d) {
      ++left;
      CHECK(phi[p] == doctest::Approx(1.0).epsilon(0.05));
    } else if (x > 2.0 * d) {
      ++right;
      CHECK(std::abs(phi[p]) < 0.05);
    }
  }
  CHECK(left > 0);
  CHECK(right > 0);
}

TEST_CASE("checkpoints are lossless and reject mismatches") {
  TempDir dir("meevc_io_chk");
  const auto mesh = std::make_shared<const Mesh>(build_channel_mesh({13.0, 1.0, 1.0}, 13, 2, DiagonalPattern::Left));
  Stepper s(mesh, 2, turbidity(), time_cfg());
  SimulationState st = s.initialize({});
  for (int k = 0; k < 3; ++k) s.step(st);
  const LedgerTotals totals{1.0 / 3.0, 2e-17, 0.4999, 1e-9, 1.0000000000000002, -3e-5};
  write_checkpoint(dir.file("c.chk"), st, 0.003, totals);
  CHECK_FALSE(fs::exists(dir.file("c.chk.tmp")));
  const Checkpoint cp = read_checkpoint(dir.file("c.chk"), s);
  CHECK(cp.state.k == 3);
  CHECK(cp.t == 0.003);
  CHECK(cp.totals.Ev == totals.Ev);
  CHECK(cp.totals.buoyancy0 == totals.buoyancy0);
  CHECK(cp.totals.mass0 == totals.mass0);
  for (auto [a, b] : {std::pair{&cp.state.u_half, &st.u_half}, {&cp.state.u_prev_half, &st.u_prev_half},
                      {&cp.state.omega, &st.omega}, {&cp.state.omega_tilde, &st.omega_tilde},
                      {&cp.state.p_bar, &st.p_bar}, {&cp.state.phi, &st.phi}, {&cp.state.phi_prev, &st.phi_prev}}) {
    CHECK(a->space == b->space);
    CHECK(a->coeffs == b->coeffs);
  }

  // continuing from the restored state is bitwise identical
  SimulationState restored = cp.state;
  s.step(st);
  s.step(restored);
  CHECK(restored.u_half.coeffs == st.u_half.coeffs);
  CHECK(restored.phi.coeffs == st.phi.coeffs);

  Stepper other_degree(mesh, 1, turbidity(), time_cfg());
  CHECK_THROWS_WITH_AS(read_checkpoint(dir.file("c.chk"), other_degree), doctest::Contains("degree"), IoError);
  Stepper other_mesh(std::make_shared<const Mesh>(build_channel_mesh({13.0, 1.0, 1.0}, 14, 2, DiagonalPattern::Left)), 2,
                     turbidity(), time_cfg());
  CHECK_THROWS_WITH_AS(read_checkpoint(dir.file("c.chk"), other_mesh), doctest::Contains("dimensions"), IoError);
  PhysicsConfig hom;
  hom.mode = Mode::Homogeneous;
  Stepper periodic(std::make_shared<const Mesh>(build_periodic_rect_mesh(1.0, 1.0, 3, 3)), 2, hom, time_cfg());
  CHECK_THROWS_WITH_AS(read_checkpoint(dir.file("c.chk"), periodic), doctest::Contains("mode"), IoError);

  std::string text = slurp(dir.file("c.chk"));
  std::ofstream(dir.file("cut.chk")) << text.substr(0, text.size() / 2);
  CHECK_THROWS_AS(read_checkpoint(dir.file("cut.chk"), s), IoError);
  std::ofstream(dir.file("v2.chk")) << "meevc-checkpoint 2\n" << text.substr(text.find('\n') + 1);
  CHECK_THROWS_WITH_AS(read_checkpoint(dir.file("v2.chk"), s), doctest::Contains("version"), IoError);
  CHECK_THROWS_AS(read_checkpoint(dir.file("absent.chk"), s), IoError);
}
