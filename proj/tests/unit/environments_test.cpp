#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "bapomcp/environments.hpp"

namespace bapomcp {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "bapomcp_env_test";
  fs::create_directories(dir);
  return dir / name;
}

TEST(DynamicFunction, PeakAtCycleEndpoints) {
  EXPECT_NEAR(dynamic_function(2.0, 3.5, 0.0), 1.0, 1e-12);
  EXPECT_NEAR(dynamic_function(2.0, 3.5, 1.0), 1.0, 1e-12);
}

TEST(DynamicFunction, ClosedFormOffPeak) {
  // Distance 0.7 along y from the t = 0 center: exp(-1).
  EXPECT_NEAR(dynamic_function(2.0, 2.8, 0.0), std::exp(-1.0), 1e-12);
  EXPECT_NEAR(dynamic_function(2.0, 2.0, 0.0), 0.010134227381485745, 1e-15);
}

TEST(DynamicFunction, PeriodTwelfth) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> uxy(0.0, 5.0), ut(0.0, 11.0 / 12.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = uxy(rng), y = uxy(rng), t = ut(rng);
    EXPECT_NEAR(dynamic_function(x, y, t), dynamic_function(x, y, t + 1.0 / 12.0), 1e-9);
  }
}

TEST(DynamicFunction, RangeAndDomain) {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> uxy(0.0, 5.0), ut(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double v = dynamic_function(uxy(rng), uxy(rng), ut(rng));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_THROW((void)dynamic_function(5.1, 1.0, 0.5), std::domain_error);
  EXPECT_THROW((void)dynamic_function(1.0, 1.0, -0.1), std::domain_error);
  EXPECT_THROW((void)dynamic_function(1.0, std::nan(""), 0.5), std::domain_error);
}

TEST(Neighbors, LatticeInteriorEdgeCorner) {
  const Workspace ws = Workspace::dynamic_field(0.25, 100);
  const MotionModel m = MotionModel::lattice();
  AgentState s;
  s.position = {2.5, 2.5, 0.0, 0.0};
  EXPECT_EQ(neighbors(s, ws, m).size(), 8u);
  s.position = {0.0, 0.0, 0.0, 0.0};
  const auto corner = neighbors(s, ws, m);
  ASSERT_EQ(corner.size(), 3u);
  for (const auto& a : corner) {
    EXPECT_GE(a.dx, 0.0);
    EXPECT_GE(a.dy, 0.0);
    EXPECT_LE(std::max(std::fabs(a.dx), std::fabs(a.dy)), 0.25 + 1e-12);
  }
  s.position = {0.0, 2.5, 0.0, 0.0};
  EXPECT_EQ(neighbors(s, ws, m).size(), 5u);
}

TEST(Neighbors, CompassAtSurface) {
  Workspace ws;
  ws.bounds.lo = {0.0, 0.0, 0.0, 0.0};
  ws.bounds.hi = {186.0, 210.0, 15.0, 1.0};
  ws.grid_resolution = 3.0;
  AgentState s;
  s.position = {93.0, 105.0, 0.0, 0.0};
  const auto acts = neighbors(s, ws, MotionModel::compass());
  EXPECT_EQ(acts.size(), 9u);
  for (const auto& a : acts) EXPECT_GE(a.dz, 0.0);
  s.position.z = 7.0;
  EXPECT_EQ(neighbors(s, ws, MotionModel::compass()).size(), 10u);
  EXPECT_EQ(neighbors(s, ws, MotionModel::compass(3.0, false)).size(), 8u);
}

TEST(Workspace, Validation) {
  Workspace ws = Workspace::dynamic_field();
  EXPECT_NO_THROW(ws.validate());
  ws.grid_resolution = 0.0;
  EXPECT_THROW(ws.validate(), std::invalid_argument);
  ws = Workspace::dynamic_field();
  ws.bounds.hi.x = ws.bounds.lo.x;
  EXPECT_THROW(ws.validate(), std::invalid_argument);
  ws = Workspace::dynamic_field();
  ws.horizon = 0;
  EXPECT_THROW(ws.validate(), std::invalid_argument);
}

TEST(EnvStep, MovesAndSamplesAtNextTime) {
  const Environment env = Environment::dynamic(0.25, 100);
  Rng rng(1);
  const auto acts = env.actions(env.start);
  const auto out = env.step(env.start, acts[0], rng);
  EXPECT_EQ(out.state.step_index, 1);
  const Point p = displaced(env.start.position, acts[0]);
  EXPECT_EQ(out.state.position.x, p.x);
  EXPECT_EQ(out.state.position.y, p.y);
  EXPECT_EQ(out.observation, dynamic_function(p.x, p.y, 0.01));
  EXPECT_NEAR(env.belief_point(out.state).t, 0.01, 1e-15);
}

TEST(EnvStep, IllegalActionRejected) {
  const Environment env = Environment::dynamic();
  Rng rng(1);
  EXPECT_THROW((void)env.step(env.start, Action{0.5, 0.0, 0.0}, rng), std::invalid_argument);
  AgentState corner;
  corner.position = {0.0, 0.0, 0.0, 0.0};
  EXPECT_THROW((void)env.step(corner, Action{-0.25, 0.0, 0.0}, rng), std::invalid_argument);
}

TEST(EnvStep, NoiseIsSeeded) {
  Environment env = Environment::dynamic();
  env.observation_noise_std = 0.1;
  const auto a = env.actions(env.start)[2];
  Rng r1(9), r2(9), r3(10);
  const double o1 = env.step(env.start, a, r1).observation;
  EXPECT_EQ(o1, env.step(env.start, a, r2).observation);
  EXPECT_NE(o1, env.step(env.start, a, r3).observation);
}

TEST(Environment, TerminalAtHorizon) {
  const Environment env = Environment::dynamic(0.25, 3);
  AgentState s = env.start;
  EXPECT_FALSE(env.terminal(s));
  s.step_index = 3;
  EXPECT_TRUE(env.terminal(s));
}

TEST(Dataset, SyntheticRoundTrip) {
  const auto path = scratch("synthetic.csv");
  EXPECT_EQ(write_synthetic_dataset(path, 4), 440u);
  const auto truth = load_grid_dataset(path, synthetic_dataset_kernel());
  EXPECT_EQ(truth.kind(), GroundTruth::Kind::kInterpolatedGrid);
  EXPECT_FALSE(truth.time_varying());
  EXPECT_EQ(truth.domain().lo.x, 0.0);
  EXPECT_EQ(truth.domain().hi.x, 186.0);
  EXPECT_EQ(truth.domain().hi.z, 15.0);

  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  const auto cells = detail::split_csv_line(line);
  const Point p{std::stod(cells[0]), std::stod(cells[1]), std::stod(cells[2]), 0.0};
  // Noiseless interpolant passes through the rows.
  EXPECT_NEAR(truth.evaluate(p, 0.0), std::stod(cells[3]), 1e-6);

  const auto same = scratch("synthetic_again.csv");
  write_synthetic_dataset(same, 4);
  std::ifstream a(path), b(same);
  EXPECT_EQ(std::string(std::istreambuf_iterator<char>(a), {}),
            std::string(std::istreambuf_iterator<char>(b), {}));
}

TEST(Dataset, MalformedInputs) {
  const auto bad_header = scratch("bad_header.csv");
  std::ofstream(bad_header) << "a,b,c,d\n1,2,3,4\n";
  EXPECT_THROW((void)load_grid_dataset(bad_header, synthetic_dataset_kernel()), std::runtime_error);
  const auto bad_cell = scratch("bad_cell.csv");
  std::ofstream(bad_cell) << "x,y,z,value\n1,2,3,abc\n";
  EXPECT_THROW((void)load_grid_dataset(bad_cell, synthetic_dataset_kernel()), std::runtime_error);
  const auto short_row = scratch("short_row.csv");
  std::ofstream(short_row) << "x,y,z,value\n1,2,3\n";
  EXPECT_THROW((void)load_grid_dataset(short_row, synthetic_dataset_kernel()), std::runtime_error);
  const auto empty = scratch("empty.csv");
  std::ofstream(empty) << "x,y,z,value\n";
  EXPECT_THROW((void)load_grid_dataset(empty, synthetic_dataset_kernel()), std::runtime_error);
  EXPECT_THROW((void)load_grid_dataset(scratch("missing.csv"), synthetic_dataset_kernel()),
               std::runtime_error);
}

TEST(ExportTruth, ThresholdFilter) {
  const auto path = scratch("slices.csv");
  SliceLattice lat;
  lat.nx = 11;
  lat.ny = 11;
  lat.nt = 3;
  const auto rows = export_truth_slices(GroundTruth::dynamic(), 0.6, path, lat);
  EXPECT_GT(rows, 0u);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x,y,t,value");
  std::size_t seen = 0;
  while (std::getline(in, line)) {
    const auto c = detail::split_csv_line(line);
    EXPECT_GE(std::stod(c[3]), 0.6);
    ++seen;
  }
  EXPECT_EQ(seen, rows);
  EXPECT_EQ(export_truth_slices(GroundTruth::dynamic(), 1.5, path, lat), 0u);
}

}  // namespace
}  // namespace bapomcp
