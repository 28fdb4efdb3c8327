#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bapomcp/belief_gp.hpp"

namespace bapomcp {

using Rng = std::mt19937_64;

/// Time-varying test field: a Gaussian bump circling (2, 2) twelve times as t
/// goes from 0 to 1. Domain x, y in [0, 5], t in [0, 1]; range (0, 1].
inline double dynamic_function(double x, double y, double t) {
  if (!(x >= 0.0 && x <= 5.0) || !(y >= 0.0 && y <= 5.0) || !(t >= 0.0 && t <= 1.0)) {
    throw std::domain_error("dynamic_function: input outside [0,5]x[0,5]x[0,1]");
  }
  const double phase = 24.0 * std::numbers::pi * t;
  const double u = (x - 2.0 - 1.5 * std::sin(phase)) / 0.7;
  const double v = (y - 2.0 - 1.5 * std::cos(phase)) / 0.7;
  return std::exp(-u * u) * std::exp(-v * v);
}

/// Spatial extent, lattice spacing, and episode length.
struct Workspace {
  Bounds bounds;  // x, y, z used; t spans [0, 1]
  double grid_resolution = 0.25;
  int horizon = 200;

  void validate() const {
    const auto& lo = bounds.lo;
    const auto& hi = bounds.hi;
    if (!(lo.x < hi.x) || !(lo.y < hi.y) || !(lo.z <= hi.z)) {
      throw std::invalid_argument("workspace bounds must satisfy min < max");
    }
    if (!(grid_resolution > 0.0)) throw std::invalid_argument("grid_resolution must be positive");
    if (horizon < 1) throw std::invalid_argument("time horizon must be >= 1");
  }

  static Workspace dynamic_field(double resolution = 0.25, int horizon = 200) {
    Workspace ws;
    ws.bounds.lo = {0.0, 0.0, 0.0, 0.0};
    ws.bounds.hi = {5.0, 5.0, 0.0, 1.0};
    ws.grid_resolution = resolution;
    ws.horizon = horizon;
    return ws;
  }
};

struct AgentState {
  Point position;
  int step_index = 0;
};

/// A displacement; legal actions are enumerated by `neighbors`.
struct Action {
  double dx = 0.0;
  double dy = 0.0;
  double dz = 0.0;

  bool approx_equal(const Action& o, double tol = 1e-9) const {
    return std::fabs(dx - o.dx) <= tol && std::fabs(dy - o.dy) <= tol &&
           std::fabs(dz - o.dz) <= tol;
  }
};

/// Point motion model. `kLattice` moves to the 8-connected x-y neighbors at the
/// workspace grid spacing; `kDirections` moves `step` along each unit direction.
struct MotionModel {
  enum class Kind { kLattice, kDirections };

  Kind kind = Kind::kLattice;
  double step = 3.0;
  std::vector<std::array<double, 3>> directions;

  static MotionModel lattice() { return {}; }

  /// Eight compass headings plus, optionally, up (-z) and down (+z; z is depth).
  static MotionModel compass(double step = 3.0, bool vertical = true) {
    MotionModel m;
    m.kind = Kind::kDirections;
    m.step = step;
    for (int k = 0; k < 8; ++k) {
      const double angle = k * std::numbers::pi / 4.0;
      m.directions.push_back({std::cos(angle), std::sin(angle), 0.0});
    }
    if (vertical) {
      m.directions.push_back({0.0, 0.0, -1.0});
      m.directions.push_back({0.0, 0.0, 1.0});
    }
    return m;
  }
};

inline Point displaced(const Point& p, const Action& a) {
  return {p.x + a.dx, p.y + a.dy, p.z + a.dz, p.t};
}

/// Legal moves from `state`, filtered to the workspace bounds. For the lattice
/// model every axis moves by at most one grid step (Chebyshev distance).
inline std::vector<Action> neighbors(const AgentState& state, const Workspace& ws,
                                     const MotionModel& motion) {
  std::vector<Action> out;
  auto keep = [&](const Action& a) {
    Point q = displaced(state.position, a);
    q.t = ws.bounds.lo.t;
    if (ws.bounds.contains(q)) out.push_back(a);
  };
  if (motion.kind == MotionModel::Kind::kLattice) {
    const double h = ws.grid_resolution;
    for (int i = -1; i <= 1; ++i) {
      for (int j = -1; j <= 1; ++j) {
        if (i == 0 && j == 0) continue;
        keep({i * h, j * h, 0.0});
      }
    }
  } else {
    for (const auto& d : motion.directions) {
      const double norm = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
      const double s = motion.step / norm;
      keep({d[0] * s, d[1] * s, d[2] * s});
    }
  }
  return out;
}

/// The world the agent samples: the analytic dynamic field or a GP interpolant
/// through a dataset. Read-only after construction.
class GroundTruth {
 public:
  enum class Kind { kAnalyticDynamic, kInterpolatedGrid };

  static GroundTruth dynamic() {
    GroundTruth g;
    g.kind_ = Kind::kAnalyticDynamic;
    g.domain_ = Workspace::dynamic_field().bounds;
    g.value_range_ = {0.0, 1.0};
    return g;
  }

  static GroundTruth interpolated(GpBelief interpolant) {
    if (interpolant.empty()) throw std::invalid_argument("ground truth dataset is empty");
    GroundTruth g;
    g.kind_ = Kind::kInterpolatedGrid;
    const auto in = interpolant.inputs();
    const auto ys = interpolant.targets();
    Bounds box;
    box.lo = {in[0].x, in[0].y, in[0].z, 0.0};
    box.hi = {in[0].x, in[0].y, in[0].z, 1.0};
    for (const auto& p : in) {
      box.lo.x = std::min(box.lo.x, p.x);
      box.lo.y = std::min(box.lo.y, p.y);
      box.lo.z = std::min(box.lo.z, p.z);
      box.hi.x = std::max(box.hi.x, p.x);
      box.hi.y = std::max(box.hi.y, p.y);
      box.hi.z = std::max(box.hi.z, p.z);
    }
    const auto [lo, hi] = std::minmax_element(ys.begin(), ys.end());
    g.domain_ = box;
    g.value_range_ = {*lo, *hi};
    g.interpolant_ = std::move(interpolant);
    return g;
  }

  Kind kind() const { return kind_; }
  bool time_varying() const { return kind_ == Kind::kAnalyticDynamic; }
  /// Bounding box of the field; t spans normalized time [0, 1].
  const Bounds& domain() const { return domain_; }
  std::pair<double, double> value_range() const { return value_range_; }

  /// Field value at a spatial point and normalized time.
  double evaluate(const Point& p, double t) const {
    if (kind_ == Kind::kAnalyticDynamic) return dynamic_function(p.x, p.y, t);
    return interpolant_->posterior({p.x, p.y, p.z, 0.0}).mean;
  }

 private:
  GroundTruth() = default;

  Kind kind_ = Kind::kAnalyticDynamic;
  Bounds domain_;
  std::pair<double, double> value_range_{0.0, 1.0};
  std::optional<GpBelief> interpolant_;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline double parse_number(const std::string& cell, std::size_t line_no) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
  if (used == 0 || used != cell.size() || !std::isfinite(v)) {
    throw std::runtime_error("dataset line " + std::to_string(line_no) +
                             ": non-numeric value '" + cell + "'");
  }
  return v;
}

}  // namespace detail

/// Reads an `x,y,z,value` CSV and builds a ground truth whose value at any
/// point is the GP posterior mean through the rows.
inline GroundTruth load_grid_dataset(const std::filesystem::path& path,
                                     const KernelParams& kernel) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("dataset is empty: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x,y,z,value") {
    throw std::runtime_error("dataset header must be 'x,y,z,value', got '" + line + "'");
  }
  GpBelief belief(kernel);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 4) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) + ": expected 4 columns");
    }
    const Point p{detail::parse_number(cells[0], line_no), detail::parse_number(cells[1], line_no),
                  detail::parse_number(cells[2], line_no), 0.0};
    belief.observe(p, detail::parse_number(cells[3], line_no));
  }
  if (belief.empty()) throw std::runtime_error("dataset has no rows: " + path.string());
  return GroundTruth::interpolated(std::move(belief));
}

struct StepOutcome {
  AgentState state;
  double observation = 0.0;
};

/// Moves the agent and samples the field at the new position and normalized
/// time (step_index + 1) / T. One normal draw is taken from `rng` only when
/// `noise_std` > 0.
inline StepOutcome env_step(const GroundTruth& truth, const Workspace& ws,
                            const MotionModel& motion, const AgentState& state,
                            const Action& action, double noise_std, Rng& rng) {
  const auto legal = neighbors(state, ws, motion);
  const bool ok = std::any_of(legal.begin(), legal.end(),
                              [&](const Action& a) { return a.approx_equal(action); });
  if (!ok) throw std::invalid_argument("illegal action for the current agent state");
  StepOutcome out;
  out.state.position = displaced(state.position, action);
  out.state.step_index = state.step_index + 1;
  const double t = static_cast<double>(out.state.step_index) / ws.horizon;
  out.observation = truth.evaluate(out.state.position, std::min(t, 1.0));
  if (noise_std > 0.0) out.observation += std::normal_distribution<double>(0.0, noise_std)(rng);
  return out;
}

/// Lattice used when exporting field slices; the third axis is normalized
/// time for the dynamic field and depth for datasets.
struct SliceLattice {
  std::size_t nx = 21;
  std::size_t ny = 21;
  std::size_t nt = 101;
};

/// Writes `x,y,t,value` rows of every lattice node whose value is at least
/// `threshold`; returns the number of rows written.
inline std::size_t export_truth_slices(const GroundTruth& truth, double threshold,
                                       const std::filesystem::path& path,
                                       const SliceLattice& lattice = {}) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write truth slices: " + path.string());
  out.precision(10);
  out << "x,y,t,value\n";
  const auto& box = truth.domain();
  const bool dynamic = truth.time_varying();
  auto coord = [](double lo, double hi, std::size_t i, std::size_t n) {
    return n <= 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  std::size_t rows = 0;
  for (std::size_t k = 0; k < lattice.nt; ++k) {
    const double third = dynamic ? coord(box.lo.t, box.hi.t, k, lattice.nt)
                                 : coord(box.lo.z, box.hi.z, k, lattice.nt);
    for (std::size_t j = 0; j < lattice.ny; ++j) {
      const double y = coord(box.lo.y, box.hi.y, j, lattice.ny);
      for (std::size_t i = 0; i < lattice.nx; ++i) {
        const double x = coord(box.lo.x, box.hi.x, i, lattice.nx);
        const double v = dynamic ? truth.evaluate({x, y, 0.0, 0.0}, third)
                                 : truth.evaluate({x, y, third, 0.0}, 0.0);
        if (v >= threshold) {
          out << x << ',' << y << ',' << third << ',' << v << '\n';
          ++rows;
        }
      }
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
  return rows;
}

/// Kernel used to interpolate the synthetic dataset lattice.
inline KernelParams synthetic_dataset_kernel() {
  KernelParams k;
  k.lengthscale = 20.0;
  k.depth_lengthscale = 5.0;
  k.signal_variance = 1.0;
  k.noise_variance = 0.0;
  return k;
}

/// Stand-in for a surveyed concentration field: three fixed anisotropic
/// Gaussian blobs over a 186 x 210 x 15 m box, sampled on a lattice with
/// seeded measurement noise (std 0.01). Returns the number of rows written.
inline std::size_t write_synthetic_dataset(const std::filesystem::path& path, std::uint64_t seed) {
  struct Blob {
    double cx, cy, cz, sx, sy, sz, amplitude;
  };
  static constexpr std::array<Blob, 3> kBlobs{{
      {50.0, 60.0, 4.0, 30.0, 45.0, 6.0, 1.0},
      {135.0, 150.0, 10.0, 40.0, 25.0, 4.0, 0.8},
      {100.0, 40.0, 13.0, 20.0, 20.0, 5.0, 0.6},
  }};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset: " + path.string());
  out.precision(10);
  out << "x,y,z,value\n";
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 0.01);
  std::size_t rows = 0;
  constexpr int kNx = 10, kNy = 11, kNz = 4;
  for (int k = 0; k < kNz; ++k) {
    const double z = 15.0 * k / (kNz - 1);
    for (int j = 0; j < kNy; ++j) {
      const double y = 210.0 * j / (kNy - 1);
      for (int i = 0; i < kNx; ++i) {
        const double x = 186.0 * i / (kNx - 1);
        double v = 0.0;
        for (const auto& b : kBlobs) {
          const double u = (x - b.cx) / b.sx, w = (y - b.cy) / b.sy, d = (z - b.cz) / b.sz;
          v += b.amplitude * std::exp(-0.5 * (u * u + w * w + d * d));
        }
        out << x << ',' << y << ',' << z << ',' << v + noise(rng) << '\n';
        ++rows;
      }
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
  return rows;
}

/// Everything an episode needs about the world.
struct Environment {
  Workspace workspace;
  MotionModel motion;
  GroundTruth truth = GroundTruth::dynamic();
  AgentState start;
  double observation_noise_std = 0.0;

  /// The dynamic field on [0,5]^2, starting at the bottom-center of the time box.
  static Environment dynamic(double resolution = 0.25, int horizon = 200) {
    Environment env;
    env.workspace = Workspace::dynamic_field(resolution, horizon);
    env.motion = MotionModel::lattice();
    env.truth = GroundTruth::dynamic();
    env.start.position = {2.5, 2.5, 0.0, 0.0};
    return env;
  }

  /// A dataset field; the agent starts at the horizontal center at zero depth.
  static Environment grid(GroundTruth truth, int horizon = 200, MotionModel motion = MotionModel::compass()) {
    Environment env;
    env.workspace.bounds = truth.domain();
    env.workspace.bounds.lo.t = 0.0;
    env.workspace.bounds.hi.t = 1.0;
    env.workspace.grid_resolution = motion.step;
    env.workspace.horizon = horizon;
    env.motion = std::move(motion);
    const auto& box = env.workspace.bounds;
    env.start.position = {0.5 * (box.lo.x + box.hi.x), 0.5 * (box.lo.y + box.hi.y), box.lo.z, 0.0};
    env.truth = std::move(truth);
    return env;
  }

  std::vector<Action> actions(const AgentState& s) const { return neighbors(s, workspace, motion); }

  StepOutcome step(const AgentState& s, const Action& a, Rng& rng) const {
    return env_step(truth, workspace, motion, s, a, observation_noise_std, rng);
  }

  bool terminal(const AgentState& s) const { return s.step_index >= workspace.horizon; }

  /// Where a visit to `s` lands in the belief's input space.
  Point belief_point(const AgentState& s) const {
    Point p = s.position;
    p.t = truth.time_varying()
              ? std::min(1.0, static_cast<double>(s.step_index) / workspace.horizon)
              : 0.0;
    return p;
  }

  /// Bounds for beliefs over this environment.
  Bounds belief_bounds() const {
    Bounds b = workspace.bounds;
    b.lo.t = 0.0;
    b.hi.t = truth.time_varying() ? 1.0 : 0.0;
    return b;
  }
};

}  // namespace bapomcp
