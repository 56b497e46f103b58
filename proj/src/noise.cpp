#include "shj/noise.hpp"

#include "shj/errors.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

namespace shj {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// 53-bit uniform in (0, 1].
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
}

}  // namespace

Philox4x32::Counter Philox4x32::operator()(Counter ctr) const {
  Key key = key_;
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

double normal_at(std::uint64_t seed, std::uint64_t path_index, int channel, std::uint32_t step,
                 int level) {
  const Philox4x32 gen(seed);
  const auto out = gen({step, static_cast<std::uint32_t>(channel) | (static_cast<std::uint32_t>(level) << 16),
                        static_cast<std::uint32_t>(path_index), static_cast<std::uint32_t>(path_index >> 32)});
  const double u1 = to_unit(out[0], out[1]);
  const double u2 = to_unit(out[2], out[3]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double uniform_at(std::uint64_t seed, std::uint64_t index, std::uint32_t slot) {
  const Philox4x32 gen(seed);
  const auto out = gen({slot, 0xffff0000u, static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)});
  return to_unit(out[0], out[1]);
}

TimeGrid::TimeGrid(double t_end_, int steps_) : t_end(t_end_), steps(steps_) {
  if (!(t_end > 0.0) || steps < 1) throw DimensionError("time grid needs t_end > 0 and steps >= 1");
}

double NoisePath::value(int channel, int k) const {
  if (channel == 0) return grid.time(k);
  double s = 0.0;
  for (int i = 0; i < k; ++i) s += increments(channel, i);
  return s;
}

NoisePath sample_path(const TimeGrid& grid, int r, std::uint64_t seed, std::uint64_t path_index) {
  if (r < 0) throw DimensionError("channel count must be >= 0");
  if (r >= (1 << 16)) throw DimensionError("too many noise channels");
  NoisePath path;
  path.grid = grid;
  path.r = r;
  path.seed = seed;
  path.path_index = path_index;
  path.increments.resize(r + 1, grid.steps);
  const double dt = grid.dt();
  const double sd = std::sqrt(dt);
  for (int k = 0; k < grid.steps; ++k) {
    path.increments(0, k) = dt;
    for (int j = 1; j <= r; ++j) {
      path.increments(j, k) = sd * normal_at(seed, path_index, j, static_cast<std::uint32_t>(k), 0);
    }
  }
  return path;
}

NoisePath refine(const NoisePath& path) {
  NoisePath out = path;
  out.level = path.level + 1;
  out.grid = TimeGrid(path.grid.t_end, 2 * path.grid.steps);
  out.increments.resize(path.r + 1, out.grid.steps);
  const double dt = path.grid.dt();
  const double half_sd = 0.5 * std::sqrt(dt);
  for (int k = 0; k < path.steps(); ++k) {
    out.increments(0, 2 * k) = out.grid.dt();
    out.increments(0, 2 * k + 1) = out.grid.dt();
    for (int j = 1; j <= path.r; ++j) {
      const double parent = path.increments(j, k);
      // Bridge midpoint: first half ~ N(parent/2, dt/4).
      double first = 0.5 * parent +
                     half_sd * normal_at(path.seed, path.path_index, j, static_cast<std::uint32_t>(k), out.level);
      double second = parent - first;
      for (int it = 0; it < 4 && first + second != parent; ++it) {
        first = parent - second;
        second = parent - first;
      }
      if (first + second != parent) {
        first = 0.5 * parent;
        second = 0.5 * parent;
      }
      out.increments(j, 2 * k) = first;
      out.increments(j, 2 * k + 1) = second;
    }
  }
  return out;
}

NoisePath coarsen(const NoisePath& path) {
  if (path.steps() % 2 != 0) throw DimensionError("coarsen needs an even step count");
  NoisePath out = path;
  out.level = path.level > 0 ? path.level - 1 : 0;
  out.grid = TimeGrid(path.grid.t_end, path.grid.steps / 2);
  out.increments.resize(path.r + 1, out.grid.steps);
  for (int k = 0; k < out.grid.steps; ++k) {
    out.increments.col(k) = path.increments.col(2 * k) + path.increments.col(2 * k + 1);
  }
  return out;
}

double stratonovich_sum(const Eigen::Ref<const Eigen::MatrixXd>& values, const NoisePath& path) {
  if (values.rows() != path.increments.rows() || values.cols() != path.increments.cols()) {
    throw DimensionError("stratonovich_sum: values must be (r + 1) x steps");
  }
  return values.cwiseProduct(path.increments).sum();
}

void write_csv(std::ostream& os, const NoisePath& path) {
  os << "k,t_k";
  for (int j = 0; j <= path.r; ++j) os << ",dX" << j;
  os << '\n';
  char buf[40];
  for (int k = 0; k < path.steps(); ++k) {
    os << k;
    std::snprintf(buf, sizeof buf, ",%.17g", path.grid.time(k));
    os << buf;
    for (int j = 0; j <= path.r; ++j) {
      std::snprintf(buf, sizeof buf, ",%.17g", path.increments(j, k));
      os << buf;
    }
    os << '\n';
  }
}

}  // namespace shj
