#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <iosfwd>

namespace shj {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Stateless: every output
/// block is a pure function of (key, counter).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Philox4x32(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  Counter operator()(Counter ctr) const;

 private:
  Key key_;
};

/// Standard normal deviate addressed by (path, channel, step, level) under `seed`.
double normal_at(std::uint64_t seed, std::uint64_t path_index, int channel, std::uint32_t step,
                 int level);

/// Uniform deviate in (0, 1] for auxiliary draws (initial points, probe points). Its counters
/// use a level field that bridge refinement never reaches, so it never collides with path noise.
double uniform_at(std::uint64_t seed, std::uint64_t index, std::uint32_t slot);

struct TimeGrid {
  double t_end = 1.0;
  int steps = 1;

  TimeGrid() = default;
  TimeGrid(double t_end, int steps);

  double dt() const { return t_end / steps; }
  double time(int k) const { return k * dt(); }
};

/// Increments of X = (t, B^1..B^r) on a uniform grid. Row j holds channel j; row 0 is
/// always dt. `level` counts bridge refinements applied since sampling.
struct NoisePath {
  TimeGrid grid;
  int r = 0;
  Eigen::MatrixXd increments;  // (r + 1) x steps
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
  int level = 0;

  int steps() const { return grid.steps; }
  auto step(int k) const { return increments.col(k); }

  /// Cumulative value of channel j at node k (B_{t_k} for j >= 1, t_k for j = 0).
  double value(int channel, int k) const;
};

/// Seed-reproducible sample: channel 0 carries dt, channels 1..r carry N(0, dt) draws keyed
/// by (seed, path_index, channel, step).
NoisePath sample_path(const TimeGrid& grid, int r, std::uint64_t seed, std::uint64_t path_index);

/// Brownian-bridge midpoint insertion: doubles the step count; each pair of refined
/// increments sums to its parent exactly in floating point.
NoisePath refine(const NoisePath& path);

/// Pairwise summation of adjacent increments; inverse of refine.
NoisePath coarsen(const NoisePath& path);

/// sum_{j,k} values(j, k) * dX^j_k. `values` must be (r + 1) x steps.
double stratonovich_sum(const Eigen::Ref<const Eigen::MatrixXd>& values, const NoisePath& path);

/// CSV with columns k,t_k,dX0..dXr.
void write_csv(std::ostream& os, const NoisePath& path);

}  // namespace shj
