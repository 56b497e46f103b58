#include <doctest.h>

#include "shj/errors.hpp"
#include "shj/noise.hpp"

#include <cmath>
#include <sstream>

using namespace shj;

TEST_CASE("Philox4x32-10 known-answer vectors") {
  const Philox4x32 zero(0);
  const auto a = zero({0, 0, 0, 0});
  CHECK(a[0] == 0x6627e8d5u);
  CHECK(a[1] == 0xe169c58du);
  CHECK(a[2] == 0xbc57ac4cu);
  CHECK(a[3] == 0x9b00dbd8u);
  const Philox4x32 ones(~std::uint64_t{0});
  const auto b = ones({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu});
  CHECK(b[0] == 0x408f276du);
  CHECK(b[1] == 0x41c83b0eu);
  CHECK(b[2] == 0xa20bc7c6u);
  CHECK(b[3] == 0x6d5451fdu);
}

TEST_CASE("time grid validation") {
  CHECK_THROWS(TimeGrid(0.0, 4));
  CHECK_THROWS(TimeGrid(1.0, 0));
  const TimeGrid g(2.0, 8);
  CHECK(g.dt() == 0.25);
  CHECK(g.time(8) == 2.0);
}

TEST_CASE("sampling is seed-reproducible and keyed") {
  const TimeGrid g(1.0, 64);
  const NoisePath a = sample_path(g, 2, 42, 7);
  const NoisePath b = sample_path(g, 2, 42, 7);
  CHECK(a.increments == b.increments);
  CHECK(sample_path(g, 2, 43, 7).increments != a.increments);
  CHECK(sample_path(g, 2, 42, 8).increments != a.increments);
  CHECK(a.increments.rows() == 3);
  for (int k = 0; k < 64; ++k) CHECK(a.step(k)(0) == g.dt());
  CHECK(a.value(0, 64) == doctest::Approx(1.0));
  CHECK(a.value(1, 0) == 0.0);
}

TEST_CASE("property: increments are N(0, dt)") {
  const TimeGrid g(1.0, 100);
  double sum = 0.0, sq = 0.0;
  int count = 0;
  for (std::uint64_t m = 0; m < 400; ++m) {
    const NoisePath p = sample_path(g, 1, 5, m);
    for (int k = 0; k < 100; ++k) {
      const double z = p.step(k)(1) / std::sqrt(g.dt());
      sum += z;
      sq += z * z;
      ++count;
    }
  }
  const double mean = sum / count;
  const double var = sq / count - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(count));
  CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / count));
}

TEST_CASE("property: refinement preserves sums exactly and coarsen inverts it") {
  const TimeGrid g(1.0, 32);
  for (std::uint64_t m = 0; m < 20; ++m) {
    const NoisePath p = sample_path(g, 2, 9, m);
    const NoisePath r = refine(p);
    CHECK(r.steps() == 64);
    CHECK(r.level == 1);
    for (int k = 0; k < 32; ++k) {
      for (int j = 0; j <= 2; ++j) CHECK(r.step(2 * k)(j) + r.step(2 * k + 1)(j) == p.step(k)(j));
    }
    CHECK(coarsen(r).increments == p.increments);
    const NoisePath rr = refine(r);
    CHECK(coarsen(coarsen(rr)).increments == p.increments);
    CHECK(rr.value(1, 128) == doctest::Approx(p.value(1, 32)).epsilon(1e-13));
  }
}

TEST_CASE("property: bridge halves have variance dt/4 around the midpoint") {
  const TimeGrid g(1.0, 16);
  double sq = 0.0;
  int count = 0;
  for (std::uint64_t m = 0; m < 500; ++m) {
    const NoisePath p = sample_path(g, 1, 21, m);
    const NoisePath r = refine(p);
    for (int k = 0; k < 16; ++k) {
      const double dev = r.step(2 * k)(1) - 0.5 * p.step(k)(1);
      sq += dev * dev;
      ++count;
    }
  }
  const double expected = g.dt() / 4.0;
  CHECK(sq / count == doctest::Approx(expected).epsilon(0.1));
}

TEST_CASE("coarsen rejects odd step counts") {
  const NoisePath p = sample_path(TimeGrid(1.0, 3), 1, 0, 0);
  CHECK_THROWS(coarsen(p));
}

TEST_CASE("Stratonovich sum") {
  const NoisePath p = sample_path(TimeGrid(1.0, 4), 1, 0, 0);
  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(2, 4);
  CHECK(stratonovich_sum(ones, p) == doctest::Approx(1.0 + p.value(1, 4)));
  CHECK_THROWS_AS(stratonovich_sum(Eigen::MatrixXd::Ones(2, 3), p), DimensionError);
}

TEST_CASE("noise CSV") {
  const NoisePath p = sample_path(TimeGrid(1.0, 2), 1, 0, 0);
  std::ostringstream os;
  write_csv(os, p);
  CHECK(os.str().rfind("k,t_k,dX0,dX1\n", 0) == 0);
}
