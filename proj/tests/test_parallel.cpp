#include <doctest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "stsep/parallel.hpp"
#include "stsep/rng.hpp"

using namespace stsep;

TEST_CASE("parallel_for fills owned slots for any worker count") {
  std::vector<double> base(500);
  for (std::size_t i = 0; i < base.size(); ++i) base[i] = std::sqrt(i + 1.0);
  for (unsigned threads : {1u, 2u, 4u, 7u}) {
    std::vector<double> out(500, 0.0);
    parallel_for(out.size(), threads, [&](std::size_t i) {
      out[i] = std::sqrt(i + 1.0);
    });
    CHECK(out == base);
  }
}

TEST_CASE("parallel_for rethrows the first task error") {
  CHECK_THROWS_AS(parallel_for(64, 4,
                               [](std::size_t i) {
                                 if (i == 13) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
}

TEST_CASE("thread count resolution") {
  CHECK(resolve_thread_count(5) == 5);
  CHECK(resolve_thread_count(0) >= 1);
}

TEST_CASE("replicate streams are reproducible and distinct") {
  Rng a = Rng::for_replicate(42, 3);
  Rng b = Rng::for_replicate(42, 3);
  Rng c = Rng::for_replicate(42, 4);
  double va = a.uniform(), vb = b.uniform(), vc = c.uniform();
  CHECK(va == vb);
  CHECK(va != vc);

  Rng base1(7), base2(7);
  CHECK(base1.normal() == base2.normal());
  for (int i = 0; i < 200; ++i) {
    std::uint64_t v = base1.uniform_int(6);
    CHECK(v < 6);
  }
  CHECK(base1.uniform_int(1) == 0);
  long p = base1.poisson(4.0);
  CHECK(p >= 0);

  std::vector<int> v(10);
  std::iota(v.begin(), v.end(), 0);
  std::vector<int> w = v;
  Rng s1(11), s2(11);
  s1.shuffle(v);
  s2.shuffle(w);
  CHECK(v == w);
}
