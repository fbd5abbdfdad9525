// Copyright 2026 The kburst Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <cstring>

#include <doctest.h>

#include "kburst/png_io.hpp"
#include "kburst/rng.hpp"
#include "kburst/tns.hpp"
#include "test_util.hpp"

using namespace kburst;
using test::TempDir;

TEST_SUITE_BEGIN("rng_io");

TEST_CASE("same seed reproduces the stream, different seeds diverge") {
  Rng a(42), b(42), c(43);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 100; ++i) {
    const uint64_t va = a.next_u64();
    all_equal = all_equal && va == b.next_u64();
    any_diff = any_diff || va != c.next_u64();
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("uniform ranges") {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double v = rng.uniform(-2.0, 3.0);
    CHECK(v >= -2.0);
    CHECK(v <= 3.0);
  }
  CHECK(rng.uniform(2.0, 2.0) == 2.0);
}

TEST_CASE("normal moments (Monte Carlo)") {
  Rng rng(11);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("poisson mean (Monte Carlo)") {
  Rng rng(13);
  for (const double lambda : {0.5, 3.0, 40.0}) {
    const int n = 100000;
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += static_cast<double>(rng.poisson(lambda));
    CHECK(std::abs(s / n - lambda) < 0.03 * lambda + 0.01);
  }
}

TEST_CASE("derive_seed mixes ids and order") {
  const uint64_t base = 99;
  CHECK(derive_seed(base, {1, 2}) != derive_seed(base, {2, 1}));
  CHECK(derive_seed(base, {1}) != derive_seed(base, {1, 0}));
  CHECK(derive_seed(base, {5, 7}) == derive_seed(base, {5, 7}));
  CHECK(derive_seed(base, {5, 7}) != derive_seed(base + 1, {5, 7}));
}

TEST_CASE("tensor container round trip is bit-exact") {
  TempDir dir("tns");
  TensorContainer tc;
  Rng rng(3);
  Tensor a({3, 5, 7});
  for (int64_t i = 0; i < a.numel(); ++i) a[i] = static_cast<float>(rng.normal());
  Tensor b({961});
  for (int64_t i = 0; i < b.numel(); ++i) b[i] = static_cast<float>(rng.uniform());
  Tensor c({1});
  c[0] = -0.0f;
  tc.put("alpha", a);
  tc.put("beta", b);
  tc.put("gamma", c);
  nlohmann::json meta;
  meta["note"] = "round trip";
  meta["t"] = 15;
  tc.set_meta(meta);

  const std::string path = dir.sub("x.tns");
  tc.save(path);
  const TensorContainer back = TensorContainer::load(path);

  REQUIRE(back.names() == std::vector<std::string>{"alpha", "beta", "gamma"});
  for (const char* name : {"alpha", "beta", "gamma"}) {
    const Tensor& t0 = tc.get(name);
    const Tensor& t1 = back.get(name);
    REQUIRE(t0.shape() == t1.shape());
    CHECK(std::memcmp(t0.data(), t1.data(), sizeof(float) * static_cast<size_t>(t0.numel())) ==
          0);
  }
  CHECK(back.meta()["note"] == "round trip");
  CHECK(back.meta()["t"] == 15);
  CHECK(back.content_hash() == tc.content_hash());

  // Re-saving the loaded container reproduces the file byte for byte.
  const std::string path2 = dir.sub("y.tns");
  back.save(path2);
  CHECK(test::slurp(path) == test::slurp(path2));
}

TEST_CASE("content hash tracks payload changes") {
  TensorContainer a, b;
  Tensor t({4});
  t[0] = 1.0f;
  a.put("x", t);
  b.put("x", t);
  CHECK(a.content_hash() == b.content_hash());
  t[3] = 2.0f;
  b.put("x", t);
  CHECK(a.content_hash() != b.content_hash());
}

TEST_CASE("fnv1a64 basic properties") {
  const char* s = "kernel";
  CHECK(fnv1a64(s, 6) == fnv1a64(s, 6));
  CHECK(fnv1a64(s, 6) != fnv1a64(s, 5));
  CHECK(fnv1a64("a", 1) != fnv1a64("b", 1));
}

TEST_CASE("png round trip at 8 and 16 bit") {
  TempDir dir("png");
  const RgbImage img = test::random_image(13, 9, 21);

  write_png(dir.sub("a8.png"), img, 8);
  const RgbImage r8 = read_png(dir.sub("a8.png"));
  REQUIRE(r8.height == img.height);
  REQUIRE(r8.width == img.width);
  double worst = 0.0;
  for (size_t i = 0; i < img.v.size(); ++i) worst = std::max(worst, std::abs(img.v[i] - r8.v[i]));
  CHECK(worst <= 0.5 / 255.0 + 1e-9);

  write_png(dir.sub("a16.png"), img, 16);
  const RgbImage r16 = read_png(dir.sub("a16.png"));
  worst = 0.0;
  for (size_t i = 0; i < img.v.size(); ++i)
    worst = std::max(worst, std::abs(img.v[i] - r16.v[i]));
  CHECK(worst <= 0.5 / 65535.0 + 1e-12);

  // 16-bit round trip of already-quantized data is exact.
  write_png(dir.sub("b16.png"), r16, 16);
  const RgbImage again = read_png(dir.sub("b16.png"));
  CHECK(again.v == r16.v);
}

TEST_SUITE_END();
