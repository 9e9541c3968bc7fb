#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <set>

#include "fognet/idx.hpp"
#include "fognet/learning.hpp"

using namespace fognet;

namespace {

std::vector<int> range(int n) {
  std::vector<int> r(n);
  for (int k = 0; k < n; ++k) r[k] = k;
  return r;
}

double max_rel_error(const ModelSpec& spec, const std::vector<double>& w, const Dataset& data,
                     const std::vector<int>& rows) {
  std::vector<double> g;
  loss_and_grad(spec, w, data, rows, &g);
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    auto wp = w, wm = w;
    wp[k] += h;
    wm[k] -= h;
    double fd = (loss_and_grad(spec, wp, data, rows, nullptr) - loss_and_grad(spec, wm, data, rows, nullptr)) / (2 * h);
    double denom = std::max({std::abs(fd), std::abs(g[k]), 1e-6});
    worst = std::max(worst, std::abs(fd - g[k]) / denom);
  }
  return worst;
}

}  // namespace

TEST_CASE("gradients match central differences") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> nd(0, 0.5);
  for (Arch arch : {Arch::Softmax, Arch::MLP}) {
    for (int draw = 0; draw < 20; ++draw) {
      Dataset data = synth_blobs(4, 3, 12, 100 + draw);
      ModelSpec spec{arch, 4, 5, 3};
      std::vector<double> w(spec.param_count());
      for (auto& v : w) v = nd(rng);
      std::vector<int> rows;
      for (int k = 0; k < 12; k += 1 + draw % 3) rows.push_back(k);
      CHECK(max_rel_error(spec, w, data, rows) < 1e-4);
    }
  }
}

TEST_CASE("two-class softmax on one point") {
  Dataset data;
  data.d = 2;
  data.classes = 2;
  data.x = {0.5, -1.0};
  data.y = {1};
  ModelSpec spec{Arch::Softmax, 2, 0, 2};
  std::vector<double> w{0.1, -0.2, 0.3, 0.05, 0.0, 0.1};
  std::vector<double> g;
  loss_and_grad(spec, w, data, {0}, &g);
  // Hand computation: logits z_c = W_c . x + b_c.
  double z0 = 0.1 * 0.5 - 0.2 * -1.0, z1 = 0.3 * 0.5 + 0.05 * -1.0 + 0.1;
  double p0 = std::exp(z0) / (std::exp(z0) + std::exp(z1));
  // Label 1: class 0 gets p0 * x, class 1 gets (p1 - 1) * x = -p0 * x.
  std::vector<double> expect{p0 * 0.5, p0 * -1.0, -p0 * 0.5, -p0 * -1.0, p0, -p0};
  for (int k = 0; k < 6; ++k) CHECK(g[k] == doctest::Approx(expect[k]).epsilon(1e-12));
  CHECK(max_rel_error(spec, w, data, {0}) < 1e-6);
}

TEST_CASE("local update contract") {
  Dataset data = synth_blobs(3, 2, 20, 4);
  ModelState m = init_model({Arch::MLP, 3, 4, 2}, 0.1, 9);
  auto w0 = m.w;
  CHECK(local_update(m, data, {}) == 0.0);
  CHECK(m.w == w0);
  m.step_size = 0.0;
  local_update(m, data, range(20));
  CHECK(m.w == w0);
}

TEST_CASE("softmax steps do not increase the batch loss") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    Dataset data = synth_blobs(5, 4, 30, 200 + trial);
    ModelState m = init_model({Arch::Softmax, 5, 0, 4}, 0.1, trial);
    std::normal_distribution<double> nd(0, 0.3);
    for (auto& v : m.w) v = nd(rng);
    auto rows = range(30);
    double before = local_update(m, data, rows);
    double after = loss_and_grad(m.spec, m.w, data, rows, nullptr);
    CHECK(after <= before + 1e-12);
  }
}

TEST_CASE("non-finite inputs raise a numeric error") {
  Dataset data = synth_blobs(2, 2, 4, 1);
  data.x[0] = std::numeric_limits<double>::infinity();
  ModelState m = init_model({Arch::Softmax, 2, 0, 2}, 0.1, 1);
  m.w[0] = 1.0;
  CHECK_THROWS_AS(local_update(m, data, {0, 1}), NumericError);
}

TEST_CASE("aggregation") {
  std::vector<double> a{0.0}, b{4.0}, out{-7.0};
  CHECK(aggregate({1, 3}, {&a, &b}, out));
  CHECK(out[0] == doctest::Approx(3.0));

  std::vector<double> same{2.5, -1.0};
  std::vector<double> res(2);
  CHECK(aggregate({2, 5, 1}, {&same, &same, &same}, res));
  CHECK(res == same);

  std::vector<double> keep{9.0};
  CHECK_FALSE(aggregate({0, 0}, {&a, &b}, keep));
  CHECK(keep[0] == 9.0);
  CHECK_THROWS_AS(aggregate({-1, 2}, {&a, &b}, keep), InvalidArgument);
}

TEST_CASE("aggregation properties over random inputs") {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> nd(0, 1);
  std::uniform_real_distribution<double> u(0, 10);
  for (int trial = 0; trial < 200; ++trial) {
    const int devices = 5, dim = 7;
    std::vector<std::vector<double>> w(devices, std::vector<double>(dim));
    std::vector<double> H(devices);
    for (auto& v : w)
      for (auto& x : v) x = nd(rng);
    for (auto& h : H) h = u(rng);
    std::vector<const std::vector<double>*> ptrs;
    for (auto& v : w) ptrs.push_back(&v);
    std::vector<double> out(dim);
    REQUIRE(aggregate(H, ptrs, out));

    for (int k = 0; k < dim; ++k) {
      double lo = kInf, hi = -kInf;
      for (auto& v : w) lo = std::min(lo, v[k]), hi = std::max(hi, v[k]);
      CHECK(out[k] >= lo - 1e-12);
      CHECK(out[k] <= hi + 1e-12);
    }

    std::vector<int> perm{3, 0, 4, 1, 2};
    std::vector<double> H2;
    std::vector<const std::vector<double>*> p2;
    for (int k : perm) H2.push_back(H[k]), p2.push_back(ptrs[k]);
    std::vector<double> out2(dim);
    aggregate(H2, p2, out2);
    for (int k = 0; k < dim; ++k) CHECK(out2[k] == doctest::Approx(out[k]).epsilon(1e-12));

    for (auto& h : H) h *= 3.7;
    std::vector<double> out3(dim);
    aggregate(H, ptrs, out3);
    for (int k = 0; k < dim; ++k) CHECK(out3[k] == doctest::Approx(out[k]).epsilon(1e-12));
  }
}

TEST_CASE("evaluation") {
  Dataset data = synth_blobs(3, 4, 40, 2);
  ModelState zero = init_model({Arch::Softmax, 3, 0, 4}, 0.1, 1);
  CHECK(evaluate(zero, data).loss == doctest::Approx(std::log(4.0)));

  // A linear model aligned with the class means classifies far-apart blobs perfectly.
  Dataset sep = synth_blobs(2, 2, 100, 6, 40.0);
  ModelState m = init_model({Arch::Softmax, 2, 0, 2}, 0.1, 1);
  m.w = {1.0, 0.0, 0.0, 1.0, 0.0, 0.0};
  CHECK(evaluate(m, sep).accuracy == 1.0);
}

TEST_CASE("blobs are linearly separable when far apart") {
  Dataset d = synth_blobs(2, 2, 100, 13, 20.0);
  // Means sit on different axes; the separating direction is their difference.
  for (int k = 0; k < d.size(); ++k) {
    double proj = d.row(k)[0] - d.row(k)[1];
    CHECK((d.y[k] == 0 ? proj > 0 : proj < 0));
  }
  CHECK_THROWS_AS(synth_blobs(1, 3, 10, 1), InvalidArgument);
}

TEST_CASE("arrivals") {
  auto none = generate_arrivals(0, 3, 4, 1);
  CHECK(none.total() == 0);

  double sum = 0.0;
  const int seeds = 200;
  for (int s = 0; s < seeds; ++s) {
    auto a = generate_arrivals(6000, 10, 100, s, nullptr, 5000.0);
    sum += a.total();
    if (s < 5) {
      std::set<int> seen;
      for (auto& slot : a.at)
        for (auto& rows : slot)
          for (int r : rows) CHECK(seen.insert(r).second);
    }
  }
  double mean = sum / seeds;
  CHECK(std::abs(mean - 5000.0) < 3 * std::sqrt(5000.0 / seeds));

  auto full = generate_arrivals(6000, 10, 100, 3);
  CHECK(std::abs(full.total() + full.truncated - 6000.0) < 3 * std::sqrt(6000.0));

  auto mask = make_grid<std::uint8_t>(5, 2, 1);
  mask[2][1] = 0;
  auto masked = generate_arrivals(1000, 2, 5, 7, &mask);
  auto unmasked = generate_arrivals(1000, 2, 5, 7);
  CHECK(masked.at[2][1].empty());
  CHECK(masked.at[0][0].size() == unmasked.at[0][0].size());
}

TEST_CASE("idx round trip") {
  auto dir = std::filesystem::temp_directory_path() / "fognet_idx_test";
  std::filesystem::create_directories(dir);
  IdxTensor t{{3, 2, 2}, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 255}};
  for (bool gz : {false, true}) {
    auto path = (dir / (gz ? "t.gz" : "t.idx")).string();
    write_idx(path, t, gz);
    auto back = read_idx(path);
    CHECK(back.dims == t.dims);
    CHECK(back.data == t.data);
  }
  std::FILE* f = std::fopen((dir / "bad.idx").string().c_str(), "wb");
  unsigned char junk[] = {1, 2, 3, 4, 0, 0, 0, 1};
  std::fwrite(junk, 1, sizeof junk, f);
  std::fclose(f);
  try {
    read_idx((dir / "bad.idx").string());
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("offset") != std::string::npos);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("mnist subset") {
  const std::string dir = FOGNET_DATA_DIR;
  Dataset train = load_idx(dir + "/train-images-idx3-ubyte.gz", dir + "/train-labels-idx1-ubyte.gz");
  Dataset test = load_idx(dir + "/t10k-images-idx3-ubyte.gz", dir + "/t10k-labels-idx1-ubyte.gz");
  CHECK(train.d == 784);
  CHECK(train.size() == 4000);
  CHECK(test.size() == 1000);
  CHECK_NOTHROW(train.validate());
  for (double v : test.x) REQUIRE((v >= 0.0 && v <= 1.0));

  // Zero weights predict class 0 everywhere, so accuracy is that class's share.
  std::map<int, int> hist;
  for (int y : test.y) ++hist[y];
  ModelState zero = init_model({Arch::Softmax, 784, 0, 10}, 0.1, 1);
  CHECK(evaluate(zero, test).accuracy == doctest::Approx(hist[0] / 1000.0));
  int most = 0;
  for (auto& [label, count] : hist) most = std::max(most, count);
  CHECK(std::abs(hist[0] - most) / 1000.0 <= 0.02);
}
