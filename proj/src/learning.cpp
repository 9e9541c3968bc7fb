#include "fognet/learning.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

namespace fognet {

namespace {

constexpr std::uint64_t kStreamBlobs = 0x31;
constexpr std::uint64_t kStreamInit = 0x32;
constexpr std::uint64_t kStreamArrivals = 0x33;

struct Offsets {
  std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;
};

Offsets offsets(const ModelSpec& s) {
  Offsets o;
  if (s.arch == Arch::Softmax) {
    o.w2 = 0;
    o.b2 = static_cast<std::size_t>(s.classes) * s.d;
  } else {
    o.w1 = 0;
    o.b1 = static_cast<std::size_t>(s.hidden) * s.d;
    o.w2 = o.b1 + s.hidden;
    o.b2 = o.w2 + static_cast<std::size_t>(s.classes) * s.hidden;
  }
  return o;
}

// Writes softmax probabilities into p and returns -log p[label] (label < 0
// skips the loss).
double softmax_into(std::vector<double>& z, int label) {
  double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) sum += (v = std::exp(v - mx));
  for (double& v : z) v /= sum;
  if (label < 0) return 0.0;
  return -(std::log(z[label]));
}

struct Forward {
  std::vector<double> hidden;  // tanh activations (MLP)
  std::vector<double> prob;
};

void forward(const ModelSpec& s, const std::vector<double>& w, const double* x, Forward& f) {
  const Offsets o = offsets(s);
  const int C = s.classes;
  const double* in = x;
  int in_dim = s.d;
  if (s.arch == Arch::MLP) {
    f.hidden.assign(s.hidden, 0.0);
    for (int h = 0; h < s.hidden; ++h) {
      const double* wr = w.data() + o.w1 + static_cast<std::size_t>(h) * s.d;
      double a = w[o.b1 + h];
      for (int k = 0; k < s.d; ++k) a += wr[k] * x[k];
      f.hidden[h] = std::tanh(a);
    }
    in = f.hidden.data();
    in_dim = s.hidden;
  }
  f.prob.assign(C, 0.0);
  for (int c = 0; c < C; ++c) {
    const double* wr = w.data() + o.w2 + static_cast<std::size_t>(c) * in_dim;
    double z = w[o.b2 + c];
    for (int k = 0; k < in_dim; ++k) z += wr[k] * in[k];
    f.prob[c] = z;
  }
}

}  // namespace

void Dataset::validate() const {
  if (d < 1 || classes < 1) throw InvalidArgument("dataset needs d >= 1 and at least one class");
  if (x.size() != y.size() * static_cast<std::size_t>(d)) throw InvalidArgument("feature matrix size mismatch");
  for (int label : y)
    if (label < 0 || label >= classes) throw InvalidArgument("label out of range");
  for (double v : x)
    if (!std::isfinite(v)) throw InvalidArgument("non-finite feature");
}

Dataset synth_blobs(int d, int classes, int N, std::uint64_t seed, double separation) {
  if (d < 1 || classes < 2 || N < 0) throw InvalidArgument("blobs need d >= 1, classes >= 2, N >= 0");
  if (classes > 2 * d) throw InvalidArgument("blobs support at most 2d classes");
  Dataset ds;
  ds.d = d;
  ds.classes = classes;
  ds.x.resize(static_cast<std::size_t>(N) * d);
  ds.y.resize(N);
  auto rng = make_rng(seed, kStreamBlobs);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int k = 0; k < N; ++k) {
    int c = k % classes;
    ds.y[k] = c;
    double* row = ds.x.data() + static_cast<std::size_t>(k) * d;
    for (int q = 0; q < d; ++q) row[q] = noise(rng);
    row[c % d] += (c / d == 0 ? 0.5 : -0.5) * separation;
  }
  return ds;
}

Dataset slice(const Dataset& data, int begin, int end) {
  if (begin < 0 || end > data.size() || begin > end) throw InvalidArgument("slice bounds out of range");
  Dataset out;
  out.d = data.d;
  out.classes = data.classes;
  out.x.assign(data.x.begin() + static_cast<std::ptrdiff_t>(begin) * data.d,
               data.x.begin() + static_cast<std::ptrdiff_t>(end) * data.d);
  out.y.assign(data.y.begin() + begin, data.y.begin() + end);
  return out;
}

std::size_t ModelSpec::param_count() const {
  if (arch == Arch::Softmax) return static_cast<std::size_t>(classes) * (d + 1);
  return static_cast<std::size_t>(hidden) * (d + 1) + static_cast<std::size_t>(classes) * (hidden + 1);
}

ModelState init_model(const ModelSpec& spec, double step_size, std::uint64_t seed) {
  if (spec.d < 1 || spec.classes < 2 || (spec.arch == Arch::MLP && spec.hidden < 1))
    throw InvalidArgument("model dimensions must be positive");
  ModelState m;
  m.spec = spec;
  m.step_size = step_size;
  m.w.assign(spec.param_count(), 0.0);
  if (spec.arch == Arch::MLP) {
    const Offsets o = offsets(spec);
    auto rng = make_rng(seed, kStreamInit);
    double a1 = 1.0 / std::sqrt(static_cast<double>(spec.d));
    double a2 = 1.0 / std::sqrt(static_cast<double>(spec.hidden));
    for (std::size_t k = o.w1; k < o.b1; ++k) m.w[k] = a1 * (2.0 * uniform01(rng) - 1.0);
    for (std::size_t k = o.w2; k < o.b2; ++k) m.w[k] = a2 * (2.0 * uniform01(rng) - 1.0);
  }
  return m;
}

std::vector<double> predict(const ModelSpec& spec, const std::vector<double>& w, const double* x) {
  Forward f;
  forward(spec, w, x, f);
  softmax_into(f.prob, -1);
  return f.prob;
}

double loss_and_grad(const ModelSpec& s, const std::vector<double>& w, const Dataset& data,
                     const std::vector<int>& rows, std::vector<double>* grad) {
  if (data.d != s.d || data.classes != s.classes) throw InvalidArgument("model and dataset dimensions differ");
  if (w.size() != s.param_count()) throw InvalidArgument("parameter vector has the wrong length");
  if (grad) grad->assign(w.size(), 0.0);
  if (rows.empty()) return 0.0;
  const Offsets o = offsets(s);
  const int C = s.classes;
  Forward f;
  std::vector<double> dh;
  double loss = 0.0;
  for (int r : rows) {
    const double* x = data.row(r);
    forward(s, w, x, f);
    loss += softmax_into(f.prob, data.y[r]);
    if (!grad) continue;
    auto& g = *grad;
    f.prob[data.y[r]] -= 1.0;  // now dL/dz
    const double* in = s.arch == Arch::MLP ? f.hidden.data() : x;
    const int in_dim = s.arch == Arch::MLP ? s.hidden : s.d;
    if (s.arch == Arch::MLP) dh.assign(s.hidden, 0.0);
    for (int c = 0; c < C; ++c) {
      double dz = f.prob[c];
      g[o.b2 + c] += dz;
      double* gr = g.data() + o.w2 + static_cast<std::size_t>(c) * in_dim;
      for (int k = 0; k < in_dim; ++k) gr[k] += dz * in[k];
      if (s.arch == Arch::MLP) {
        const double* wr = w.data() + o.w2 + static_cast<std::size_t>(c) * in_dim;
        for (int k = 0; k < in_dim; ++k) dh[k] += dz * wr[k];
      }
    }
    if (s.arch == Arch::MLP) {
      for (int h = 0; h < s.hidden; ++h) {
        double da = dh[h] * (1.0 - f.hidden[h] * f.hidden[h]);
        g[o.b1 + h] += da;
        double* gr = g.data() + o.w1 + static_cast<std::size_t>(h) * s.d;
        for (int k = 0; k < s.d; ++k) gr[k] += da * x[k];
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  if (grad)
    for (double& v : *grad) v *= inv;
  return loss * inv;
}

double local_update(ModelState& m, const Dataset& data, const std::vector<int>& batch) {
  if (batch.empty()) return 0.0;
  std::vector<double> grad;
  double loss = loss_and_grad(m.spec, m.w, data, batch, &grad);
  double gnorm = 0.0;
  for (double v : grad) gnorm += v * v;
  if (!std::isfinite(gnorm) || !std::isfinite(loss)) {
    double wnorm = 0.0;
    for (double v : m.w) wnorm += v * v;
    throw NumericError("non-finite gradient (|w| = " + std::to_string(std::sqrt(wnorm)) +
                       ", |grad|^2 = " + std::to_string(gnorm) + ")");
  }
  for (std::size_t k = 0; k < grad.size(); ++k) m.w[k] -= m.step_size * grad[k];
  return loss;
}

bool aggregate(const std::vector<double>& H, const std::vector<const std::vector<double>*>& params,
               std::vector<double>& global) {
  if (H.size() != params.size()) throw InvalidArgument("one weight per parameter vector required");
  double total = 0.0;
  for (double h : H) {
    if (!(h >= 0.0)) throw InvalidArgument("aggregation weights must be non-negative");
    total += h;
  }
  if (!(total > 0.0)) return false;
  const std::size_t P = params.empty() ? 0 : params.front()->size();
  std::vector<double> out(P, 0.0);
  for (std::size_t q = 0; q < params.size(); ++q) {
    if (params[q]->size() != P) throw InvalidArgument("parameter vectors differ in length");
    if (H[q] == 0.0) continue;
    const double a = H[q] / total;
    const auto& w = *params[q];
    for (std::size_t k = 0; k < P; ++k) out[k] += a * w[k];
  }
  // Guard the convex-combination property against rounding.
  for (std::size_t k = 0; k < P; ++k) {
    double lo = kInf, hi = -kInf;
    for (std::size_t q = 0; q < params.size(); ++q)
      if (H[q] > 0.0) lo = std::min(lo, (*params[q])[k]), hi = std::max(hi, (*params[q])[k]);
    out[k] = std::clamp(out[k], lo, hi);
  }
  global = std::move(out);
  return true;
}

EvalResult evaluate(const ModelState& m, const Dataset& test) {
  if (test.d != m.spec.d || test.classes != m.spec.classes) throw InvalidArgument("model and dataset dimensions differ");
  EvalResult r;
  if (test.size() == 0) return r;
  Forward f;
  int correct = 0;
  for (int k = 0; k < test.size(); ++k) {
    forward(m.spec, m.w, test.row(k), f);
    r.loss += softmax_into(f.prob, test.y[k]);
    int arg = static_cast<int>(std::max_element(f.prob.begin(), f.prob.end()) - f.prob.begin());
    if (arg == test.y[k]) ++correct;
  }
  r.loss /= test.size();
  r.accuracy = static_cast<double>(correct) / test.size();
  return r;
}

long Arrivals::total() const {
  long s = 0;
  for (const auto& slot : at)
    for (const auto& rows : slot) s += static_cast<long>(rows.size());
  return s;
}

Arrivals generate_arrivals(int pool_size, int n, int horizon, std::uint64_t seed, const Grid<std::uint8_t>* active,
                           double mean_total) {
  if (pool_size < 0 || n < 1 || horizon < 1) throw InvalidArgument("arrivals need pool >= 0, n >= 1, T >= 1");
  if (mean_total < 0.0) mean_total = pool_size;
  const double mean = mean_total / (static_cast<double>(n) * horizon);
  auto rng = make_rng(seed, kStreamArrivals);
  std::vector<int> pool(pool_size);
  std::iota(pool.begin(), pool.end(), 0);
  std::shuffle(pool.begin(), pool.end(), rng);
  std::size_t next = 0;

  Arrivals a;
  a.at.assign(horizon, std::vector<std::vector<int>>(n));
  std::poisson_distribution<int> pois(mean > 0.0 ? mean : 1.0);
  for (int t = 0; t < horizon; ++t)
    for (int i = 0; i < n; ++i) {
      int count = mean > 0.0 ? pois(rng) : 0;
      if (active && !(*active)[t][i]) continue;
      for (int k = 0; k < count; ++k) {
        if (next >= pool.size()) {
          ++a.truncated;
          continue;
        }
        a.at[t][i].push_back(pool[next++]);
      }
    }
  if (a.truncated > 0)
    std::clog << "fognet: data pool exhausted, " << a.truncated << " arrivals truncated\n";
  return a;
}

}  // namespace fognet
