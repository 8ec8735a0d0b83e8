#pragma once

// Small fully connected network over binary fingerprint inputs.  Hidden
// layers use ReLU; the output is either the raw value (regression) or a
// logistic probability (classification).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "janus/error.hpp"
#include "janus/fingerprint.hpp"
#include "janus/random.hpp"

namespace janus {

enum class Head : std::uint8_t { Identity = 0, Logistic = 1 };

struct Layer {
  std::size_t in = 0, out = 0;
  std::vector<double> w;  // out x in, row-major
  std::vector<double> b;
};

/// Active input indices of a fingerprint, ascending.
inline std::vector<std::uint32_t> active_bits(const Fingerprint& fp) {
  std::vector<std::uint32_t> idx;
  for (std::size_t i = 0; i < kFingerprintBits; ++i) {
    if (fp.bits.test(i)) idx.push_back(static_cast<std::uint32_t>(i));
  }
  return idx;
}

/// Input to the network: either a dense vector or a sparse binary pattern.
struct MlpInput {
  std::span<const double> dense;
  std::span<const std::uint32_t> active;
  bool sparse = false;

  static MlpInput of(std::span<const double> x) { return {x, {}, false}; }
  static MlpInput of(std::span<const std::uint32_t> a) { return {{}, a, true}; }
};

struct Trace {
  std::vector<std::vector<double>> z;  // pre-activation per layer
  std::vector<std::vector<double>> a;  // post-activation per layer
};

inline double sigmoid(double u) {
  if (u >= 0) return 1.0 / (1.0 + std::exp(-u));
  double e = std::exp(u);
  return e / (1.0 + e);
}

/// Per-sample loss on the raw output `u`: squared error for regression,
/// binary cross-entropy (from the logit) for classification.
inline double sample_loss(Head head, double u, double target) {
  if (head == Head::Identity) return (u - target) * (u - target);
  double softplus = u > 0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
  return softplus - target * u;
}

inline double sample_loss_grad(Head head, double u, double target) {
  return head == Head::Identity ? 2.0 * (u - target) : sigmoid(u) - target;
}

class Mlp {
 public:
  Mlp() = default;

  /// Zero-initialized network with the given widths (input first, output 1).
  Mlp(std::vector<std::size_t> widths, Head head) : widths_(std::move(widths)), head_(head) {
    if (widths_.size() < 2) throw PreconditionError("network needs at least an input and an output width");
    if (widths_.back() != 1) throw PreconditionError("network output width must be 1");
    for (std::size_t w : widths_) {
      if (w == 0) throw PreconditionError("layer widths must be positive");
    }
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
      Layer L;
      L.in = widths_[l];
      L.out = widths_[l + 1];
      L.w.assign(L.in * L.out, 0.0);
      L.b.assign(L.out, 0.0);
      layers_.push_back(std::move(L));
    }
  }

  /// He-normal weights, zero biases.
  void init_he(std::uint64_t seed) {
    Rng rng(seed);
    for (Layer& L : layers_) {
      std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(L.in)));
      for (double& w : L.w) w = dist(rng);
      std::fill(L.b.begin(), L.b.end(), 0.0);
    }
  }

  const std::vector<std::size_t>& widths() const { return widths_; }
  std::size_t input_width() const { return widths_.front(); }
  Head head() const { return head_; }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  // Regression targets are standardized for training; predictions undo it.
  double target_mean = 0.0;
  double target_std = 1.0;

  /// Raw output before the head.
  double raw(const MlpInput& x, Trace* trace = nullptr) const {
    check_input(x);
    std::vector<double> cur;
    if (trace) {
      trace->z.assign(layers_.size(), {});
      trace->a.assign(layers_.size(), {});
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const Layer& L = layers_[l];
      std::vector<double> z(L.b);
      if (l == 0 && x.sparse) {
        for (std::size_t j = 0; j < L.out; ++j) {
          const double* row = L.w.data() + j * L.in;
          double s = 0.0;
          for (std::uint32_t i : x.active) s += row[i];
          z[j] += s;
        }
      } else {
        const double* in = l == 0 ? x.dense.data() : cur.data();
        for (std::size_t j = 0; j < L.out; ++j) {
          const double* row = L.w.data() + j * L.in;
          double s = 0.0;
          for (std::size_t i = 0; i < L.in; ++i) s += row[i] * in[i];
          z[j] += s;
        }
      }
      std::vector<double> a(z);
      if (l + 1 < layers_.size()) {
        for (double& v : a) v = v > 0.0 ? v : 0.0;
      }
      if (trace) {
        trace->z[l] = z;
        trace->a[l] = a;
      }
      cur = std::move(a);
    }
    return cur[0];
  }

  /// Model score: de-standardized regression value or class probability.
  double predict(const MlpInput& x) const {
    double u = raw(x);
    return head_ == Head::Logistic ? sigmoid(u) : u * target_std + target_mean;
  }

  double predict(const Fingerprint& fp) const {
    std::vector<std::uint32_t> a = active_bits(fp);
    return predict(MlpInput::of(std::span<const std::uint32_t>(a)));
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const Layer& L : layers_) n += L.w.size() + L.b.size();
    return n;
  }

  /// Flat parameter view: each layer's weights then its biases.
  double& parameter(std::size_t i) {
    for (Layer& L : layers_) {
      if (i < L.w.size()) return L.w[i];
      i -= L.w.size();
      if (i < L.b.size()) return L.b[i];
      i -= L.b.size();
    }
    throw PreconditionError("parameter index out of range");
  }

  bool all_finite() const {
    for (const Layer& L : layers_) {
      for (double v : L.w) {
        if (!std::isfinite(v)) return false;
      }
      for (double v : L.b) {
        if (!std::isfinite(v)) return false;
      }
    }
    return true;
  }

  friend bool operator==(const Mlp& x, const Mlp& y) {
    if (x.widths_ != y.widths_ || x.head_ != y.head_ || x.target_mean != y.target_mean ||
        x.target_std != y.target_std) {
      return false;
    }
    for (std::size_t l = 0; l < x.layers_.size(); ++l) {
      if (x.layers_[l].w != y.layers_[l].w || x.layers_[l].b != y.layers_[l].b) return false;
    }
    return true;
  }

  // Binary layout: "JNSMLP01", u32 layer-width count, u64 widths, u8 head,
  // f64 target mean, f64 target std, then per layer the row-major f64
  // weights followed by the f64 biases.  Host byte order.
  void save(std::ostream& out) const {
    out.write("JNSMLP01", 8);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(widths_.size()));
    for (std::size_t w : widths_) put<std::uint64_t>(out, w);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(head_));
    put<double>(out, target_mean);
    put<double>(out, target_std);
    for (const Layer& L : layers_) {
      out.write(reinterpret_cast<const char*>(L.w.data()), static_cast<std::streamsize>(L.w.size() * sizeof(double)));
      out.write(reinterpret_cast<const char*>(L.b.data()), static_cast<std::streamsize>(L.b.size() * sizeof(double)));
    }
  }

  static Mlp load(std::istream& in) {
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, "JNSMLP01", 8) != 0) throw ParseError("not a network file");
    auto count = get<std::uint32_t>(in);
    if (count < 2 || count > 64) throw ParseError("bad layer count in network file");
    std::vector<std::size_t> widths;
    for (std::uint32_t i = 0; i < count; ++i) {
      auto w = get<std::uint64_t>(in);
      if (w == 0 || w > (1u << 24)) throw ParseError("bad layer width in network file");
      widths.push_back(static_cast<std::size_t>(w));
    }
    auto head = get<std::uint8_t>(in);
    if (head > 1) throw ParseError("bad head in network file");
    Mlp m(widths, static_cast<Head>(head));
    m.target_mean = get<double>(in);
    m.target_std = get<double>(in);
    for (Layer& L : m.layers_) {
      if (!in.read(reinterpret_cast<char*>(L.w.data()), static_cast<std::streamsize>(L.w.size() * sizeof(double))) ||
          !in.read(reinterpret_cast<char*>(L.b.data()), static_cast<std::streamsize>(L.b.size() * sizeof(double)))) {
        throw ParseError("truncated network file");
      }
    }
    return m;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    save(out);
  }

  static Mlp load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    return load(in);
  }

 private:
  void check_input(const MlpInput& x) const {
    if (layers_.empty()) throw PreconditionError("network has no layers");
    if (x.sparse) {
      for (std::uint32_t i : x.active) {
        if (i >= input_width()) throw PreconditionError("active input index exceeds network input width");
      }
    } else if (x.dense.size() != input_width()) {
      throw PreconditionError("input width " + std::to_string(x.dense.size()) + " does not match network width " +
                              std::to_string(input_width()));
    }
  }

  template <class T>
  static void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  template <class T>
  static T get(std::istream& in) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw ParseError("truncated network file");
    return v;
  }

  std::vector<std::size_t> widths_;
  Head head_ = Head::Identity;
  std::vector<Layer> layers_;
};

/// Gradient buffers shaped like the network.
struct Gradients {
  std::vector<Layer> layers;

  explicit Gradients(const Mlp& m) : layers(m.layers()) {
    for (Layer& L : layers) {
      std::fill(L.w.begin(), L.w.end(), 0.0);
      std::fill(L.b.begin(), L.b.end(), 0.0);
    }
  }

  double at(std::size_t i) const {
    for (const Layer& L : layers) {
      if (i < L.w.size()) return L.w[i];
      i -= L.w.size();
      if (i < L.b.size()) return L.b[i];
      i -= L.b.size();
    }
    throw PreconditionError("parameter index out of range");
  }
};

/// Adds scale * dLoss/dparams for one sample to `g`; returns the sample loss.
inline double backprop(const Mlp& m, const MlpInput& x, double target, double scale, Gradients& g) {
  Trace t;
  double u = m.raw(x, &t);
  const auto& layers = m.layers();
  std::vector<double> delta = {sample_loss_grad(m.head(), u, target) * scale};
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Layer& L = layers[l];
    Layer& G = g.layers[l];
    for (std::size_t j = 0; j < L.out; ++j) G.b[j] += delta[j];
    if (l == 0) {
      if (x.sparse) {
        for (std::size_t j = 0; j < L.out; ++j) {
          double* row = G.w.data() + j * L.in;
          for (std::uint32_t i : x.active) row[i] += delta[j];
        }
      } else {
        for (std::size_t j = 0; j < L.out; ++j) {
          double* row = G.w.data() + j * L.in;
          for (std::size_t i = 0; i < L.in; ++i) row[i] += delta[j] * x.dense[i];
        }
      }
      break;
    }
    const std::vector<double>& prev_a = t.a[l - 1];
    const std::vector<double>& prev_z = t.z[l - 1];
    std::vector<double> next(L.in, 0.0);
    for (std::size_t j = 0; j < L.out; ++j) {
      const double* row = L.w.data() + j * L.in;
      double* grow = G.w.data() + j * L.in;
      for (std::size_t i = 0; i < L.in; ++i) {
        grow[i] += delta[j] * prev_a[i];
        next[i] += delta[j] * row[i];
      }
    }
    for (std::size_t i = 0; i < L.in; ++i) {
      if (prev_z[i] <= 0.0) next[i] = 0.0;
    }
    delta = std::move(next);
  }
  return sample_loss(m.head(), u, target);
}

/// Largest relative difference between backpropagated and central
/// finite-difference gradients over `samples` random parameters (all of them
/// when the network is small enough).  Parameters whose +-step moves a ReLU
/// across its kink are skipped, since the derivative is undefined there.
inline double gradient_check(Mlp m, const MlpInput& x, double target, std::uint64_t seed, std::size_t samples = 200,
                             double step = 1e-4) {
  Gradients g(m);
  backprop(m, x, target, 1.0, g);
  const std::size_t n = m.parameter_count();
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  if (idx.size() > samples) idx.resize(samples);

  auto pattern = [&](const Trace& t) {
    std::vector<char> p;
    for (std::size_t l = 0; l + 1 < t.z.size(); ++l) {
      for (double v : t.z[l]) p.push_back(v > 0.0);
    }
    return p;
  };
  Trace base;
  m.raw(x, &base);
  const std::vector<char> base_pattern = pattern(base);

  double worst = 0.0;
  for (std::size_t i : idx) {
    double& p = m.parameter(i);
    const double saved = p;
    Trace tp, tm;
    p = saved + step;
    double lp = sample_loss(m.head(), m.raw(x, &tp), target);
    p = saved - step;
    double lm = sample_loss(m.head(), m.raw(x, &tm), target);
    p = saved;
    if (pattern(tp) != base_pattern || pattern(tm) != base_pattern) continue;
    double numeric = (lp - lm) / (2.0 * step);
    double analytic = g.at(i);
    double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
    worst = std::max(worst, std::abs(numeric - analytic) / denom);
  }
  return worst;
}

}  // namespace janus
