#pragma once

// Two-stream fully convolutional affordance network with hand-written
// forward and backward passes.
//
//   color (3,H,W) -> conv3x3/2 -> ReLU -> conv3x3/2 -> ReLU --\
//                                                            concat (32,H/4,W/4)
//   depth (1,H,W) -> conv3x3/2 -> ReLU -> conv3x3/2 -> ReLU --/
//     -> conv1x1 (16) -> ReLU -> conv1x1 (1) -> bilinear x4 -> logits (H,W)
//
// Distribution mode ends in a spatial softmax, value mode in a per-pixel
// logistic. Both modes share every weight.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "graspwarm/rng.hpp"
#include "graspwarm/scene.hpp"
#include "graspwarm/tensor.hpp"

namespace graspwarm::net {

inline constexpr std::size_t kTrunkWidth1 = 8;
inline constexpr std::size_t kTrunkWidth2 = 16;
inline constexpr std::size_t kHeadHidden = 16;
inline constexpr std::size_t kUpsample = 4;

enum class Mode { distribution, value };

enum ParamIndex : std::size_t {
  kColor1W, kColor1B, kColor2W, kColor2B,
  kDepth1W, kDepth1B, kDepth2W, kDepth2B,
  kHead1W, kHead1B, kHead2W, kHead2B,
  kParamCount
};

inline constexpr std::array<std::string_view, kParamCount> kParamNames{
    "color1.weight", "color1.bias", "color2.weight", "color2.bias",
    "depth1.weight", "depth1.bias", "depth2.weight", "depth2.bias",
    "head1.weight",  "head1.bias",  "head2.weight",  "head2.bias"};

using TensorSet = std::array<Tensor, kParamCount>;
using Gradients = TensorSet;

/// Learnable tensors plus their SGD momentum buffers.
struct NetworkParams {
  TensorSet weights;
  TensorSet momentum;

  Tensor& operator[](std::size_t i) { return weights[i]; }
  const Tensor& operator[](std::size_t i) const { return weights[i]; }
  friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

inline std::vector<std::size_t> param_shape(std::size_t i) {
  switch (i) {
    case kColor1W: return {kTrunkWidth1, 3, 3, 3};
    case kDepth1W: return {kTrunkWidth1, 1, 3, 3};
    case kColor1B: case kDepth1B: return {kTrunkWidth1};
    case kColor2W: case kDepth2W: return {kTrunkWidth2, kTrunkWidth1, 3, 3};
    case kColor2B: case kDepth2B: return {kTrunkWidth2};
    case kHead1W: return {kHeadHidden, 2 * kTrunkWidth2, 1, 1};
    case kHead1B: return {kHeadHidden};
    case kHead2W: return {1, kHeadHidden, 1, 1};
    case kHead2B: return {1};
  }
  throw std::out_of_range("param_shape");
}

inline TensorSet zeros_like_params() {
  TensorSet t;
  for (std::size_t i = 0; i < kParamCount; ++i) t[i] = Tensor(param_shape(i));
  return t;
}

/// Kaiming-uniform weights (bound sqrt(6 / fan_in)), zero biases, zero momentum.
inline NetworkParams init_params(std::uint64_t seed) {
  Rng rng(seed);
  NetworkParams p{zeros_like_params(), zeros_like_params()};
  for (std::size_t i = 0; i < kParamCount; ++i) {
    Tensor& w = p.weights[i];
    if (w.rank() != 4) continue;
    const double fan_in = static_cast<double>(w.dim(1) * w.dim(2) * w.dim(3));
    const double bound = std::sqrt(6.0 / fan_in);
    for (double& v : w.values()) v = rng.uniform(-bound, bound);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Layers

struct ConvSpec {
  std::size_t stride = 1;
  std::size_t pad = 0;
};

inline std::size_t conv_out_size(std::size_t in, std::size_t k, ConvSpec s) {
  return (in + 2 * s.pad - k) / s.stride + 1;
}

/// input (C,H,W), weight (O,C,K,K), bias (O) -> (O,Ho,Wo)
inline Tensor conv2d(const Tensor& in, const Tensor& w, const Tensor& b, ConvSpec s) {
  const std::size_t C = in.dim(0), H = in.dim(1), W = in.dim(2);
  const std::size_t O = w.dim(0), K = w.dim(2);
  if (w.dim(1) != C) throw std::invalid_argument("conv2d: channel mismatch");
  const std::size_t Ho = conv_out_size(H, K, s), Wo = conv_out_size(W, K, s);
  Tensor out({O, Ho, Wo});
  for (std::size_t o = 0; o < O; ++o) {
    double* op = out.data() + o * Ho * Wo;
    std::fill(op, op + Ho * Wo, b[o]);
    for (std::size_t c = 0; c < C; ++c) {
      const double* ip = in.data() + c * H * W;
      for (std::size_t kh = 0; kh < K; ++kh)
        for (std::size_t kw = 0; kw < K; ++kw) {
          const double wv = w[((o * C + c) * K + kh) * K + kw];
          for (std::size_t oh = 0; oh < Ho; ++oh) {
            const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * s.stride + kh) -
                                      static_cast<std::ptrdiff_t>(s.pad);
            if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(H)) continue;
            const double* irow = ip + ih * W;
            double* orow = op + oh * Wo;
            for (std::size_t ow = 0; ow < Wo; ++ow) {
              const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow * s.stride + kw) -
                                        static_cast<std::ptrdiff_t>(s.pad);
              if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(W)) continue;
              orow[ow] += wv * irow[iw];
            }
          }
        }
    }
  }
  return out;
}

/// Accumulates weight/bias gradients; returns the input gradient when requested.
inline Tensor conv2d_backward(const Tensor& in, const Tensor& w, const Tensor& grad_out, ConvSpec s,
                              Tensor& grad_w, Tensor& grad_b, bool need_input_grad) {
  const std::size_t C = in.dim(0), H = in.dim(1), W = in.dim(2);
  const std::size_t O = w.dim(0), K = w.dim(2);
  const std::size_t Ho = grad_out.dim(1), Wo = grad_out.dim(2);
  Tensor grad_in = need_input_grad ? Tensor(in.dims()) : Tensor();
  for (std::size_t o = 0; o < O; ++o) {
    const double* gp = grad_out.data() + o * Ho * Wo;
    double bsum = 0.0;
    for (std::size_t i = 0; i < Ho * Wo; ++i) bsum += gp[i];
    grad_b[o] += bsum;
    for (std::size_t c = 0; c < C; ++c) {
      const double* ip = in.data() + c * H * W;
      double* gip = need_input_grad ? grad_in.data() + c * H * W : nullptr;
      for (std::size_t kh = 0; kh < K; ++kh)
        for (std::size_t kw = 0; kw < K; ++kw) {
          const std::size_t widx = ((o * C + c) * K + kh) * K + kw;
          const double wv = w[widx];
          double acc = 0.0;
          for (std::size_t oh = 0; oh < Ho; ++oh) {
            const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * s.stride + kh) -
                                      static_cast<std::ptrdiff_t>(s.pad);
            if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(H)) continue;
            const double* grow = gp + oh * Wo;
            for (std::size_t ow = 0; ow < Wo; ++ow) {
              const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow * s.stride + kw) -
                                        static_cast<std::ptrdiff_t>(s.pad);
              if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(W)) continue;
              acc += grow[ow] * ip[ih * W + iw];
              if (gip) gip[ih * W + iw] += wv * grow[ow];
            }
          }
          grad_w[widx] += acc;
        }
    }
  }
  return grad_in;
}

inline void relu_inplace(Tensor& t) {
  for (double& v : t.values()) v = v > 0.0 ? v : 0.0;
}

/// Zeroes gradient entries where the ReLU output was not positive.
inline void relu_backward_inplace(Tensor& grad, const Tensor& activated) {
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!(activated[i] > 0.0)) grad[i] = 0.0;
}

/// 1D bilinear weights for upsampling `in` samples by `factor` (half-pixel
/// centers, edge clamped).
struct UpsampleAxis {
  std::vector<std::size_t> lo, hi;
  std::vector<double> frac;

  UpsampleAxis(std::size_t in, std::size_t factor) {
    const std::size_t out = in * factor;
    lo.resize(out);
    hi.resize(out);
    frac.resize(out);
    for (std::size_t i = 0; i < out; ++i) {
      double src = (static_cast<double>(i) + 0.5) / static_cast<double>(factor) - 0.5;
      src = std::max(src, 0.0);
      std::size_t l = static_cast<std::size_t>(std::floor(src));
      l = std::min(l, in - 1);
      lo[i] = l;
      hi[i] = std::min(l + 1, in - 1);
      frac[i] = src - static_cast<double>(l);
    }
  }
};

/// (h, w) -> (h*f, w*f)
inline Tensor upsample_bilinear(const Tensor& in, std::size_t factor) {
  const std::size_t h = in.dim(0), w = in.dim(1);
  const UpsampleAxis ay(h, factor), ax(w, factor);
  Tensor out({h * factor, w * factor});
  for (std::size_t r = 0; r < h * factor; ++r) {
    const double fy = ay.frac[r];
    for (std::size_t c = 0; c < w * factor; ++c) {
      const double fx = ax.frac[c];
      out.at(r, c) = (1 - fy) * ((1 - fx) * in.at(ay.lo[r], ax.lo[c]) + fx * in.at(ay.lo[r], ax.hi[c])) +
                     fy * ((1 - fx) * in.at(ay.hi[r], ax.lo[c]) + fx * in.at(ay.hi[r], ax.hi[c]));
    }
  }
  return out;
}

inline Tensor upsample_bilinear_backward(const Tensor& grad_out, std::size_t h, std::size_t w,
                                         std::size_t factor) {
  const UpsampleAxis ay(h, factor), ax(w, factor);
  Tensor g({h, w});
  for (std::size_t r = 0; r < h * factor; ++r) {
    const double fy = ay.frac[r];
    for (std::size_t c = 0; c < w * factor; ++c) {
      const double fx = ax.frac[c];
      const double v = grad_out.at(r, c);
      g.at(ay.lo[r], ax.lo[c]) += (1 - fy) * (1 - fx) * v;
      g.at(ay.lo[r], ax.hi[c]) += (1 - fy) * fx * v;
      g.at(ay.hi[r], ax.lo[c]) += fy * (1 - fx) * v;
      g.at(ay.hi[r], ax.hi[c]) += fy * fx * v;
    }
  }
  return g;
}

inline Tensor spatial_softmax(const Tensor& logits) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : logits.values()) mx = std::max(mx, v);
  Tensor out(logits.dims());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) total += (out[i] = std::exp(logits[i] - mx));
  for (double& v : out.values()) v /= total;
  return out;
}

inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Tensor logistic_map(const Tensor& logits) {
  Tensor out(logits.dims());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logistic(logits[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Network

struct NetInput {
  Tensor color;  // (3, H, W)
  Tensor depth;  // (1, H, W)
};

inline NetInput to_input(const sim::HeightmapPair& hm) {
  const std::size_t H = static_cast<std::size_t>(hm.height), W = static_cast<std::size_t>(hm.width);
  if (hm.color.size() != H * W * 3 || hm.depth.size() != H * W)
    throw std::invalid_argument("to_input: heightmap buffers do not match dimensions");
  NetInput in{Tensor({3, H, W}), Tensor({1, H, W}, hm.depth)};
  for (std::size_t p = 0; p < H * W; ++p)
    for (std::size_t ch = 0; ch < 3; ++ch) in.color[ch * H * W + p] = hm.color[p * 3 + ch];
  return in;
}

/// Activations cached by forward for backprop.
struct ForwardTrace {
  Mode mode = Mode::distribution;
  NetInput input;
  Tensor color1, color2, depth1, depth2;  // post-ReLU
  Tensor concat;                          // (32, h, w)
  Tensor hidden;                          // head1 post-ReLU
  Tensor low_logits;                      // (h, w)
  Tensor logits;                          // (H, W)
  Tensor output;                          // (H, W)
};

inline constexpr ConvSpec kTrunkConv{2, 1};
inline constexpr ConvSpec kPointConv{1, 0};

inline void check_input(const NetInput& in) {
  if (in.color.rank() != 3 || in.depth.rank() != 3 || in.color.dim(0) != 3 || in.depth.dim(0) != 1)
    throw std::invalid_argument("network input must be color (3,H,W) and depth (1,H,W)");
  if (in.color.dim(1) != in.depth.dim(1) || in.color.dim(2) != in.depth.dim(2))
    throw std::invalid_argument("network input: color " + in.color.shape_string() +
                                " and depth " + in.depth.shape_string() + " disagree");
  if (in.color.dim(1) % kUpsample != 0 || in.color.dim(2) % kUpsample != 0 || in.color.dim(1) == 0)
    throw std::invalid_argument("network input: H and W must be positive multiples of 4, got " +
                                in.color.shape_string());
}

inline ForwardTrace forward_trace(const NetworkParams& p, NetInput in, Mode mode) {
  check_input(in);
  ForwardTrace t;
  t.mode = mode;
  t.input = std::move(in);
  t.color1 = conv2d(t.input.color, p[kColor1W], p[kColor1B], kTrunkConv);
  relu_inplace(t.color1);
  t.color2 = conv2d(t.color1, p[kColor2W], p[kColor2B], kTrunkConv);
  relu_inplace(t.color2);
  t.depth1 = conv2d(t.input.depth, p[kDepth1W], p[kDepth1B], kTrunkConv);
  relu_inplace(t.depth1);
  t.depth2 = conv2d(t.depth1, p[kDepth2W], p[kDepth2B], kTrunkConv);
  relu_inplace(t.depth2);

  const std::size_t h = t.color2.dim(1), w = t.color2.dim(2);
  t.concat = Tensor({2 * kTrunkWidth2, h, w});
  std::copy(t.color2.data(), t.color2.data() + t.color2.size(), t.concat.data());
  std::copy(t.depth2.data(), t.depth2.data() + t.depth2.size(), t.concat.data() + t.color2.size());

  t.hidden = conv2d(t.concat, p[kHead1W], p[kHead1B], kPointConv);
  relu_inplace(t.hidden);
  const Tensor head = conv2d(t.hidden, p[kHead2W], p[kHead2B], kPointConv);
  t.low_logits = Tensor({h, w}, head.storage());
  t.logits = upsample_bilinear(t.low_logits, kUpsample);
  t.output = mode == Mode::distribution ? spatial_softmax(t.logits) : logistic_map(t.logits);
  return t;
}

/// Affordance map for a heightmap pair plus the trace needed for backprop.
inline std::pair<Tensor, ForwardTrace> forward_affordance(const NetworkParams& p,
                                                          const sim::HeightmapPair& hm, Mode mode) {
  ForwardTrace t = forward_trace(p, to_input(hm), mode);
  Tensor out = t.output;
  return {std::move(out), std::move(t)};
}

/// Backprop from a gradient on the (H, W) logits.
inline Gradients backward_from_logits(const NetworkParams& p, const ForwardTrace& t,
                                      const Tensor& grad_logits) {
  if (!grad_logits.same_shape(t.logits))
    throw std::invalid_argument("backward: gradient shape " + grad_logits.shape_string() +
                                " does not match output " + t.logits.shape_string());
  Gradients g = zeros_like_params();
  const std::size_t h = t.low_logits.dim(0), w = t.low_logits.dim(1);
  const Tensor g_low = upsample_bilinear_backward(grad_logits, h, w, kUpsample);
  const Tensor g_head({1, h, w}, g_low.storage());

  Tensor g_hidden = conv2d_backward(t.hidden, p[kHead2W], g_head, kPointConv, g[kHead2W], g[kHead2B], true);
  relu_backward_inplace(g_hidden, t.hidden);
  const Tensor g_concat =
      conv2d_backward(t.concat, p[kHead1W], g_hidden, kPointConv, g[kHead1W], g[kHead1B], true);

  const std::size_t half = t.color2.size();
  Tensor g_color2(t.color2.dims()), g_depth2(t.depth2.dims());
  std::copy(g_concat.data(), g_concat.data() + half, g_color2.data());
  std::copy(g_concat.data() + half, g_concat.data() + 2 * half, g_depth2.data());

  relu_backward_inplace(g_color2, t.color2);
  Tensor g_color1 = conv2d_backward(t.color1, p[kColor2W], g_color2, kTrunkConv, g[kColor2W], g[kColor2B], true);
  relu_backward_inplace(g_color1, t.color1);
  conv2d_backward(t.input.color, p[kColor1W], g_color1, kTrunkConv, g[kColor1W], g[kColor1B], false);

  relu_backward_inplace(g_depth2, t.depth2);
  Tensor g_depth1 = conv2d_backward(t.depth1, p[kDepth2W], g_depth2, kTrunkConv, g[kDepth2W], g[kDepth2B], true);
  relu_backward_inplace(g_depth1, t.depth1);
  conv2d_backward(t.input.depth, p[kDepth1W], g_depth1, kTrunkConv, g[kDepth1W], g[kDepth1B], false);
  return g;
}

/// Chain rule through the output nonlinearity of the trace's mode.
inline Tensor output_to_logit_gradient(const ForwardTrace& t, const Tensor& grad_output) {
  if (!grad_output.same_shape(t.output))
    throw std::invalid_argument("backward: gradient shape " + grad_output.shape_string() +
                                " does not match output " + t.output.shape_string());
  Tensor gl(t.output.dims());
  if (t.mode == Mode::distribution) {
    double dot = 0.0;
    for (std::size_t i = 0; i < gl.size(); ++i) dot += t.output[i] * grad_output[i];
    for (std::size_t i = 0; i < gl.size(); ++i) gl[i] = t.output[i] * (grad_output[i] - dot);
  } else {
    for (std::size_t i = 0; i < gl.size(); ++i) gl[i] = grad_output[i] * t.output[i] * (1.0 - t.output[i]);
  }
  return gl;
}

inline Gradients backward(const NetworkParams& p, const ForwardTrace& t, const Tensor& grad_output) {
  return backward_from_logits(p, t, output_to_logit_gradient(t, grad_output));
}

inline void accumulate(Gradients& into, const Gradients& g, double scale = 1.0) {
  for (std::size_t i = 0; i < kParamCount; ++i)
    for (std::size_t k = 0; k < into[i].size(); ++k) into[i][k] += scale * g[i][k];
}

// ---------------------------------------------------------------------------
// Optimizer

struct SgdConfig {
  double lr = 1e-3;
  double momentum = 0.9;
  double weight_decay = 2e-5;
};

class NonFiniteGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// v <- mu v + (g + lambda w);  w <- w - lr v
inline void sgd_step(NetworkParams& p, const Gradients& g, const SgdConfig& cfg) {
  for (std::size_t i = 0; i < kParamCount; ++i)
    if (!g[i].all_finite())
      throw NonFiniteGradient("non-finite gradient in layer " + std::string(kParamNames[i]));
  for (std::size_t i = 0; i < kParamCount; ++i) {
    Tensor& w = p.weights[i];
    Tensor& v = p.momentum[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      v[k] = cfg.momentum * v[k] + (g[i][k] + cfg.weight_decay * w[k]);
      w[k] -= cfg.lr * v[k];
    }
  }
}

/// Full backprop from an output-map gradient followed by one SGD update.
inline NetworkParams backward_and_step(const NetworkParams& p, const ForwardTrace& t,
                                       const Tensor& grad_output, const SgdConfig& cfg) {
  NetworkParams next = p;
  sgd_step(next, backward(p, t, grad_output), cfg);
  return next;
}

// ---------------------------------------------------------------------------
// Checkpoints: "GBN1", then per tensor {u32 name length, name, u32 rank,
// u32 dims[rank], f64 payload}, all little-endian.

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline bool get_u32(std::istream& is, std::uint32_t& v) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) return false;
  v = b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  return true;
}

inline void put_f64(std::ostream& os, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof bits);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline double get_f64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("checkpoint: truncated payload");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double d;
  std::memcpy(&d, &bits, sizeof d);
  return d;
}

}  // namespace detail

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

inline void save_checkpoint(const std::string& path, const NetworkParams& p) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  os.write("GBN1", 4);
  for (std::size_t i = 0; i < kParamCount; ++i) {
    detail::put_u32(os, static_cast<std::uint32_t>(kParamNames[i].size()));
    os.write(kParamNames[i].data(), static_cast<std::streamsize>(kParamNames[i].size()));
    const Tensor& t = p.weights[i];
    detail::put_u32(os, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.dims()) detail::put_u32(os, static_cast<std::uint32_t>(d));
    for (double v : t.values()) detail::put_f64(os, v);
  }
  if (!os) throw std::runtime_error("error writing checkpoint '" + path + "'");
}

inline std::vector<NamedTensor> read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  char magic[4];
  if (!is.read(magic, 4) || std::string_view(magic, 4) != "GBN1")
    throw std::runtime_error("'" + path + "' is not a GBN1 checkpoint");
  std::vector<NamedTensor> out;
  std::uint32_t name_len;
  while (detail::get_u32(is, name_len)) {
    std::string name(name_len, '\0');
    std::uint32_t rank;
    if (!is.read(name.data(), name_len) || !detail::get_u32(is, rank))
      throw std::runtime_error("checkpoint: truncated record header");
    std::vector<std::size_t> dims(rank);
    for (auto& d : dims) {
      std::uint32_t v;
      if (!detail::get_u32(is, v)) throw std::runtime_error("checkpoint: truncated dims");
      d = v;
    }
    Tensor t(dims);
    for (double& v : t.values()) v = detail::get_f64(is);
    out.push_back({std::move(name), std::move(t)});
  }
  return out;
}

/// Parameters from a checkpoint with zeroed momentum. Throws listing every
/// missing or shape-mismatched tensor.
inline NetworkParams load_checkpoint(const std::string& path) {
  const auto records = read_checkpoint(path);
  NetworkParams p{zeros_like_params(), zeros_like_params()};
  std::string problems;
  for (std::size_t i = 0; i < kParamCount; ++i) {
    const auto it = std::find_if(records.begin(), records.end(),
                                 [&](const NamedTensor& r) { return r.name == kParamNames[i]; });
    if (it == records.end()) {
      problems += " " + std::string(kParamNames[i]) + " (missing)";
    } else if (it->tensor.dims() != param_shape(i)) {
      problems += " " + std::string(kParamNames[i]) + " (got " + it->tensor.shape_string() +
                  ", want " + Tensor(param_shape(i)).shape_string() + ")";
    } else {
      p.weights[i] = it->tensor;
    }
  }
  if (!problems.empty()) throw std::runtime_error("checkpoint '" + path + "' incompatible:" + problems);
  return p;
}

}  // namespace graspwarm::net
