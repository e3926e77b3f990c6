#include "bytestorm/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "bytestorm/error.hpp"

namespace bytestorm::nn {

namespace {

constexpr int kKernel = 9;

int pooled(int size, bool ceil_mode) { return ceil_mode ? (size + 1) / 2 : size / 2; }

std::vector<LayerDesc> plan_layers(const ArchConfig& cfg, std::size_t& total) {
  std::vector<LayerDesc> layers;
  int c = cfg.in_channels, h = cfg.in_size, w = cfg.in_size;
  std::size_t offset = 0;
  auto add = [&](LayerKind kind, int oc, int oh, int ow, std::size_t weights,
                 std::size_t biases) {
    LayerDesc d{kind, c, h, w, oc, oh, ow, offset, offset + weights};
    offset += weights + biases;
    layers.push_back(d);
    c = oc;
    h = oh;
    w = ow;
  };
  int filters = cfg.base_filters;
  for (int b = 0; b < cfg.n_conv_blocks; ++b) {
    for (int k = 0; k < cfg.convs_per_block; ++k) {
      add(LayerKind::Conv3x3, filters, h, w,
          static_cast<std::size_t>(filters) * c * kKernel, static_cast<std::size_t>(filters));
      add(LayerKind::Relu, c, h, w, 0, 0);
    }
    const int oh = pooled(h, cfg.pool_ceil), ow = pooled(w, cfg.pool_ceil);
    if (oh < 1 || ow < 1) {
      throw Error(ErrorKind::InvalidArgument,
                  "pooling underflows the spatial size after block " + std::to_string(b + 1));
    }
    add(LayerKind::MaxPool2, c, oh, ow, 0, 0);
    filters = std::min(filters * cfg.filter_growth, cfg.max_filters);
  }
  auto linear = [&](int out) {
    const auto in = static_cast<std::size_t>(c) * h * w;
    // Linear layers see the flattened input as a vector of length in.
    c = static_cast<int>(in);
    h = 1;
    w = 1;
    add(LayerKind::Linear, out, 1, 1, static_cast<std::size_t>(out) * in,
        static_cast<std::size_t>(out));
  };
  for (int width : cfg.linear_widths) {
    linear(width);
    add(LayerKind::Relu, c, 1, 1, 0, 0);
  }
  linear(cfg.output_size());
  if (cfg.head == Head::Classification) add(LayerKind::Sigmoid, c, 1, 1, 0, 0);
  total = offset;
  return layers;
}

template <typename T>
inline void axpy(T* __restrict y, const T* __restrict x, T a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <typename T>
inline T dot(const T* __restrict a, const T* __restrict b, std::size_t n) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
void im2col(const T* in, int c, int h, int w, T* col) {
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  for (int ci = 0; ci < c; ++ci) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        T* row = col + (static_cast<std::size_t>(ci) * kKernel + ky * 3 + kx) * hw;
        for (int y = 0; y < h; ++y) {
          const int yy = y + ky - 1;
          for (int x = 0; x < w; ++x) {
            const int xx = x + kx - 1;
            row[y * w + x] = (yy >= 0 && yy < h && xx >= 0 && xx < w)
                                 ? in[(static_cast<std::size_t>(ci) * h + yy) * w + xx]
                                 : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, int c, int h, int w, T* in) {
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  for (int ci = 0; ci < c; ++ci) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const T* row = col + (static_cast<std::size_t>(ci) * kKernel + ky * 3 + kx) * hw;
        for (int y = 0; y < h; ++y) {
          const int yy = y + ky - 1;
          if (yy < 0 || yy >= h) continue;
          for (int x = 0; x < w; ++x) {
            const int xx = x + kx - 1;
            if (xx < 0 || xx >= w) continue;
            in[(static_cast<std::size_t>(ci) * h + yy) * w + xx] += row[y * w + x];
          }
        }
      }
    }
  }
}

template <typename T>
void conv_forward(const LayerDesc& L, const T* params, const T* in, T* out, T* col) {
  const std::size_t hw = static_cast<std::size_t>(L.in_h) * L.in_w;
  const std::size_t k = static_cast<std::size_t>(L.in_c) * kKernel;
  im2col(in, L.in_c, L.in_h, L.in_w, col);
  const T* weight = params + L.weight_offset;
  const T* bias = params + L.bias_offset;
  for (int co = 0; co < L.out_c; ++co) {
    T* orow = out + static_cast<std::size_t>(co) * hw;
    std::fill(orow, orow + hw, bias[co]);
    const T* wrow = weight + static_cast<std::size_t>(co) * k;
    for (std::size_t kk = 0; kk < k; ++kk) axpy(orow, col + kk * hw, wrow[kk], hw);
  }
}

template <typename T>
void conv_backward(const LayerDesc& L, const T* params, const T* in, const T* dout, T* grads,
                   T* din, T* col) {
  const std::size_t hw = static_cast<std::size_t>(L.in_h) * L.in_w;
  const std::size_t k = static_cast<std::size_t>(L.in_c) * kKernel;
  im2col(in, L.in_c, L.in_h, L.in_w, col);
  const T* weight = params + L.weight_offset;
  T* gw = grads + L.weight_offset;
  T* gb = grads + L.bias_offset;
  for (int co = 0; co < L.out_c; ++co) {
    const T* drow = dout + static_cast<std::size_t>(co) * hw;
    T* gwrow = gw + static_cast<std::size_t>(co) * k;
    for (std::size_t kk = 0; kk < k; ++kk) gwrow[kk] += dot(drow, col + kk * hw, hw);
    gb[co] += std::accumulate(drow, drow + hw, T(0));
  }
  if (din == nullptr) return;
  // Reuse the column buffer for d(col).
  std::fill(col, col + k * hw, T(0));
  for (int co = 0; co < L.out_c; ++co) {
    const T* drow = dout + static_cast<std::size_t>(co) * hw;
    const T* wrow = weight + static_cast<std::size_t>(co) * k;
    for (std::size_t kk = 0; kk < k; ++kk) axpy(col + kk * hw, drow, wrow[kk], hw);
  }
  col2im_add(col, L.in_c, L.in_h, L.in_w, din);
}

template <typename T>
void init_params(std::vector<T>& params, const std::vector<LayerDesc>& layers, Head head,
                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::fill(params.begin(), params.end(), T(0));
  for (const auto& L : layers) {
    std::size_t fan_in = 0, count = 0;
    if (L.kind == LayerKind::Conv3x3) {
      fan_in = static_cast<std::size_t>(L.in_c) * kKernel;
      count = fan_in * static_cast<std::size_t>(L.out_c);
    } else if (L.kind == LayerKind::Linear) {
      fan_in = L.in_size();
      count = fan_in * static_cast<std::size_t>(L.out_c);
    } else {
      continue;
    }
    const double stddev =
        head == Head::Localization ? 0.03 : std::sqrt(2.0 / static_cast<double>(fan_in));
    std::normal_distribution<double> normal(0.0, stddev);
    for (std::size_t i = 0; i < count; ++i) {
      params[L.weight_offset + i] = static_cast<T>(normal(rng));
    }
  }
}

}  // namespace

std::string_view to_string(Head h) {
  return h == Head::Classification ? "classification" : "localization";
}

std::string_view to_string(LrSchedule s) {
  return s == LrSchedule::Constant ? "constant" : "cosine";
}

LrSchedule parse_lr_schedule(std::string_view s) {
  if (s == "constant") return LrSchedule::Constant;
  if (s == "cosine") return LrSchedule::Cosine;
  throw Error(ErrorKind::InvalidArgument, "unknown learning-rate schedule '" + std::string(s) + "'");
}

Head parse_head(std::string_view s) {
  if (s == "classification") return Head::Classification;
  if (s == "localization") return Head::Localization;
  throw Error(ErrorKind::InvalidArgument, "unknown head '" + std::string(s) + "'");
}

ArchConfig ArchConfig::desk(Head head) {
  ArchConfig cfg;
  cfg.head = head;
  return cfg;
}

ArchConfig ArchConfig::paper(Head head) {
  ArchConfig cfg;
  cfg.n_conv_blocks = 6;
  cfg.convs_per_block = 3;
  cfg.base_filters = 32;
  cfg.linear_widths = {1024, 512, 512, 256};
  cfg.pool_ceil = true;
  cfg.head = head;
  return cfg;
}

void ArchConfig::validate() const {
  if (n_conv_blocks < 1 || convs_per_block < 1 || base_filters < 1 || filter_growth < 1 ||
      max_filters < 1 || in_channels < 1 || in_size < 1) {
    throw Error(ErrorKind::InvalidArgument, "architecture counts must be >= 1");
  }
  for (int w : linear_widths) {
    if (w < 1) throw Error(ErrorKind::InvalidArgument, "linear widths must be >= 1");
  }
  std::size_t total = 0;
  plan_layers(*this, total);
}

std::size_t count_parameters(const ArchConfig& cfg) {
  std::size_t total = 0;
  plan_layers(cfg, total);
  return total;
}

template <typename T>
Network<T> Network<T>::build(const ArchConfig& cfg, std::uint64_t init_seed) {
  cfg.validate();
  Network<T> net;
  net.cfg_ = cfg;
  net.seed_ = init_seed;
  std::size_t total = 0;
  net.layers_ = plan_layers(cfg, total);
  net.params.assign(total, T(0));
  init_params(net.params, net.layers_, cfg.head, init_seed);
  return net;
}

template <typename T>
template <typename U>
Network<U> Network<T>::cast() const {
  Network<U> out;
  out.cfg_ = cfg_;
  out.layers_ = layers_;
  out.seed_ = seed_;
  out.norm_stats = norm_stats;
  out.params.assign(params.begin(), params.end());
  return out;
}

template <typename T>
std::span<const T> Network<T>::forward(std::span<const T> input, std::size_t n,
                                       Workspace<T>& ws) const {
  const std::size_t in_len = static_cast<std::size_t>(cfg_.in_channels) * cfg_.in_size *
                             cfg_.in_size;
  if (input.size() != n * in_len) {
    throw Error(ErrorKind::DimensionMismatch, "network input has the wrong shape");
  }
  ws.acts.resize(layers_.size() + 1);
  ws.argmax.resize(layers_.size());
  ws.acts[0].assign(input.begin(), input.end());
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const LayerDesc& L = layers_[li];
    const std::vector<T>& in = ws.acts[li];
    std::vector<T>& out = ws.acts[li + 1];
    const std::size_t isz = L.in_size(), osz = L.out_size();
    out.resize(n * osz);
    switch (L.kind) {
      case LayerKind::Conv3x3: {
        ws.scratch.resize(isz * kKernel);
        for (std::size_t s = 0; s < n; ++s) {
          conv_forward(L, params.data(), in.data() + s * isz, out.data() + s * osz,
                       ws.scratch.data());
        }
        break;
      }
      case LayerKind::Relu:
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] > T(0) ? in[i] : T(0);
        break;
      case LayerKind::Sigmoid:
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = T(1) / (T(1) + std::exp(-in[i]));
        break;
      case LayerKind::MaxPool2: {
        auto& idx = ws.argmax[li];
        idx.resize(n * osz);
        for (std::size_t s = 0; s < n; ++s) {
          for (int c = 0; c < L.out_c; ++c) {
            const T* plane = in.data() + s * isz + static_cast<std::size_t>(c) * L.in_h * L.in_w;
            for (int y = 0; y < L.out_h; ++y) {
              for (int x = 0; x < L.out_w; ++x) {
                std::uint32_t best = static_cast<std::uint32_t>((2 * y) * L.in_w + 2 * x);
                for (int dy = 0; dy < 2; ++dy) {
                  for (int dx = 0; dx < 2; ++dx) {
                    const int yy = 2 * y + dy, xx = 2 * x + dx;
                    if (yy >= L.in_h || xx >= L.in_w) continue;
                    const auto cand = static_cast<std::uint32_t>(yy * L.in_w + xx);
                    if (plane[cand] > plane[best]) best = cand;
                  }
                }
                const std::size_t o =
                    s * osz + (static_cast<std::size_t>(c) * L.out_h + y) * L.out_w + x;
                out[o] = plane[best];
                idx[o] = best;
              }
            }
          }
        }
        break;
      }
      case LayerKind::Linear: {
        const T* weight = params.data() + L.weight_offset;
        const T* bias = params.data() + L.bias_offset;
        for (std::size_t s = 0; s < n; ++s) {
          const T* x = in.data() + s * isz;
          for (int o = 0; o < L.out_c; ++o) {
            out[s * osz + o] = bias[o] + dot(weight + static_cast<std::size_t>(o) * isz, x, isz);
          }
        }
        break;
      }
    }
  }
  return ws.acts.back();
}

template <typename T>
void Network<T>::backward(Workspace<T>& ws, std::span<const T> grad_out, std::size_t n,
                          std::vector<T>& grads, bool grad_is_logit) const {
  grads.assign(params.size(), T(0));
  ws.grad_a.assign(grad_out.begin(), grad_out.end());
  std::size_t top = layers_.size();
  if (grad_is_logit && layers_.back().kind == LayerKind::Sigmoid) --top;
  for (std::size_t li = top; li-- > 0;) {
    const LayerDesc& L = layers_[li];
    const std::vector<T>& in = ws.acts[li];
    const std::vector<T>& out = ws.acts[li + 1];
    const std::size_t isz = L.in_size(), osz = L.out_size();
    const bool need_input_grad = li > 0;
    std::vector<T>& din = ws.grad_b;
    din.assign(n * isz, T(0));
    const std::vector<T>& dout = ws.grad_a;
    switch (L.kind) {
      case LayerKind::Conv3x3:
        ws.scratch.resize(isz * kKernel);
        for (std::size_t s = 0; s < n; ++s) {
          conv_backward(L, params.data(), in.data() + s * isz, dout.data() + s * osz,
                        grads.data(), need_input_grad ? din.data() + s * isz : nullptr,
                        ws.scratch.data());
        }
        break;
      case LayerKind::Relu:
        for (std::size_t i = 0; i < din.size(); ++i) din[i] = out[i] > T(0) ? dout[i] : T(0);
        break;
      case LayerKind::Sigmoid:
        for (std::size_t i = 0; i < din.size(); ++i) din[i] = dout[i] * out[i] * (T(1) - out[i]);
        break;
      case LayerKind::MaxPool2: {
        const auto& idx = ws.argmax[li];
        for (std::size_t s = 0; s < n; ++s) {
          for (int c = 0; c < L.out_c; ++c) {
            const std::size_t ibase = s * isz + static_cast<std::size_t>(c) * L.in_h * L.in_w;
            const std::size_t obase = s * osz + static_cast<std::size_t>(c) * L.out_h * L.out_w;
            for (std::size_t o = 0; o < static_cast<std::size_t>(L.out_h) * L.out_w; ++o) {
              din[ibase + idx[obase + o]] += dout[obase + o];
            }
          }
        }
        break;
      }
      case LayerKind::Linear: {
        const T* weight = params.data() + L.weight_offset;
        T* gw = grads.data() + L.weight_offset;
        T* gb = grads.data() + L.bias_offset;
        for (std::size_t s = 0; s < n; ++s) {
          const T* x = in.data() + s * isz;
          const T* dy = dout.data() + s * osz;
          T* dx = din.data() + s * isz;
          for (int o = 0; o < L.out_c; ++o) {
            if (dy[o] == T(0)) continue;
            axpy(gw + static_cast<std::size_t>(o) * isz, x, dy[o], isz);
            gb[o] += dy[o];
            if (need_input_grad) axpy(dx, weight + static_cast<std::size_t>(o) * isz, dy[o], isz);
          }
        }
        break;
      }
    }
    std::swap(ws.grad_a, ws.grad_b);
  }
}

template <typename T>
std::vector<T> Network<T>::prepare(std::span<const data::PatchSample* const> samples) const {
  constexpr std::size_t plane = static_cast<std::size_t>(data::kPatchSize) * data::kPatchSize;
  std::vector<T> x(samples.size() * data::kPatchPixels);
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto& px = samples[s]->pixels;
    if (px.size() != data::kPatchPixels) {
      throw Error(ErrorKind::DimensionMismatch, "patch has the wrong pixel count");
    }
    for (int ch = 0; ch < data::kChannels; ++ch) {
      const double mean = norm_stats.mean[ch];
      const double inv = 1.0 / norm_stats.stddev[ch];
      for (std::size_t i = 0; i < plane; ++i) {
        x[s * data::kPatchPixels + ch * plane + i] =
            static_cast<T>((static_cast<double>(px[ch * plane + i]) - mean) * inv);
      }
    }
  }
  return x;
}

double bce_loss(std::span<const double> p, std::span<const double> y) {
  if (p.size() != y.size() || p.empty()) {
    throw Error(ErrorKind::DimensionMismatch, "BCE needs equal, non-empty batches");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp(p[i], kProbEpsilon, 1.0 - kProbEpsilon);
    total += -(y[i] * std::log(q) + (1.0 - y[i]) * std::log(1.0 - q));
  }
  return total / static_cast<double>(p.size());
}

double mae_loss(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) {
    throw Error(ErrorKind::DimensionMismatch, "MAE batches differ in length");
  }
  if (pred.empty()) throw Error(ErrorKind::DimensionMismatch, "MAE batch is empty");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) total += std::fabs(pred[i] - truth[i]);
  return total / static_cast<double>(pred.size());
}

template <typename T>
void AdamW::update(std::vector<T>& params, const std::vector<T>& grads) {
  if (m.size() != params.size()) {
    m.assign(params.size(), 0.0);
    v.assign(params.size(), 0.0);
  }
  ++step;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  const double decay = 1.0 - lr * weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m[i] = beta1 * m[i] + (1.0 - beta1) * g;
    v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
    const double mhat = m[i] / c1;
    const double vhat = v[i] / c2;
    const double p = static_cast<double>(params[i]) * decay;
    params[i] = static_cast<T>(p - lr * mhat / (std::sqrt(vhat) + eps));
  }
}

namespace {

/// Loss plus d(loss)/d(last pre-activation); for classification this is the
/// logit gradient, which skips the sigmoid derivative.
template <typename T>
double head_loss(const Network<T>& net, std::span<const T> out,
                 std::span<const data::PatchSample* const> batch, std::vector<T>* grad) {
  const std::size_t n = batch.size();
  if (net.config().head == Head::Classification) {
    std::vector<double> p(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<double>(out[i]);
      y[i] = batch[i]->label;
    }
    if (grad) {
      grad->resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        (*grad)[i] = static_cast<T>((p[i] - y[i]) / static_cast<double>(n));
      }
    }
    return bce_loss(p, y);
  }
  std::vector<double> pred(2 * n), truth(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    if (batch[i]->label != 1 || !batch[i]->center) {
      throw Error(ErrorKind::InvalidArgument, "localization trains on positive samples only");
    }
    pred[2 * i] = static_cast<double>(out[2 * i]);
    pred[2 * i + 1] = static_cast<double>(out[2 * i + 1]);
    truth[2 * i] = batch[i]->center->row;
    truth[2 * i + 1] = batch[i]->center->col;
  }
  if (grad) {
    grad->resize(2 * n);
    const double scale = 1.0 / static_cast<double>(2 * n);
    for (std::size_t i = 0; i < 2 * n; ++i) {
      const double d = pred[i] - truth[i];
      (*grad)[i] = static_cast<T>(d > 0 ? scale : (d < 0 ? -scale : 0.0));
    }
  }
  return mae_loss(pred, truth);
}

template <typename T>
double batch_loss(const Network<T>& net, std::span<const data::PatchSample* const> batch,
                  Workspace<T>& ws) {
  const std::vector<T> x = net.prepare(batch);
  const auto out = net.forward(x, batch.size(), ws);
  return head_loss<T>(net, out, batch, nullptr);
}

}  // namespace

template <typename T>
double loss_and_gradient(const Network<T>& net, std::span<const data::PatchSample* const> batch,
                         Workspace<T>& ws, std::vector<T>& grads) {
  if (batch.empty()) throw Error(ErrorKind::InvalidArgument, "empty training batch");
  const std::vector<T> x = net.prepare(batch);
  const auto out = net.forward(x, batch.size(), ws);
  std::vector<T> dout;
  const double loss = head_loss<T>(net, out, batch, &dout);
  net.backward(ws, dout, batch.size(), grads,
               net.config().head == Head::Classification);
  return loss;
}

template <typename T>
double train_step(Network<T>& net, std::span<const data::PatchSample* const> batch,
                  AdamW& opt) {
  Workspace<T> ws;
  std::vector<T> grads;
  const double loss = loss_and_gradient(net, batch, ws, grads);
  if (!std::isfinite(loss)) {
    throw Error(ErrorKind::Numeric, "non-finite training loss at step " +
                                        std::to_string(opt.step + 1));
  }
  opt.update(net.params, grads);
  return loss;
}

template <typename T>
std::vector<double> train(Network<T>& net, std::span<const data::PatchSample> samples,
                          const TrainConfig& cfg) {
  std::vector<const data::PatchSample*> pool;
  for (const auto& s : samples) {
    if (net.config().head == Head::Classification || s.label == 1) pool.push_back(&s);
  }
  if (pool.empty()) throw Error(ErrorKind::InvalidArgument, "no usable training samples");
  AdamW opt;
  opt.lr = cfg.lr;
  opt.weight_decay = cfg.weight_decay;
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;
  const auto batch_size = static_cast<std::size_t>(std::max(1, cfg.batch_size));
  Workspace<T> ws;
  std::vector<T> grads;
  std::vector<double> history;
  history.reserve(static_cast<std::size_t>(cfg.steps));
  std::vector<const data::PatchSample*> batch;
  for (int step = 0; step < cfg.steps; ++step) {
    if (cfg.schedule == LrSchedule::Cosine) {
      opt.lr = 0.5 * cfg.lr * (1.0 + std::cos(std::numbers::pi * step / cfg.steps));
    }
    batch.clear();
    while (batch.size() < std::min(batch_size, pool.size())) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(pool[order[cursor++]]);
    }
    const double loss = loss_and_gradient<T>(net, batch, ws, grads);
    if (!std::isfinite(loss)) {
      throw Error(ErrorKind::Numeric, "non-finite training loss at step " +
                                          std::to_string(step + 1));
    }
    opt.update(net.params, grads);
    history.push_back(loss);
  }
  return history;
}

double gradient_check(Network<double>& net, std::span<const data::PatchSample* const> batch,
                      std::uint64_t seed, std::size_t subset, double h) {
  Workspace<double> ws;
  std::vector<double> grads;
  loss_and_gradient(net, batch, ws, grads);
  std::vector<std::size_t> idx(net.params.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min(subset, idx.size()));
  double worst = 0.0;
  for (std::size_t i : idx) {
    const double original = net.params[i];
    net.params[i] = original + h;
    const double up = batch_loss(net, batch, ws);
    net.params[i] = original - h;
    const double down = batch_loss(net, batch, ws);
    net.params[i] = original;
    const double numeric = (up - down) / (2.0 * h);
    const double rel = std::fabs(grads[i] - numeric) /
                       std::max(1e-8, std::fabs(grads[i]) + std::fabs(numeric));
    worst = std::max(worst, rel);
  }
  return worst;
}

template <typename T>
std::vector<double> predict(const Network<T>& net,
                            std::span<const data::PatchSample* const> patches) {
  constexpr std::size_t kChunk = 64;
  const std::size_t width = static_cast<std::size_t>(net.config().output_size());
  std::vector<double> result;
  result.reserve(patches.size() * width);
  Workspace<T> ws;
  for (std::size_t start = 0; start < patches.size(); start += kChunk) {
    const auto chunk = patches.subspan(start, std::min(kChunk, patches.size() - start));
    const std::vector<T> x = net.prepare(chunk);
    const auto out = net.forward(x, chunk.size(), ws);
    for (T v : out) result.push_back(static_cast<double>(v));
  }
  return result;
}

namespace {

void write_f64le(std::ostream& out, double value) {
  auto bits = std::bit_cast<std::uint64_t>(value);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xffu);
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

double read_f64le(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
    throw Error(ErrorKind::Io, "model blob is truncated");
  }
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_model(const Network<float>& net, std::ostream& out) {
  const ArchConfig& c = net.config();
  out << std::setprecision(17);
  out << "bytestorm-model 1\n";
  out << "head " << to_string(c.head) << "\n";
  out << "n_conv_blocks " << c.n_conv_blocks << "\n";
  out << "convs_per_block " << c.convs_per_block << "\n";
  out << "base_filters " << c.base_filters << "\n";
  out << "filter_growth " << c.filter_growth << "\n";
  out << "max_filters " << c.max_filters << "\n";
  out << "linear_widths";
  for (int w : c.linear_widths) out << " " << w;
  out << "\n";
  out << "input_shape " << c.in_channels << " " << c.in_size << " " << c.in_size << "\n";
  out << "pool_mode " << (c.pool_ceil ? "ceil" : "floor") << "\n";
  out << "norm_mean " << net.norm_stats.mean[0] << " " << net.norm_stats.mean[1] << "\n";
  out << "norm_std " << net.norm_stats.stddev[0] << " " << net.norm_stats.stddev[1] << "\n";
  out << "seed " << net.seed() << "\n";
  out << "param_count " << net.param_count() << "\n";
  out << "dtype f64le\n";
  out << "end_header\n";
  for (float p : net.params) write_f64le(out, static_cast<double>(p));
  if (!out) throw Error(ErrorKind::Io, "failed writing model");
}

Network<float> load_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "bytestorm-model 1") {
    throw Error(ErrorKind::Io, "not a bytestorm model file");
  }
  ArchConfig cfg;
  cfg.linear_widths.clear();
  data::NormStats norm;
  std::uint64_t seed = 0;
  std::size_t count = 0;
  bool ended = false;
  while (std::getline(in, line)) {
    if (line == "end_header") {
      ended = true;
      break;
    }
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    if (key == "head") {
      std::string v;
      fields >> v;
      cfg.head = parse_head(v);
    } else if (key == "n_conv_blocks") {
      fields >> cfg.n_conv_blocks;
    } else if (key == "convs_per_block") {
      fields >> cfg.convs_per_block;
    } else if (key == "base_filters") {
      fields >> cfg.base_filters;
    } else if (key == "filter_growth") {
      fields >> cfg.filter_growth;
    } else if (key == "max_filters") {
      fields >> cfg.max_filters;
    } else if (key == "linear_widths") {
      for (int w; fields >> w;) cfg.linear_widths.push_back(w);
    } else if (key == "input_shape") {
      int h = 0;
      fields >> cfg.in_channels >> cfg.in_size >> h;
    } else if (key == "pool_mode") {
      std::string v;
      fields >> v;
      cfg.pool_ceil = v == "ceil";
    } else if (key == "norm_mean") {
      fields >> norm.mean[0] >> norm.mean[1];
    } else if (key == "norm_std") {
      fields >> norm.stddev[0] >> norm.stddev[1];
    } else if (key == "seed") {
      fields >> seed;
    } else if (key == "param_count") {
      fields >> count;
    } else if (key == "dtype") {
      std::string v;
      fields >> v;
      if (v != "f64le") throw Error(ErrorKind::Io, "unsupported model dtype " + v);
    } else {
      throw Error(ErrorKind::Io, "unknown model header key '" + key + "'");
    }
    if (fields.fail() && !fields.eof()) {
      throw Error(ErrorKind::Io, "malformed model header line '" + line + "'");
    }
  }
  if (!ended) throw Error(ErrorKind::Io, "model header is not terminated");
  Network<float> net = Network<float>::build(cfg, seed);
  if (net.param_count() != count) {
    throw Error(ErrorKind::Io, "model parameter count does not match its architecture");
  }
  net.norm_stats = norm;
  for (std::size_t i = 0; i < count; ++i) net.params[i] = static_cast<float>(read_f64le(in));
  return net;
}

void save_model(const Network<float>& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  save_model(net, out);
}

Network<float> load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path);
  return load_model(in);
}

template class Network<float>;
template class Network<double>;
template Network<double> Network<float>::cast<double>() const;
template Network<float> Network<double>::cast<float>() const;
template void AdamW::update<float>(std::vector<float>&, const std::vector<float>&);
template void AdamW::update<double>(std::vector<double>&, const std::vector<double>&);
template double loss_and_gradient<float>(const Network<float>&,
                                         std::span<const data::PatchSample* const>,
                                         Workspace<float>&, std::vector<float>&);
template double loss_and_gradient<double>(const Network<double>&,
                                          std::span<const data::PatchSample* const>,
                                          Workspace<double>&, std::vector<double>&);
template double train_step<float>(Network<float>&, std::span<const data::PatchSample* const>,
                                  AdamW&);
template double train_step<double>(Network<double>&, std::span<const data::PatchSample* const>,
                                   AdamW&);
template std::vector<double> train<float>(Network<float>&, std::span<const data::PatchSample>,
                                          const TrainConfig&);
template std::vector<double> train<double>(Network<double>&, std::span<const data::PatchSample>,
                                           const TrainConfig&);
template std::vector<double> predict<float>(const Network<float>&,
                                            std::span<const data::PatchSample* const>);
template std::vector<double> predict<double>(const Network<double>&,
                                             std::span<const data::PatchSample* const>);

}  // namespace bytestorm::nn
