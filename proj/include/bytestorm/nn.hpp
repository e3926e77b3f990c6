#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bytestorm/data.hpp"

namespace bytestorm::nn {

enum class Head { Classification, Localization };

std::string_view to_string(Head h);
Head parse_head(std::string_view s);

/// VGG-style detector layout: conv blocks (3x3 conv + ReLU repeated, then a
/// 2x2 max-pool), linear blocks (linear + ReLU) and a task head.
struct ArchConfig {
  int n_conv_blocks = 3;
  int convs_per_block = 2;
  int base_filters = 8;
  int filter_growth = 2;
  int max_filters = 1024;
  std::vector<int> linear_widths{64, 32};
  Head head = Head::Classification;
  int in_channels = data::kChannels;
  int in_size = data::kPatchSize;
  bool pool_ceil = false;  // ceil-mode pooling keeps odd sizes from vanishing

  /// Small layout that trains in minutes on one core.
  static ArchConfig desk(Head head);
  /// Six blocks of three convolutions, 32 to 1024 filters, [1024,512,512,256].
  static ArchConfig paper(Head head);

  int output_size() const { return head == Head::Classification ? 1 : 2; }
  void validate() const;

  friend bool operator==(const ArchConfig&, const ArchConfig&) = default;
};

enum class LayerKind { Conv3x3, Relu, MaxPool2, Linear, Sigmoid };

struct LayerDesc {
  LayerKind kind;
  int in_c = 0, in_h = 0, in_w = 0;
  int out_c = 0, out_h = 0, out_w = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;

  std::size_t in_size() const { return static_cast<std::size_t>(in_c) * in_h * in_w; }
  std::size_t out_size() const { return static_cast<std::size_t>(out_c) * out_h * out_w; }
};

/// Per-call activation cache needed by backward().
template <typename T>
struct Workspace {
  std::vector<std::vector<T>> acts;
  std::vector<std::vector<std::uint32_t>> argmax;
  std::vector<T> scratch;
  std::vector<T> grad_a;
  std::vector<T> grad_b;
};

template <typename T>
class Network {
 public:
  static Network build(const ArchConfig& cfg, std::uint64_t init_seed);

  const ArchConfig& config() const { return cfg_; }
  const std::vector<LayerDesc>& layers() const { return layers_; }
  std::size_t param_count() const { return params.size(); }
  std::uint64_t seed() const { return seed_; }

  /// Batched forward pass over `n` normalized inputs of in_channels x in_size^2.
  /// Fills ws and returns a view of the n x output_size() result.
  std::span<const T> forward(std::span<const T> input, std::size_t n, Workspace<T>& ws) const;

  /// Backpropagates d(loss)/d(output) through the cached forward pass and
  /// overwrites `grads` (same length as params). With grad_is_logit the
  /// gradient is taken w.r.t. the input of a final sigmoid.
  void backward(Workspace<T>& ws, std::span<const T> grad_out, std::size_t n,
                std::vector<T>& grads, bool grad_is_logit = false) const;

  /// Standardizes patches with norm_stats into a contiguous input buffer.
  std::vector<T> prepare(std::span<const data::PatchSample* const> samples) const;

  std::vector<T> params;
  data::NormStats norm_stats;

  template <typename U>
  Network<U> cast() const;

 private:
  template <typename U>
  friend class Network;

  ArchConfig cfg_;
  std::vector<LayerDesc> layers_;
  std::uint64_t seed_ = 0;
};

/// Total parameter count of an architecture without allocating it.
std::size_t count_parameters(const ArchConfig& cfg);

/// Mean binary cross entropy with probabilities clamped to [1e-7, 1 - 1e-7].
double bce_loss(std::span<const double> p, std::span<const double> y);

/// Mean absolute error over every coordinate component.
double mae_loss(std::span<const double> pred, std::span<const double> truth);

inline constexpr double kProbEpsilon = 1e-7;

/// Decoupled-weight-decay Adam.
struct AdamW {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-2;
  std::int64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;

  template <typename T>
  void update(std::vector<T>& params, const std::vector<T>& grads);
};

/// Loss of `net` on a batch plus the parameter gradient. Classification uses
/// every sample's label; localization requires positives only.
template <typename T>
double loss_and_gradient(const Network<T>& net, std::span<const data::PatchSample* const> batch,
                         Workspace<T>& ws, std::vector<T>& grads);

/// One optimizer step; returns the loss measured before the update.
template <typename T>
double train_step(Network<T>& net, std::span<const data::PatchSample* const> batch,
                  AdamW& opt);

enum class LrSchedule { Constant, Cosine };

std::string_view to_string(LrSchedule s);
LrSchedule parse_lr_schedule(std::string_view s);

struct TrainConfig {
  int steps = 500;
  int batch_size = 16;
  std::uint64_t seed = 1;
  double lr = 1e-4;
  double weight_decay = 1e-2;
  /// Cosine anneals the rate from lr to 0 over `steps`.
  LrSchedule schedule = LrSchedule::Constant;
};

/// Mini-batch training over shuffled epochs. Returns the per-step losses.
template <typename T>
std::vector<double> train(Network<T>& net, std::span<const data::PatchSample> samples,
                          const TrainConfig& cfg);

/// Max relative error between analytic and central-difference gradients over
/// a random subset of at most `subset` parameters.
double gradient_check(Network<double>& net, std::span<const data::PatchSample* const> batch,
                      std::uint64_t seed, std::size_t subset = 100, double h = 1e-5);

/// Classification: one score per patch. Localization: (row, col) pairs.
template <typename T>
std::vector<double> predict(const Network<T>& net,
                            std::span<const data::PatchSample* const> patches);

/// Text header followed by little-endian float64 parameters in declaration order.
void save_model(const Network<float>& net, std::ostream& out);
Network<float> load_model(std::istream& in);
void save_model(const Network<float>& net, const std::string& path);
Network<float> load_model(const std::string& path);

}  // namespace bytestorm::nn
