#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ssd/layer.hpp"
#include "ssd/tensor.hpp"

namespace ssd {

/// Sizes of one Mamba-2 style block. The inner width is heads * head_dim.
struct BlockConfig {
    enum class Inner { blocked, recurrent };

    std::size_t d_model = 16;
    std::size_t heads = 2;
    std::size_t head_dim = 16;
    std::size_t state_dim = 8;
    std::size_t groups = 1;        ///< B/C groups (G)
    std::size_t conv_width = 4;    ///< w
    std::size_t norm_groups = 1;   ///< g
    std::size_t chunk = 16;        ///< Q for the blocked inner layer
    Inner inner = Inner::blocked;

    std::size_t inner_dim() const noexcept { return heads * head_dim; }
    /// Width of the fused (dt, B, C) projection: H + 2 G N.
    std::size_t dbc_dim() const noexcept { return heads + 2 * groups * state_dim; }
    /// Throws ConfigError on zero sizes or groups that do not divide their axis.
    void validate() const;
};

template <std::floating_point T>
struct BlockWeights {
    BlockConfig config;
    BasicTensor<T> w_x;         ///< (d, ed)
    BasicTensor<T> w_z;         ///< (d, ed)
    BasicTensor<T> w_dbc;       ///< (d, H + 2GN), columns [dt | B | C]
    BasicTensor<T> conv;        ///< (w, ed); row w-1 multiplies the current token
    BasicTensor<T> norm_scale;  ///< (ed)
    BasicTensor<T> norm_shift;  ///< (ed)
    BasicTensor<T> w_o;         ///< (ed, d)
    BasicTensor<T> a_base;      ///< (H), strictly negative

    /// Throws DimensionError when a tensor does not match `config`.
    void validate() const;

    template <std::floating_point U>
    BlockWeights<U> cast() const {
        return {config,         w_x.template cast<U>(),        w_z.template cast<U>(),
                w_dbc.template cast<U>(), conv.template cast<U>(), norm_scale.template cast<U>(),
                norm_shift.template cast<U>(), w_o.template cast<U>(), a_base.template cast<U>()};
    }
};

/// Seeded initialisation: projections N(0, 1/fan_in), conv taps N(0, 1/w),
/// norm scale near 1, a_base uniform in [-2, -0.5].
BlockWeights<double> random_block_weights(const BlockConfig& config, std::uint64_t seed);

inline constexpr double kGroupNormEps = 1e-5;

/// State carried across a cut in the time axis: the SSM state per head and
/// the last w-1 conv inputs.
template <std::floating_point T>
struct BlockCarry {
    BasicTensor<T> ssm;   ///< (H, N, P)
    BasicTensor<T> conv;  ///< (w-1, ed)

    std::size_t floats() const noexcept { return ssm.size() + conv.size(); }
};

/// Forward pass on u:(T, d):
///   x = u W_x, z = u W_z, (dt, B, C) = u W_dbc
///   x <- causal depthwise conv of x
///   a_t(h) = exp(softplus(dt_t(h)) a_base(h))
///   y = SSD(X = x, A = a, B, C) with the grouped(G) head pattern
///   y <- groupnorm(y * swish(z)), out = y W_o
template <std::floating_point T>
BasicTensor<T> mamba2_block_forward(const BlockWeights<T>& weights, const BasicTensor<T>& u);

/// Same forward with an incoming carry (empty tensors mean zeros) and the
/// outgoing carry written to `carry_out` when non-null.
template <std::floating_point T>
BasicTensor<T> mamba2_block_forward(const BlockWeights<T>& weights, const BasicTensor<T>& u,
                                    const BlockCarry<T>& carry_in, BlockCarry<T>* carry_out);

/// Counters of the simulated collectives.
struct CommLog {
    std::size_t all_reduces = 0;
    std::size_t messages = 0;
    std::size_t message_floats = 0;
};

/// Index ranges owned by one tensor-parallel shard.
struct ShardRange {
    std::size_t head_begin = 0, head_end = 0;
    std::size_t group_begin = 0, group_end = 0;
    std::size_t channel_begin = 0, channel_end = 0;  ///< slice of ed
};

struct ShardPlan {
    std::size_t degree = 1;
    std::vector<ShardRange> shards;
};

/// Even split of heads, B/C groups and norm groups over `degree` shards.
/// Throws ConfigError when H, G or g is not divisible by `degree`.
ShardPlan make_shard_plan(const BlockConfig& config, std::size_t degree);

/// Weights of shard `index`: column slices of W_x, W_z, conv, norm and the
/// matching dt/B/C columns of W_dbc, row slice of W_o.
template <std::floating_point T>
BlockWeights<T> shard_weights(const BlockWeights<T>& weights, const ShardPlan& plan, std::size_t index);

/// Concatenates shard weights back into the unsharded block.
template <std::floating_point T>
BlockWeights<T> reconstruct_weights(const std::vector<BlockWeights<T>>& shards, const ShardPlan& plan);

/// Runs every shard forward and sums the partial outputs in shard order, the
/// one all-reduce of the block.
template <std::floating_point T>
BasicTensor<T> tp_forward(const BlockWeights<T>& weights, const ShardPlan& plan, const BasicTensor<T>& u,
                          CommLog* log = nullptr);

/// Splits T into `workers` contiguous spans (sizes differ by at most one).
/// Worker i receives the carry of worker i-1 as one message. Throws
/// ConfigError unless 1 <= workers <= T.
template <std::floating_point T>
BasicTensor<T> sp_forward(const BlockWeights<T>& weights, std::size_t workers, const BasicTensor<T>& u,
                          CommLog* log = nullptr);

/// Packs sequences into one stream, sets a_t = 0 on the first token of every
/// later sequence and drops conv taps that reach into the previous one.
template <std::floating_point T>
std::vector<BasicTensor<T>> varlen_forward(const BlockWeights<T>& weights,
                                           const std::vector<BasicTensor<T>>& sequences);

// Tensor bundles: a flat little-endian f64 stream `<stem>.bin` and a JSON
// sidecar `<stem>.json` listing each tensor's name, shape and offset.

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

void write_bundle(const std::filesystem::path& stem, const NamedTensors& tensors);
NamedTensors read_bundle(const std::filesystem::path& stem);

/// Weights as a bundle whose sidecar also records the block config.
void save_block_weights(const std::filesystem::path& stem, const BlockWeights<double>& weights);
BlockWeights<double> load_block_weights(const std::filesystem::path& stem);

}  // namespace ssd
