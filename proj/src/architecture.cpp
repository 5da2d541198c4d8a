#include "ssd/architecture.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "ssd/contract.hpp"
#include "ssd/random.hpp"

namespace ssd {

void BlockConfig::validate() const {
    auto positive = [](std::size_t v, const char* name) {
        if (v == 0) throw ConfigError(std::string(name) + " must be >= 1");
    };
    positive(d_model, "d_model");
    positive(heads, "heads");
    positive(head_dim, "head_dim");
    positive(state_dim, "state_dim");
    positive(groups, "groups");
    positive(conv_width, "conv_width");
    positive(norm_groups, "norm_groups");
    positive(chunk, "chunk");
    if (heads % groups != 0) throw ConfigError("B/C groups must divide the head count");
    if (inner_dim() % norm_groups != 0) throw ConfigError("norm groups must divide the inner width");
}

template <std::floating_point T>
void BlockWeights<T>::validate() const {
    config.validate();
    const std::size_t d = config.d_model, ed = config.inner_dim();
    auto expect = [](const BasicTensor<T>& t, const Shape& s, const char* name) {
        if (t.shape() != s) {
            throw DimensionError(std::string(name) + " has shape " + shape_string(t.shape()) + ", expected " +
                                 shape_string(s));
        }
    };
    expect(w_x, {d, ed}, "W_x");
    expect(w_z, {d, ed}, "W_z");
    expect(w_dbc, {d, config.dbc_dim()}, "W_dbc");
    expect(conv, {config.conv_width, ed}, "conv kernel");
    expect(norm_scale, {ed}, "norm scale");
    expect(norm_shift, {ed}, "norm shift");
    expect(w_o, {ed, d}, "W_o");
    expect(a_base, {config.heads}, "a_base");
}

BlockWeights<double> random_block_weights(const BlockConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(seed);
    const std::size_t d = config.d_model, ed = config.inner_dim();
    const double in_sd = 1.0 / std::sqrt(static_cast<double>(d));
    BlockWeights<double> w;
    w.config = config;
    w.w_x = rng.normal_tensor({d, ed}, in_sd);
    w.w_z = rng.normal_tensor({d, ed}, in_sd);
    w.w_dbc = rng.normal_tensor({d, config.dbc_dim()}, in_sd);
    w.conv = rng.normal_tensor({config.conv_width, ed}, 1.0 / std::sqrt(static_cast<double>(config.conv_width)));
    w.norm_scale = rng.normal_tensor({ed}, 0.1);
    for (double& v : w.norm_scale.data()) v += 1.0;
    w.norm_shift = rng.normal_tensor({ed}, 0.1);
    w.w_o = rng.normal_tensor({ed, d}, 1.0 / std::sqrt(static_cast<double>(ed)));
    w.a_base = rng.uniform_tensor({config.heads}, -2.0, -0.5);
    return w;
}

namespace {

template <typename T>
T softplus(T v) {
    return v > T{20} ? v : std::log1p(std::exp(v));
}

template <typename T>
T sigmoid(T v) {
    return T{1} / (T{1} + std::exp(-v));
}

// `starts` holds the first index of every packed sequence after the first.
template <typename T>
BasicTensor<T> forward_impl(const BlockWeights<T>& weights, const BasicTensor<T>& u, const BlockCarry<T>& carry_in,
                            BlockCarry<T>* carry_out, const std::vector<std::size_t>& starts) {
    weights.validate();
    const BlockConfig& cfg = weights.config;
    if (u.rank() != 2 || u.dim(1) != cfg.d_model) {
        throw DimensionError("block input must be (T, " + std::to_string(cfg.d_model) + "), got " +
                             shape_string(u.shape()));
    }
    const std::size_t t_len = u.dim(0), ed = cfg.inner_dim(), w = cfg.conv_width;
    const std::size_t heads = cfg.heads, n = cfg.state_dim, p = cfg.head_dim, groups = cfg.groups;
    if (!carry_in.conv.empty() && carry_in.conv.shape() != Shape{w - 1, ed}) {
        throw DimensionError("conv carry must be " + shape_string({w - 1, ed}));
    }

    const BasicTensor<T> x = matmul(u, weights.w_x);
    const BasicTensor<T> z = matmul(u, weights.w_z);
    const BasicTensor<T> dbc = matmul(u, weights.w_dbc);

    // sequence start governing each token, for dropping conv taps
    std::vector<std::ptrdiff_t> floor(t_len, std::numeric_limits<std::ptrdiff_t>::min());
    for (std::size_t s : starts)
        for (std::size_t t = s; t < t_len; ++t) floor[t] = static_cast<std::ptrdiff_t>(s);

    BasicTensor<T> xc({t_len, ed});
    for (std::size_t t = 0; t < t_len; ++t) {
        for (std::size_t k = 0; k < w; ++k) {
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + k) - static_cast<std::ptrdiff_t>(w - 1);
            if (src < floor[t]) continue;
            for (std::size_t c = 0; c < ed; ++c) {
                T v{0};
                if (src >= 0) {
                    v = x(static_cast<std::size_t>(src), c);
                } else if (!carry_in.conv.empty()) {
                    v = carry_in.conv(static_cast<std::size_t>(static_cast<std::ptrdiff_t>(w - 1) + src), c);
                }
                xc(t, c) += weights.conv(k, c) * v;
            }
        }
    }

    SSDInputs<T> in;
    in.pattern = HeadPattern::grouped(groups);
    in.X = xc.reshaped({t_len, heads, p});
    in.A = BasicTensor<T>({t_len, heads});
    in.B = BasicTensor<T>({t_len, groups, n});
    in.C = BasicTensor<T>({t_len, groups, n});
    for (std::size_t t = 0; t < t_len; ++t) {
        for (std::size_t h = 0; h < heads; ++h) in.A(t, h) = std::exp(softplus(dbc(t, h)) * weights.a_base(h));
        for (std::size_t g = 0; g < groups; ++g) {
            for (std::size_t k = 0; k < n; ++k) {
                in.B(t, g, k) = dbc(t, heads + g * n + k);
                in.C(t, g, k) = dbc(t, heads + groups * n + g * n + k);
            }
        }
    }
    for (std::size_t s : starts)
        for (std::size_t h = 0; h < heads; ++h) in.A(s, h) = T{0};

    SSDRun<T> run = cfg.inner == BlockConfig::Inner::blocked ? ssd_blocked(in, cfg.chunk, carry_in.ssm)
                                                             : ssd_recurrent(in, carry_in.ssm);

    BasicTensor<T> y = run.y.reshaped({t_len, ed});
    const std::size_t width = ed / cfg.norm_groups;
    const T eps = static_cast<T>(kGroupNormEps);
    for (std::size_t t = 0; t < t_len; ++t) {
        for (std::size_t c = 0; c < ed; ++c) y(t, c) *= z(t, c) * sigmoid(z(t, c));
        for (std::size_t g = 0; g < cfg.norm_groups; ++g) {
            T mean{0}, var{0};
            for (std::size_t c = g * width; c < (g + 1) * width; ++c) mean += y(t, c);
            mean /= static_cast<T>(width);
            for (std::size_t c = g * width; c < (g + 1) * width; ++c) var += (y(t, c) - mean) * (y(t, c) - mean);
            var /= static_cast<T>(width);
            const T inv = T{1} / std::sqrt(var + eps);
            for (std::size_t c = g * width; c < (g + 1) * width; ++c)
                y(t, c) = (y(t, c) - mean) * inv * weights.norm_scale(c) + weights.norm_shift(c);
        }
    }

    if (carry_out) {
        carry_out->ssm = std::move(run.h_final);
        carry_out->conv = BasicTensor<T>({w - 1, ed});
        for (std::size_t r = 0; r + 1 < w; ++r) {
            // row r of the new halo is token t_len - (w-1) + r of [old halo | x]
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t_len + r) - static_cast<std::ptrdiff_t>(w - 1);
            for (std::size_t c = 0; c < ed; ++c) {
                if (src >= 0) {
                    carry_out->conv(r, c) = x(static_cast<std::size_t>(src), c);
                } else if (!carry_in.conv.empty()) {
                    carry_out->conv(r, c) =
                        carry_in.conv(static_cast<std::size_t>(static_cast<std::ptrdiff_t>(w - 1) + src), c);
                }
            }
        }
    }
    return matmul(y, weights.w_o);
}

template <typename T>
BasicTensor<T> columns(const BasicTensor<T>& m, std::size_t c0, std::size_t c1) {
    BasicTensor<T> out({m.dim(0), c1 - c0});
    for (std::size_t r = 0; r < m.dim(0); ++r)
        for (std::size_t c = c0; c < c1; ++c) out(r, c - c0) = m(r, c);
    return out;
}

template <typename T>
BasicTensor<T> rows(const BasicTensor<T>& m, std::size_t r0, std::size_t r1) {
    const std::size_t w = m.rank() == 1 ? 1 : m.dim(1);
    Shape shape = m.shape();
    shape[0] = r1 - r0;
    std::vector<T> data(m.data().begin() + r0 * w, m.data().begin() + r1 * w);
    return BasicTensor<T>(shape, std::move(data));
}

template <typename T>
void append_columns(BasicTensor<T>& dst, std::size_t at, const BasicTensor<T>& src, std::size_t c0, std::size_t c1) {
    for (std::size_t r = 0; r < dst.dim(0); ++r)
        for (std::size_t c = c0; c < c1; ++c) dst(r, at + c - c0) = src(r, c);
}

template <typename T>
void append_rows(BasicTensor<T>& dst, std::size_t at, const BasicTensor<T>& src) {
    std::copy(src.data().begin(), src.data().end(), dst.data().begin() + at);
}

BlockConfig shard_config(const BlockConfig& cfg, std::size_t degree) {
    BlockConfig s = cfg;
    s.heads = cfg.heads / degree;
    s.groups = cfg.groups / degree;
    s.norm_groups = cfg.norm_groups / degree;
    return s;
}

}  // namespace

template <std::floating_point T>
BasicTensor<T> mamba2_block_forward(const BlockWeights<T>& weights, const BasicTensor<T>& u) {
    return forward_impl<T>(weights, u, BlockCarry<T>{}, nullptr, {});
}

template <std::floating_point T>
BasicTensor<T> mamba2_block_forward(const BlockWeights<T>& weights, const BasicTensor<T>& u,
                                    const BlockCarry<T>& carry_in, BlockCarry<T>* carry_out) {
    return forward_impl<T>(weights, u, carry_in, carry_out, {});
}

ShardPlan make_shard_plan(const BlockConfig& config, std::size_t degree) {
    config.validate();
    if (degree == 0) throw ConfigError("tensor-parallel degree must be >= 1");
    auto divisible = [degree](std::size_t v, const char* name) {
        if (v % degree != 0) {
            throw ConfigError(std::string(name) + "=" + std::to_string(v) + " is not divisible by degree " +
                              std::to_string(degree));
        }
    };
    divisible(config.heads, "heads");
    divisible(config.groups, "groups");
    divisible(config.norm_groups, "norm_groups");
    ShardPlan plan;
    plan.degree = degree;
    const std::size_t hs = config.heads / degree, gs = config.groups / degree;
    for (std::size_t i = 0; i < degree; ++i) {
        plan.shards.push_back({i * hs, (i + 1) * hs, i * gs, (i + 1) * gs, i * hs * config.head_dim,
                               (i + 1) * hs * config.head_dim});
    }
    return plan;
}

template <std::floating_point T>
BlockWeights<T> shard_weights(const BlockWeights<T>& weights, const ShardPlan& plan, std::size_t index) {
    weights.validate();
    const BlockConfig& cfg = weights.config;
    const ShardRange& r = plan.shards.at(index);
    const std::size_t n = cfg.state_dim, heads = cfg.heads, groups = cfg.groups;
    BlockWeights<T> s;
    s.config = shard_config(cfg, plan.degree);
    s.w_x = columns(weights.w_x, r.channel_begin, r.channel_end);
    s.w_z = columns(weights.w_z, r.channel_begin, r.channel_end);
    s.w_dbc = BasicTensor<T>({cfg.d_model, s.config.dbc_dim()});
    const std::size_t sh = r.head_end - r.head_begin, sg = (r.group_end - r.group_begin) * n;
    append_columns(s.w_dbc, 0, weights.w_dbc, r.head_begin, r.head_end);
    append_columns(s.w_dbc, sh, weights.w_dbc, heads + r.group_begin * n, heads + r.group_end * n);
    append_columns(s.w_dbc, sh + sg, weights.w_dbc, heads + groups * n + r.group_begin * n,
                   heads + groups * n + r.group_end * n);
    s.conv = columns(weights.conv, r.channel_begin, r.channel_end);
    s.norm_scale = rows(weights.norm_scale, r.channel_begin, r.channel_end);
    s.norm_shift = rows(weights.norm_shift, r.channel_begin, r.channel_end);
    s.w_o = rows(weights.w_o, r.channel_begin, r.channel_end);
    s.a_base = rows(weights.a_base, r.head_begin, r.head_end);
    return s;
}

template <std::floating_point T>
BlockWeights<T> reconstruct_weights(const std::vector<BlockWeights<T>>& shards, const ShardPlan& plan) {
    if (shards.size() != plan.degree || shards.empty()) throw ConfigError("shard count does not match the plan");
    BlockConfig cfg = shards.front().config;
    cfg.heads *= plan.degree;
    cfg.groups *= plan.degree;
    cfg.norm_groups *= plan.degree;
    const std::size_t d = cfg.d_model, ed = cfg.inner_dim(), n = cfg.state_dim;
    BlockWeights<T> w;
    w.config = cfg;
    w.w_x = BasicTensor<T>({d, ed});
    w.w_z = BasicTensor<T>({d, ed});
    w.w_dbc = BasicTensor<T>({d, cfg.dbc_dim()});
    w.conv = BasicTensor<T>({cfg.conv_width, ed});
    w.norm_scale = BasicTensor<T>({ed});
    w.norm_shift = BasicTensor<T>({ed});
    w.w_o = BasicTensor<T>({ed, d});
    w.a_base = BasicTensor<T>({cfg.heads});
    for (std::size_t i = 0; i < shards.size(); ++i) {
        const auto& s = shards[i];
        const ShardRange& r = plan.shards.at(i);
        const std::size_t cw = r.channel_end - r.channel_begin;
        const std::size_t sh = r.head_end - r.head_begin, sg = (r.group_end - r.group_begin) * n;
        append_columns(w.w_x, r.channel_begin, s.w_x, 0, cw);
        append_columns(w.w_z, r.channel_begin, s.w_z, 0, cw);
        append_columns(w.conv, r.channel_begin, s.conv, 0, cw);
        append_columns(w.w_dbc, r.head_begin, s.w_dbc, 0, sh);
        append_columns(w.w_dbc, cfg.heads + r.group_begin * n, s.w_dbc, sh, sh + sg);
        append_columns(w.w_dbc, cfg.heads + cfg.groups * n + r.group_begin * n, s.w_dbc, sh + sg, sh + 2 * sg);
        append_rows(w.norm_scale, r.channel_begin, s.norm_scale);
        append_rows(w.norm_shift, r.channel_begin, s.norm_shift);
        append_rows(w.w_o, r.channel_begin * d, s.w_o);
        append_rows(w.a_base, r.head_begin, s.a_base);
    }
    return w;
}

template <std::floating_point T>
BasicTensor<T> tp_forward(const BlockWeights<T>& weights, const ShardPlan& plan, const BasicTensor<T>& u,
                          CommLog* log) {
    const ShardPlan checked = make_shard_plan(weights.config, plan.degree);
    if (plan.shards.size() != checked.shards.size()) throw ConfigError("shard plan has the wrong shard count");
    std::vector<BasicTensor<T>> partial;
    for (std::size_t i = 0; i < plan.degree; ++i)
        partial.push_back(mamba2_block_forward(shard_weights(weights, plan, i), u));
    // simulated all-reduce, fixed shard order
    BasicTensor<T> out = partial.front();
    for (std::size_t i = 1; i < partial.size(); ++i)
        for (std::size_t j = 0; j < out.size(); ++j) out.data()[j] += partial[i].data()[j];
    if (log) ++log->all_reduces;
    return out;
}

template <std::floating_point T>
BasicTensor<T> sp_forward(const BlockWeights<T>& weights, std::size_t workers, const BasicTensor<T>& u,
                          CommLog* log) {
    const std::size_t t_len = u.rank() == 2 ? u.dim(0) : 0;
    if (workers == 0 || workers > t_len) {
        throw ConfigError("sequence parallelism needs 1 <= workers <= T, got workers=" + std::to_string(workers) +
                          " T=" + std::to_string(t_len));
    }
    const std::size_t d = u.dim(1), base = t_len / workers, extra = t_len % workers;
    BasicTensor<T> out({t_len, weights.config.d_model});
    BlockCarry<T> carry;
    std::size_t start = 0;
    for (std::size_t i = 0; i < workers; ++i) {
        const std::size_t len = base + (i < extra ? 1 : 0);
        BasicTensor<T> span({len, d});
        std::copy_n(u.data().begin() + start * d, len * d, span.data().begin());
        BlockCarry<T> next;
        const auto part = mamba2_block_forward(weights, span, carry, &next);
        std::copy(part.data().begin(), part.data().end(), out.data().begin() + start * out.dim(1));
        if (i + 1 < workers && log) {
            ++log->messages;
            log->message_floats += next.floats();
        }
        carry = std::move(next);
        start += len;
    }
    return out;
}

template <std::floating_point T>
std::vector<BasicTensor<T>> varlen_forward(const BlockWeights<T>& weights,
                                           const std::vector<BasicTensor<T>>& sequences) {
    if (sequences.empty()) throw std::invalid_argument("varlen_forward needs at least one sequence");
    const std::size_t d = weights.config.d_model;
    std::size_t total = 0;
    std::vector<std::size_t> starts;
    for (const auto& s : sequences) {
        if (s.rank() != 2 || s.dim(1) != d) throw DimensionError("every sequence must be (T_i, d_model)");
        if (total > 0) starts.push_back(total);
        total += s.dim(0);
    }
    BasicTensor<T> packed({total, d});
    std::size_t at = 0;
    for (const auto& s : sequences) {
        std::copy(s.data().begin(), s.data().end(), packed.data().begin() + at);
        at += s.size();
    }
    // an empty sequence contributes no tokens and so no boundary either
    std::vector<std::size_t> unique;
    for (std::size_t s : starts)
        if (s < total && (unique.empty() || unique.back() != s)) unique.push_back(s);
    const auto y = forward_impl<T>(weights, packed, BlockCarry<T>{}, nullptr, unique);
    std::vector<BasicTensor<T>> out;
    at = 0;
    for (const auto& s : sequences) {
        BasicTensor<T> piece({s.dim(0), d});
        std::copy_n(y.data().begin() + at, piece.size(), piece.data().begin());
        at += piece.size();
        out.push_back(std::move(piece));
    }
    return out;
}

namespace {

using nlohmann::json;

json bundle_sidecar(const NamedTensors& tensors) {
    json entries = json::array();
    std::size_t offset = 0;
    for (const auto& [name, t] : tensors) {
        entries.push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}});
        offset += t.size();
    }
    return {{"format", "f64-le"}, {"count", offset}, {"tensors", entries}};
}

void write_files(const std::filesystem::path& stem, const NamedTensors& tensors, const json& sidecar) {
    std::filesystem::path bin = stem, meta = stem;
    bin += ".bin";
    meta += ".json";
    std::ofstream out(bin, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + bin.string());
    for (const auto& [name, t] : tensors) {
        for (double v : t.data()) {
            auto bits = std::bit_cast<std::uint64_t>(v);
            char bytes[8];
            for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
            out.write(bytes, 8);
        }
    }
    std::ofstream js(meta);
    if (!js) throw std::runtime_error("cannot write " + meta.string());
    js << sidecar.dump(2) << '\n';
}

std::pair<NamedTensors, json> read_files(const std::filesystem::path& stem) {
    std::filesystem::path bin = stem, meta = stem;
    bin += ".bin";
    meta += ".json";
    std::ifstream js(meta);
    if (!js) throw std::runtime_error("cannot read " + meta.string());
    const json sidecar = json::parse(js);
    if (sidecar.value("format", "") != "f64-le") throw std::runtime_error("unsupported bundle format");
    std::ifstream in(bin, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + bin.string());
    std::vector<double> values;
    char bytes[8];
    while (in.read(bytes, 8)) {
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
        values.push_back(std::bit_cast<double>(bits));
    }
    if (values.size() != sidecar.at("count").get<std::size_t>())
        throw std::runtime_error(bin.string() + " length does not match its sidecar");
    NamedTensors tensors;
    for (const auto& e : sidecar.at("tensors")) {
        const Shape shape = e.at("shape").get<Shape>();
        const std::size_t offset = e.at("offset").get<std::size_t>(), size = shape_size(shape);
        if (offset + size > values.size()) throw std::runtime_error("bundle entry out of range");
        tensors.emplace_back(e.at("name").get<std::string>(),
                             Tensor(shape, std::vector<double>(values.begin() + offset, values.begin() + offset + size)));
    }
    return {std::move(tensors), sidecar};
}

}  // namespace

void write_bundle(const std::filesystem::path& stem, const NamedTensors& tensors) {
    write_files(stem, tensors, bundle_sidecar(tensors));
}

NamedTensors read_bundle(const std::filesystem::path& stem) { return read_files(stem).first; }

void save_block_weights(const std::filesystem::path& stem, const BlockWeights<double>& weights) {
    weights.validate();
    const BlockConfig& c = weights.config;
    const NamedTensors tensors = {{"w_x", weights.w_x},       {"w_z", weights.w_z},
                                  {"w_dbc", weights.w_dbc},   {"conv", weights.conv},
                                  {"norm_scale", weights.norm_scale}, {"norm_shift", weights.norm_shift},
                                  {"w_o", weights.w_o},       {"a_base", weights.a_base}};
    json sidecar = bundle_sidecar(tensors);
    sidecar["config"] = {{"d_model", c.d_model},     {"heads", c.heads},
                         {"head_dim", c.head_dim},   {"state_dim", c.state_dim},
                         {"groups", c.groups},       {"conv_width", c.conv_width},
                         {"norm_groups", c.norm_groups}, {"chunk", c.chunk},
                         {"inner", c.inner == BlockConfig::Inner::blocked ? "blocked" : "recurrent"}};
    write_files(stem, tensors, sidecar);
}

BlockWeights<double> load_block_weights(const std::filesystem::path& stem) {
    auto [tensors, sidecar] = read_files(stem);
    const json& c = sidecar.at("config");
    BlockWeights<double> w;
    w.config.d_model = c.at("d_model");
    w.config.heads = c.at("heads");
    w.config.head_dim = c.at("head_dim");
    w.config.state_dim = c.at("state_dim");
    w.config.groups = c.at("groups");
    w.config.conv_width = c.at("conv_width");
    w.config.norm_groups = c.at("norm_groups");
    w.config.chunk = c.at("chunk");
    w.config.inner = c.at("inner") == "recurrent" ? BlockConfig::Inner::recurrent : BlockConfig::Inner::blocked;
    auto take = [&](const char* name) {
        for (auto& [key, t] : tensors)
            if (key == name) return t;
        throw std::runtime_error(std::string("weight bundle lacks ") + name);
    };
    w.w_x = take("w_x");
    w.w_z = take("w_z");
    w.w_dbc = take("w_dbc");
    w.conv = take("conv");
    w.norm_scale = take("norm_scale");
    w.norm_shift = take("norm_shift");
    w.w_o = take("w_o");
    w.a_base = take("a_base");
    w.validate();
    return w;
}

#define SSD_INSTANTIATE_ARCH(T)                                                                              \
    template struct BlockWeights<T>;                                                                         \
    template BasicTensor<T> mamba2_block_forward<T>(const BlockWeights<T>&, const BasicTensor<T>&);          \
    template BasicTensor<T> mamba2_block_forward<T>(const BlockWeights<T>&, const BasicTensor<T>&,           \
                                                    const BlockCarry<T>&, BlockCarry<T>*);                   \
    template BlockWeights<T> shard_weights<T>(const BlockWeights<T>&, const ShardPlan&, std::size_t);        \
    template BlockWeights<T> reconstruct_weights<T>(const std::vector<BlockWeights<T>>&, const ShardPlan&);  \
    template BasicTensor<T> tp_forward<T>(const BlockWeights<T>&, const ShardPlan&, const BasicTensor<T>&,   \
                                          CommLog*);                                                         \
    template BasicTensor<T> sp_forward<T>(const BlockWeights<T>&, std::size_t, const BasicTensor<T>&,        \
                                          CommLog*);                                                         \
    template std::vector<BasicTensor<T>> varlen_forward<T>(const BlockWeights<T>&,                           \
                                                           const std::vector<BasicTensor<T>>&);

SSD_INSTANTIATE_ARCH(double)
SSD_INSTANTIATE_ARCH(float)

}  // namespace ssd
