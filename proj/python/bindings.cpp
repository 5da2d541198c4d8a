#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ssd/architecture.hpp"
#include "ssd/layer.hpp"
#include "ssd/scan.hpp"
#include "ssd/semiseparable.hpp"
#include "ssd/sma.hpp"
#include "ssd/ssm.hpp"

namespace py = pybind11;
using namespace ssd;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
    Shape shape(a.shape(), a.shape() + a.ndim());
    return Tensor(std::move(shape), std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
    Array out(shape);
    std::copy(t.data().begin(), t.data().end(), out.mutable_data());
    return out;
}

std::vector<double> to_vector(const Array& a) { return {a.data(), a.data() + a.size()}; }

ScanAlgorithm scan_algorithm(const std::string& name, std::size_t chunk) {
    if (name == "sequential") return ScanAlgorithm::sequential();
    if (name == "associative") return ScanAlgorithm::associative();
    if (name == "dilated") return ScanAlgorithm::dilated();
    if (name == "state-passing") return ScanAlgorithm::state_passing(chunk, ScanAlgorithm::sequential());
    if (name == "block-decomposition") return ScanAlgorithm::block_decomposition();
    throw std::invalid_argument("unknown scan algorithm '" + name + "'");
}

HeadPattern head_pattern(const std::string& name, std::size_t groups) {
    if (name == "mhs") return HeadPattern::mhs();
    if (name == "mcs") return HeadPattern::mcs();
    if (name == "mes") return HeadPattern::mes();
    if (name == "mis") return HeadPattern::mis();
    if (name == "grouped") return HeadPattern::grouped(groups);
    throw std::invalid_argument("unknown head pattern '" + name + "'");
}

MaskSpec mask_spec(const py::object& mask) {
    if (mask.is_none()) return CausalMask{};
    if (py::isinstance<py::str>(mask) && mask.cast<std::string>() == "causal") return CausalMask{};
    if (py::isinstance<py::float_>(mask) || py::isinstance<py::int_>(mask)) return DecayMask{mask.cast<double>()};
    return OneSSMask{OneSSCoeffs(to_vector(mask.cast<Array>()))};
}

SSDInputs<double> ssd_inputs(const Array& x, const Array& a, const Array& b, const Array& c,
                             const std::string& pattern, std::size_t groups) {
    return {to_tensor(x), to_tensor(a), to_tensor(b), to_tensor(c), head_pattern(pattern, groups)};
}

BlockConfig block_config(std::size_t d_model, std::size_t heads, std::size_t head_dim, std::size_t state_dim,
                         std::size_t groups, std::size_t conv_width, std::size_t norm_groups, std::size_t chunk) {
    BlockConfig c;
    c.d_model = d_model;
    c.heads = heads;
    c.head_dim = head_dim;
    c.state_dim = state_dim;
    c.groups = groups;
    c.conv_width = conv_width;
    c.norm_groups = norm_groups;
    c.chunk = chunk;
    c.validate();
    return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Structured state-space duality: scans, SSD layer forms and a Mamba-2 block";

    py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DegenerateRowError>(m, "DegenerateRowError", PyExc_ArithmeticError);

    m.def(
        "cumprodsum",
        [](const Array& a, const Array& b, const std::string& algorithm, std::size_t chunk, double h_init) {
            const auto av = to_vector(a);
            const std::vector<double> h0{h_init};
            return to_array(cumprodsum<double>(av, to_tensor(b), scan_algorithm(algorithm, chunk), h0).h);
        },
        py::arg("a"), py::arg("b"), py::arg("algorithm") = "sequential", py::arg("chunk") = 16,
        py::arg("h_init") = 0.0, "h_t = a_t h_{t-1} + b_t along the first axis of b");

    m.def("scan_work", [](const std::string& algorithm, std::size_t length) {
        return scan_work(scan_algorithm(algorithm, 16), length).mul_adds;
    });

    m.def(
        "materialize_1ss", [](const Array& a) { return to_array(materialize_1ss(OneSSCoeffs(to_vector(a)))); },
        py::arg("a"));

    m.def(
        "ssm_recurrent",
        [](const Array& a, const Array& b, const Array& c, const Array& x) {
            SelectiveSSMParams p;
            p.form = a.ndim() == 1 ? StateForm::scalar : StateForm::diagonal;
            p.A = to_tensor(a);
            p.B = to_tensor(b);
            p.C = to_tensor(c);
            return to_array(ssm_recurrent(p, to_tensor(x)).y);
        },
        py::arg("a"), py::arg("b"), py::arg("c"), py::arg("x"));

    m.def(
        "attention_quadratic",
        [](const Array& q, const Array& k, const Array& v, const py::object& mask) {
            return to_array(attention_quadratic(to_tensor(q), to_tensor(k), to_tensor(v), mask_spec(mask)));
        },
        py::arg("q"), py::arg("k"), py::arg("v"), py::arg("mask") = py::none(),
        "mask: None or 'causal', a decay factor, or an array of 1-SS multipliers");
    m.def(
        "attention_linear",
        [](const Array& q, const Array& k, const Array& v, const py::object& mask) {
            return to_array(attention_linear(to_tensor(q), to_tensor(k), to_tensor(v), mask_spec(mask)));
        },
        py::arg("q"), py::arg("k"), py::arg("v"), py::arg("mask") = py::none());

    m.def(
        "ssd_recurrent",
        [](const Array& x, const Array& a, const Array& b, const Array& c, const std::string& pattern,
           std::size_t groups) {
            auto run = ssd_recurrent(ssd_inputs(x, a, b, c, pattern, groups));
            return py::make_tuple(to_array(run.y), to_array(run.h_final));
        },
        py::arg("x"), py::arg("a"), py::arg("b"), py::arg("c"), py::arg("pattern") = "mhs", py::arg("groups") = 1,
        "returns (y, h_final); x (T,H,P), a (T,H), b and c (T,K,N)");
    m.def(
        "ssd_quadratic",
        [](const Array& x, const Array& a, const Array& b, const Array& c, const std::string& pattern,
           std::size_t groups) { return to_array(ssd_quadratic(ssd_inputs(x, a, b, c, pattern, groups))); },
        py::arg("x"), py::arg("a"), py::arg("b"), py::arg("c"), py::arg("pattern") = "mhs", py::arg("groups") = 1);
    m.def(
        "ssd_blocked",
        [](const Array& x, const Array& a, const Array& b, const Array& c, std::size_t chunk,
           const std::string& pattern, std::size_t groups) {
            auto run = ssd_blocked(ssd_inputs(x, a, b, c, pattern, groups), chunk);
            return py::make_tuple(to_array(run.y), to_array(run.h_final));
        },
        py::arg("x"), py::arg("a"), py::arg("b"), py::arg("c"), py::arg("chunk") = kDefaultChunk,
        py::arg("pattern") = "mhs", py::arg("groups") = 1);

    m.def(
        "ssd_cost",
        [](std::size_t t, std::size_t q, std::size_t n, std::size_t p, std::size_t h) {
            const auto c = ssd_cost(t, q, n, p, h);
            py::dict d;
            d["diagonal"] = c.diagonal;
            d["right"] = c.right;
            d["center"] = c.center;
            d["left"] = c.left;
            d["predicted"] = c.predicted;
            d["measured"] = c.measured.mul_adds;
            return d;
        },
        py::arg("length"), py::arg("chunk"), py::arg("state_dim"), py::arg("head_dim"), py::arg("heads") = 1);

    py::class_<BlockWeights<double>>(m, "Block")
        .def(py::init([](std::size_t d_model, std::size_t heads, std::size_t head_dim, std::size_t state_dim,
                         std::size_t groups, std::size_t conv_width, std::size_t norm_groups, std::size_t chunk,
                         std::uint64_t seed) {
                 return random_block_weights(
                     block_config(d_model, heads, head_dim, state_dim, groups, conv_width, norm_groups, chunk), seed);
             }),
             py::arg("d_model") = 16, py::arg("heads") = 2, py::arg("head_dim") = 16, py::arg("state_dim") = 8,
             py::arg("groups") = 1, py::arg("conv_width") = 4, py::arg("norm_groups") = 1, py::arg("chunk") = 16,
             py::arg("seed") = 0)
        .def_property_readonly("d_model", [](const BlockWeights<double>& w) { return w.config.d_model; })
        .def("forward", [](const BlockWeights<double>& w, const Array& u) {
            return to_array(mamba2_block_forward(w, to_tensor(u)));
        })
        .def(
            "tp_forward",
            [](const BlockWeights<double>& w, const Array& u, std::size_t degree) {
                CommLog log;
                auto y = tp_forward(w, make_shard_plan(w.config, degree), to_tensor(u), &log);
                return py::make_tuple(to_array(y), log.all_reduces);
            },
            py::arg("u"), py::arg("degree"), "returns (output, all_reduce_count)")
        .def(
            "sp_forward",
            [](const BlockWeights<double>& w, const Array& u, std::size_t workers) {
                CommLog log;
                auto y = sp_forward(w, workers, to_tensor(u), &log);
                return py::make_tuple(to_array(y), log.messages, log.message_floats);
            },
            py::arg("u"), py::arg("workers"), "returns (output, messages, message_floats)")
        .def("varlen_forward", [](const BlockWeights<double>& w, const std::vector<Array>& seqs) {
            std::vector<Tensor> in;
            for (const auto& s : seqs) in.push_back(to_tensor(s));
            py::list out;
            for (const auto& y : varlen_forward(w, in)) out.append(to_array(y));
            return out;
        });
}
