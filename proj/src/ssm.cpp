#include "ssd/ssm.hpp"

#include "ssd/contract.hpp"
#include "ssd/scan.hpp"

namespace ssd {

void SelectiveSSMParams::validate() const {
    if (B.rank() != 2 || C.rank() != 2 || B.shape() != C.shape()) {
        throw DimensionError("SSM B and C must both be (T,N)");
    }
    const std::size_t t = B.dim(0), n = B.dim(1);
    if (form == StateForm::dense) throw std::invalid_argument("selective SSM fast paths need scalar or diagonal A");
    const Shape expected = form == StateForm::scalar ? Shape{t} : Shape{t, n};
    if (A.shape() != expected) {
        throw DimensionError("SSM A has shape " + shape_string(A.shape()) + ", expected " +
                             shape_string(expected));
    }
}

SSSRep SelectiveSSMParams::to_sss() const {
    validate();
    return SSSRep{form, A, B, C};
}

Tensor SelectiveSSMParams::diagonal() const {
    validate();
    if (form == StateForm::diagonal) return A;
    const std::size_t t = length(), n = state_dim();
    Tensor d({t, n});
    for (std::size_t i = 0; i < t; ++i)
        for (std::size_t k = 0; k < n; ++k) d(i, k) = A(i);
    return d;
}

namespace {

void check_input(const SelectiveSSMParams& params, const Tensor& x) {
    params.validate();
    if (x.rank() != 2 || x.dim(0) != params.length()) {
        throw DimensionError("axis T: input X " + shape_string(x.shape()) + " does not match parameter length " +
                             std::to_string(params.length()));
    }
}

}  // namespace

SSMRun ssm_recurrent(const SelectiveSSMParams& params, const Tensor& x, const Tensor& h_init, OpCounter* ops) {
    check_input(params, x);
    const std::size_t t_len = params.length(), n = params.state_dim(), p = x.dim(1);
    Tensor h = h_init.empty() ? Tensor({n, p}) : h_init;
    if (h.shape() != Shape{n, p}) throw DimensionError("h_init must be (N,P)");
    Tensor y({t_len, p});
    for (std::size_t t = 0; t < t_len; ++t) {
        for (std::size_t k = 0; k < n; ++k) {
            const double a = params.form == StateForm::scalar ? params.A(t) : params.A(t, k);
            const double b = params.B(t, k);
            for (std::size_t c = 0; c < p; ++c) h(k, c) = a * h(k, c) + b * x(t, c);
        }
        for (std::size_t c = 0; c < p; ++c) {
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) acc += params.C(t, k) * h(k, c);
            y(t, c) = acc;
        }
    }
    count_mul_adds(ops, 3 * t_len * n * p);
    return {std::move(y), h, h.size()};
}

Tensor ssm_diagonal_contraction(const SelectiveSSMParams& params, const Tensor& x, OpCounter* ops) {
    check_input(params, x);
    const std::size_t t_len = params.length(), n = params.state_dim(), p = x.dim(1);
    const Tensor diag = params.diagonal();

    Tensor z = contract("SP,SN->SPN", x, params.B, ops);
    Tensor h({t_len, p, n});
    std::vector<double> a(t_len);
    Tensor column({t_len, p});
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t t = 0; t < t_len; ++t) {
            a[t] = diag(t, k);
            for (std::size_t c = 0; c < p; ++c) column(t, c) = z(t, c, k);
        }
        auto scanned = cumprodsum<double>(std::span<const double>(a), column, ScanAlgorithm::sequential(), {}, ops);
        for (std::size_t t = 0; t < t_len; ++t)
            for (std::size_t c = 0; c < p; ++c) h(t, c, k) = scanned.h(t, c);
    }
    return contract("TN,TPN->TP", params.C, h, ops);
}

Tensor ssm_matrix_mode(const SelectiveSSMParams& params, const Tensor& x, OpCounter* ops) {
    check_input(params, x);
    const Tensor m = materialize_sss(params.to_sss(), ops);
    return contract("TS,SP->TP", m, x, ops);
}

Tensor scalar_identity_quadratic(const SelectiveSSMParams& params, const Tensor& x, OpCounter* ops) {
    check_input(params, x);
    if (params.form != StateForm::scalar) throw std::invalid_argument("scalar_identity_quadratic needs scalar A");
    const OneSSCoeffs coeffs(params.A.storage(), OneSSCoeffs::Regime::arbitrary);
    const Tensor l = materialize_1ss(coeffs);
    count_elementwise(ops, l.size());
    const Tensor g = contract("TN,SN->TS", params.C, params.B, ops);
    const Tensor m = contract("TS,TS->TS", l, g, ops);
    return contract("TS,SP->TP", m, x, ops);
}

}  // namespace ssd
