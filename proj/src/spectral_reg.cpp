#include "specbool/spectral_reg.hpp"

#include <cmath>
#include <limits>

namespace specbool {

namespace {

double zero_sign_value(ZeroSignRule rule) {
    switch (rule) {
    case ZeroSignRule::positive: return 1.0;
    case ZeroSignRule::negative: return -1.0;
    default: return 0.0;
    }
}

} // namespace

double regularizer_value(const Model& model, const RegConfig& cfg) {
    if (cfg.lambda == 0.0)
        return 0.0;
    // Direct parameterization (polynomial: theta on its mask support; linear:
    // theta on the singleton masks): the spectrum IS theta, so the penalty is
    // the plain weighted l1 norm with no transform round-off.
    if (dynamic_cast<const PolynomialModel*>(&model) != nullptr ||
        dynamic_cast<const LinearModel*>(&model) != nullptr) {
        double l1 = 0.0;
        for (double t : model.params())
            l1 += std::fabs(t);
        return cfg.lambda * l1;
    }
    FunctionTable table = model.eval_all();
    std::vector<double>& buf = table.values;
    fwht_in_place(std::span<double>(buf));
    const double scale = 1.0 / double(buf.size());
    double l1 = 0.0;
    for (double v : buf)
        l1 += std::fabs(v) * scale;
    return cfg.lambda * l1;
}

RegEval regularizer_subgradient(const Model& model, const RegConfig& cfg) {
    RegEval out;
    out.grad.assign(size_t(model.param_count()), 0.0);
    if (cfg.lambda == 0.0) {
        out.min_abs_alpha = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    const double z0 = zero_sign_value(cfg.zero_sign);
    // Direct parameterization: alpha = theta on the support and exactly zero
    // elsewhere, where it has no theta derivative, so the subgradient is
    // lambda * sgn(theta) with no transform round-off.
    auto* poly = dynamic_cast<const PolynomialModel*>(&model);
    if (poly != nullptr || dynamic_cast<const LinearModel*>(&model) != nullptr) {
        double l1 = 0.0;
        double min_abs = std::numeric_limits<double>::infinity();
        const auto& theta = model.params();
        for (size_t j = 0; j < theta.size(); ++j) {
            const double a = std::fabs(theta[j]);
            l1 += a;
            if (a < min_abs)
                min_abs = a;
            const double s = theta[j] > 0.0 ? 1.0 : (theta[j] < 0.0 ? -1.0 : z0);
            out.grad[j] = cfg.lambda * s;
        }
        const bool full_support =
            poly != nullptr && theta.size() == size_t(1) << poly->dim();
        if (!full_support)
            min_abs = 0.0; // off-support coefficients are identically zero
        out.value = cfg.lambda * l1;
        out.min_abs_alpha = min_abs;
        return out;
    }
    FunctionTable table = model.eval_all();
    std::vector<double>& buf = table.values;
    fwht_in_place(std::span<double>(buf)); // buf = H_u f = 2^d alpha
    const double scale = 1.0 / double(buf.size());
    double l1 = 0.0;
    double min_abs = std::numeric_limits<double>::infinity();
    // Overwrite buf with lambda * 2^{-d} * sgn(alpha): the per-point weights
    // for the gradient sweep, pre-scaled so the accumulate below lands on
    // the final subgradient directly.
    for (double& v : buf) {
        const double alpha = v * scale;
        const double a = std::fabs(alpha);
        l1 += a;
        if (a < min_abs)
            min_abs = a;
        double s = alpha > 0.0 ? 1.0 : (alpha < 0.0 ? -1.0 : z0);
        v = cfg.lambda * scale * s;
    }
    fwht_in_place(std::span<double>(buf)); // buf = lambda * 2^{-d} H_u z
    model.cube_weighted_grad(buf, out.grad.data());
    out.value = cfg.lambda * l1;
    out.min_abs_alpha = min_abs;
    return out;
}

} // namespace specbool
