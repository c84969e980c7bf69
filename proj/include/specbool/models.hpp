#pragma once

// Parametric function classes f_theta : {-1,+1}^d -> R with hand-written
// reverse-mode gradients in the parameters.  All models expose a flat
// parameter vector so the trainer can do theta -= lr * g elementwise, plus
// batch paths that the MLP overrides with blocked matrix loops (these
// dominate the run time of the regularized-training experiments).

#include <memory>
#include <span>
#include <vector>

#include "specbool/hypercube.hpp"

namespace specbool {

class Model {
public:
    virtual ~Model() = default;

    virtual int dim() const = 0;
    int param_count() const { return int(theta_.size()); }
    virtual const char* kind() const = 0;

    std::vector<double>& params() { return theta_; }
    const std::vector<double>& params() const { return theta_; }

    virtual double eval(std::span<const double> x) const = 0;

    // grad f_theta(x) with respect to theta; grad.size() == param_count().
    virtual void param_gradient(std::span<const double> x, std::span<double> grad) const = 0;

    // X is row-major n x dim() with +-1 entries; out receives n values.
    virtual void eval_batch(const double* X, size_t n, double* out) const;

    // acc += sum_i w[i] * grad f_theta(x_i).  Shared workhorse of the MSE
    // gradient and the spectral regularizer subgradient.
    virtual void weighted_grad_accumulate(const double* X, const double* w, size_t n,
                                          double* acc) const;

    // Function values over the whole cube in index order.
    virtual FunctionTable eval_all() const;

    // acc += sum over cube points i of w[i] * grad f_theta(x_i), where w is
    // given in index order (size 2^dim()).
    virtual void cube_weighted_grad(const std::vector<double>& w, double* acc) const;

    virtual std::unique_ptr<Model> clone() const = 0;

protected:
    std::vector<double> theta_;
};

// f(x) = <theta, x>.
class LinearModel : public Model {
public:
    explicit LinearModel(int d);
    int dim() const override { return d_; }
    const char* kind() const override { return "linear"; }
    double eval(std::span<const double> x) const override;
    void param_gradient(std::span<const double> x, std::span<double> grad) const override;
    std::unique_ptr<Model> clone() const override { return std::make_unique<LinearModel>(*this); }

private:
    int d_;
};

// f(x) = sum_t theta_t * chi_{mask_t}(x) over a fixed sorted support.
class PolynomialModel : public Model {
public:
    PolynomialModel(int d, std::vector<uint32_t> support);
    static PolynomialModel full_support(int d);

    int dim() const override { return d_; }
    const char* kind() const override { return "polynomial"; }
    const std::vector<uint32_t>& support() const { return support_; }

    double eval(std::span<const double> x) const override;
    void param_gradient(std::span<const double> x, std::span<double> grad) const override;
    // Both cube paths reduce to a single Walsh-Hadamard transform.
    FunctionTable eval_all() const override;
    void cube_weighted_grad(const std::vector<double>& w, double* acc) const override;
    std::unique_ptr<Model> clone() const override { return std::make_unique<PolynomialModel>(*this); }

    // Current parameters as a sparse spectrum (exact: monomials are the
    // Walsh basis, so spectrum(f_theta) == theta on the support).
    Spectrum to_spectrum(double prune_eps = 0.0) const;

private:
    int d_;
    std::vector<uint32_t> support_;
};

// Fully-connected net with tanh hidden activations and an affine output.
// widths = [d, h_1, ..., h_L, 1].
class MlpModel : public Model {
public:
    explicit MlpModel(std::vector<int> widths);

    int dim() const override { return widths_.front(); }
    const char* kind() const override { return "mlp"; }
    const std::vector<int>& widths() const { return widths_; }

    double eval(std::span<const double> x) const override;
    void param_gradient(std::span<const double> x, std::span<double> grad) const override;
    void eval_batch(const double* X, size_t n, double* out) const override;
    void weighted_grad_accumulate(const double* X, const double* w, size_t n,
                                  double* acc) const override;
    std::unique_ptr<Model> clone() const override { return std::make_unique<MlpModel>(*this); }

    // Xavier-uniform weights U(-a, a), a = sqrt(6 / (fan_in + fan_out)),
    // zero biases; draw order is fixed so init is seed-reproducible.
    void init_xavier(uint64_t seed);

private:
    size_t weight_offset(int layer) const { return offsets_[size_t(layer)].w; }
    size_t bias_offset(int layer) const { return offsets_[size_t(layer)].b; }

    struct LayerOffsets {
        size_t w;
        size_t b;
    };
    std::vector<int> widths_;
    std::vector<LayerOffsets> offsets_;
    int layer_count_; // number of affine layers = widths_.size() - 1
};

// Model architecture description used by init_model and the checkpoint
// format.  For kind "polynomial" an empty support means full support.
struct ModelSpec {
    std::string kind; // "linear" | "polynomial" | "mlp"
    int d = 0;
    std::vector<uint32_t> support; // polynomial only
    std::vector<int> hidden;       // mlp only
};

// Build a model with deterministic initial parameters: zeros for linear and
// polynomial, Xavier-uniform(seed) for the MLP.
std::unique_ptr<Model> init_model(const ModelSpec& spec, uint64_t seed);

// Parse CLI-style descriptions: "linear", "poly:full", "poly:1,6,24",
// "mlp:64,64,64" (hidden widths).
ModelSpec parse_model_spec(const std::string& text, int d);

} // namespace specbool
