#include "mrlab/fields.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>

namespace mrlab {

void EllipticityBounds::check() const {
    if (!(lambda > 0.0) || !(Lambda >= lambda) || !std::isfinite(Lambda)) {
        throw RangeError("ellipticity bounds require 0 < lambda <= Lambda (lambda=" +
                         std::to_string(lambda) + ", Lambda=" + std::to_string(Lambda) + ")");
    }
}

ScalarField::ScalarField(int dim, double fd_step) : dim_(dim), fd_step_(fd_step) {
    if (dim < 1 || dim > kMaxDim) throw RangeError("field dimension must be in [1, 4]");
}
CVec ScalarField::gradient(const Vec& y) const { return fd_gradient(*this, y, fd_step_); }
CMat ScalarField::hessian(const Vec& y) const { return fd_hessian(*this, y, fd_step_); }

MatrixField::MatrixField(int dim, double fd_step) : dim_(dim), fd_step_(fd_step) {
    if (dim < 1 || dim > kMaxDim) throw RangeError("field dimension must be in [1, 4]");
}
MatrixGradient MatrixField::derivative(const Vec& y) const {
    return fd_derivative(*this, y, fd_step_);
}

SpaceTimeField::SpaceTimeField(int dim, double fd_step) : dim_(dim), fd_step_(fd_step) {
    if (dim < 1 || dim > kMaxDim) throw RangeError("field dimension must be in [1, 4]");
}
CVec SpaceTimeField::gradient(double t, const Vec& x) const {
    return fd_gradient(*this, t, x, fd_step_);
}
CMat SpaceTimeField::hessian(double t, const Vec& x) const {
    return fd_hessian(*this, t, x, fd_step_);
}
Complex SpaceTimeField::time_derivative(double t, const Vec& x) const {
    return fd_time_derivative(*this, t, x, fd_step_);
}

SpaceTimeMatrixField::SpaceTimeMatrixField(int dim, double fd_step)
    : dim_(dim), fd_step_(fd_step) {
    if (dim < 1 || dim > kMaxDim) throw RangeError("field dimension must be in [1, 4]");
}
MatrixGradient SpaceTimeMatrixField::derivative(double t, const Vec& x) const {
    return fd_derivative(*this, t, x, fd_step_);
}

namespace {

template <class Eval>
CVec central_gradient(int d, const Vec& y, double h, Eval&& eval) {
    CVec g(d);
    Vec p = y;
    for (int k = 0; k < d; ++k) {
        p[k] = y[k] + h;
        const Complex fp = eval(p);
        p[k] = y[k] - h;
        const Complex fm = eval(p);
        p[k] = y[k];
        g[k] = (fp - fm) / (2.0 * h);
    }
    return g;
}

template <class Eval>
CMat central_hessian(int d, const Vec& y, double h, Eval&& eval) {
    CMat H(d, d);
    const Complex f0 = eval(y);
    Vec p = y;
    for (int k = 0; k < d; ++k) {
        p[k] = y[k] + h;
        const Complex fp = eval(p);
        p[k] = y[k] - h;
        const Complex fm = eval(p);
        p[k] = y[k];
        H(k, k) = (fp - 2.0 * f0 + fm) / (h * h);
        for (int l = k + 1; l < d; ++l) {
            p[k] = y[k] + h; p[l] = y[l] + h;
            const Complex fpp = eval(p);
            p[l] = y[l] - h;
            const Complex fpm = eval(p);
            p[k] = y[k] - h;
            const Complex fmm = eval(p);
            p[l] = y[l] + h;
            const Complex fmp = eval(p);
            p[k] = y[k]; p[l] = y[l];
            H(k, l) = H(l, k) = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
        }
    }
    return H;
}

template <class Eval>
MatrixGradient central_matrix_derivative(int d, const Vec& y, double h, Eval&& eval) {
    MatrixGradient out;
    Vec p = y;
    for (int k = 0; k < d; ++k) {
        p[k] = y[k] + h;
        const CMat ap = eval(p);
        p[k] = y[k] - h;
        const CMat am = eval(p);
        p[k] = y[k];
        out[static_cast<std::size_t>(k)] = (ap - am) / (2.0 * h);
    }
    return out;
}

}  // namespace

CVec fd_gradient(const ScalarField& f, const Vec& y, double h) {
    return central_gradient(f.dim(), y, h, [&](const Vec& p) { return f.value(p); });
}
CMat fd_hessian(const ScalarField& f, const Vec& y, double h) {
    return central_hessian(f.dim(), y, h, [&](const Vec& p) { return f.value(p); });
}
MatrixGradient fd_derivative(const MatrixField& a, const Vec& y, double h) {
    return central_matrix_derivative(a.dim(), y, h, [&](const Vec& p) { return a.value(p); });
}
CVec fd_gradient(const SpaceTimeField& f, double t, const Vec& x, double h) {
    return central_gradient(f.dim(), x, h, [&](const Vec& p) { return f.value(t, p); });
}
CMat fd_hessian(const SpaceTimeField& f, double t, const Vec& x, double h) {
    return central_hessian(f.dim(), x, h, [&](const Vec& p) { return f.value(t, p); });
}
Complex fd_time_derivative(const SpaceTimeField& f, double t, const Vec& x, double h) {
    return (f.value(t + h, x) - f.value(t - h, x)) / (2.0 * h);
}
MatrixGradient fd_derivative(const SpaceTimeMatrixField& b, double t, const Vec& x, double h) {
    return central_matrix_derivative(b.dim(), x, h, [&](const Vec& p) { return b.value(t, p); });
}

CoercivityProbe coercivity(const CMat& b) {
    const Eigen::MatrixXcd herm = 0.5 * (b + b.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(herm);
    CoercivityProbe probe;
    probe.coercivity = eig.eigenvalues()[0];
    probe.xi = eig.eigenvectors().col(0);
    return probe;
}

double operator_norm(const CMat& b) {
    const Eigen::MatrixXcd m = b;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    return svd.singularValues()[0];
}

LambdaSpaceTimeField::LambdaSpaceTimeField(int dim, ValueFn value, GradFn grad, HessFn hess,
                                           ValueFn dt)
    : SpaceTimeField(dim), value_(std::move(value)), grad_(std::move(grad)),
      hess_(std::move(hess)), dt_(std::move(dt)) {}

CVec LambdaSpaceTimeField::gradient(double t, const Vec& x) const {
    return grad_ ? grad_(t, x) : SpaceTimeField::gradient(t, x);
}
CMat LambdaSpaceTimeField::hessian(double t, const Vec& x) const {
    return hess_ ? hess_(t, x) : SpaceTimeField::hessian(t, x);
}
Complex LambdaSpaceTimeField::time_derivative(double t, const Vec& x) const {
    return dt_ ? dt_(t, x) : SpaceTimeField::time_derivative(t, x);
}

LambdaMatrixField::LambdaMatrixField(int dim, ValueFn value, DerivFn deriv,
                                     bool time_independent,
                                     std::optional<EllipticityBounds> bounds)
    : SpaceTimeMatrixField(dim), value_(std::move(value)), deriv_(std::move(deriv)),
      time_independent_(time_independent), bounds_(bounds) {}

MatrixGradient LambdaMatrixField::derivative(double t, const Vec& x) const {
    return deriv_ ? deriv_(t, x) : SpaceTimeMatrixField::derivative(t, x);
}

std::shared_ptr<SpaceTimeMatrixField> constant_identity(int dim, Complex c) {
    const double lambda = c.real();
    const double Lambda = std::abs(c);
    std::optional<EllipticityBounds> bounds;
    if (lambda > 0.0) bounds = EllipticityBounds{lambda, Lambda};
    return std::make_shared<LambdaMatrixField>(
        dim, [dim, c](double, const Vec&) { return CMat(CMat::Identity(dim, dim) * c); },
        [dim](double, const Vec&) {
            MatrixGradient g;
            for (int k = 0; k < dim; ++k) g[static_cast<std::size_t>(k)] = CMat::Zero(dim, dim);
            return g;
        },
        true, bounds);
}

std::shared_ptr<SpaceTimeField> zero_field(int dim) {
    return std::make_shared<LambdaSpaceTimeField>(
        dim, [](double, const Vec&) { return Complex{}; },
        [dim](double, const Vec&) { return CVec(CVec::Zero(dim)); },
        [dim](double, const Vec&) { return CMat(CMat::Zero(dim, dim)); },
        [](double, const Vec&) { return Complex{}; });
}

}  // namespace mrlab
