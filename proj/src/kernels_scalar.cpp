#include "sstd/kernels.hpp"

// Reference kernels. These define the semantics the vector backends are
// tested against.

namespace sstd::kern {
namespace {

template <typename T>
void axpy_scalar(std::size_t n, T a, const T* x, T* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <typename T>
T dot_scalar(std::size_t n, const T* x, const T* y) {
    T acc = T(0);
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

template <typename T>
void mul_scalar(std::size_t n, const T* x, const T* y, T* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

template <typename T>
void mul_acc_scalar(std::size_t n, const T* x, const T* y, T* acc) {
    for (std::size_t i = 0; i < n; ++i) acc[i] += x[i] * y[i];
}

template <typename T>
void sgd_step_scalar(std::size_t n, T lr, T momentum, const T* g, T* v, T* p) {
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = momentum * v[i] - lr * g[i];
        p[i] += v[i];
    }
}

const Table<float> kScalarF32 = {
    &axpy_scalar<float>, &dot_scalar<float>, &mul_scalar<float>,
    &mul_acc_scalar<float>, &sgd_step_scalar<float>,
};

const Table<double> kScalarF64 = {
    &axpy_scalar<double>, &dot_scalar<double>, &mul_scalar<double>,
    &mul_acc_scalar<double>, &sgd_step_scalar<double>,
};

} // namespace

namespace detail {
const Table<float>* scalar_table_f32() { return &kScalarF32; }
const Table<double>* scalar_table_f64() { return &kScalarF64; }
} // namespace detail

} // namespace sstd::kern
