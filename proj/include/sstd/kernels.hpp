#pragma once

#include <cstddef>

namespace sstd::kern {

// Inner-loop primitives behind the dense ops. Every kernel has a scalar
// reference implementation and, on x86-64 hosts with AVX2, a vector variant
// selected at runtime. The element-wise kernels (axpy, mul, mul_acc,
// sgd_step) are bit-identical across backends; dot uses lane-parallel
// accumulation and may differ from the scalar sum by reassociation only.
enum class Backend { scalar, avx2 };

template <typename T>
struct Table {
    // y[i] += a * x[i]
    void (*axpy)(std::size_t n, T a, const T* x, T* y);
    // sum_i x[i] * y[i]
    T (*dot)(std::size_t n, const T* x, const T* y);
    // out[i] = x[i] * y[i]
    void (*mul)(std::size_t n, const T* x, const T* y, T* out);
    // acc[i] += x[i] * y[i]
    void (*mul_acc)(std::size_t n, const T* x, const T* y, T* acc);
    // v[i] = momentum*v[i] - lr*g[i]; p[i] += v[i]
    void (*sgd_step)(std::size_t n, T lr, T momentum, const T* g, T* v, T* p);
};

bool avx2_supported();
Backend active_backend();

// Overrides the startup choice (auto-detect, honouring SSTD_KERNELS=scalar|avx2
// in the environment). Throws if the requested backend is unavailable.
void set_backend(Backend b);

template <typename T> const Table<T>& table();

template <typename T>
inline void axpy(std::size_t n, T a, const T* x, T* y) { table<T>().axpy(n, a, x, y); }

template <typename T>
inline T dot(std::size_t n, const T* x, const T* y) { return table<T>().dot(n, x, y); }

template <typename T>
inline void mul(std::size_t n, const T* x, const T* y, T* out) { table<T>().mul(n, x, y, out); }

template <typename T>
inline void mul_acc(std::size_t n, const T* x, const T* y, T* acc) { table<T>().mul_acc(n, x, y, acc); }

template <typename T>
inline void sgd_step(std::size_t n, T lr, T momentum, const T* g, T* v, T* p) {
    table<T>().sgd_step(n, lr, momentum, g, v, p);
}

namespace detail {
const Table<float>* scalar_table_f32();
const Table<double>* scalar_table_f64();
// Null when the binary was built without AVX2 support.
const Table<float>* avx2_table_f32();
const Table<double>* avx2_table_f64();
} // namespace detail

} // namespace sstd::kern
