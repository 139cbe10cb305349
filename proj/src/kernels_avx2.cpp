// AVX2 kernel variants. Built as a separate object with -mavx2 -mfma
// -ffp-contract=off; the dispatcher only hands out this table after a runtime
// CPU check. Element-wise kernels deliberately use mul+add (not FMA) so they
// round exactly like the scalar reference; dot keeps FMA inside independent
// lane accumulators and is compared under a reassociation tolerance.

#include "sstd/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

namespace sstd::kern {
namespace {

void axpy_avx2_f32(std::size_t n, float a, const float* x, float* y) {
    const __m256 va = _mm256_set1_ps(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 vx = _mm256_loadu_ps(x + i);
        const __m256 vy = _mm256_loadu_ps(y + i);
        _mm256_storeu_ps(y + i, _mm256_add_ps(vy, _mm256_mul_ps(va, vx)));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void axpy_avx2_f64(std::size_t n, double a, const double* x, double* y) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vx = _mm256_loadu_pd(x + i);
        const __m256d vy = _mm256_loadu_pd(y + i);
        _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(va, vx)));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

float dot_avx2_f32(std::size_t n, const float* x, const float* y) {
    __m256 acc0 = _mm256_setzero_ps();
    __m256 acc1 = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc0);
        acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i + 8), _mm256_loadu_ps(y + i + 8), acc1);
    }
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc0);
    }
    acc0 = _mm256_add_ps(acc0, acc1);
    alignas(32) float lanes[8];
    _mm256_store_ps(lanes, acc0);
    float total = ((lanes[0] + lanes[4]) + (lanes[1] + lanes[5])) +
                  ((lanes[2] + lanes[6]) + (lanes[3] + lanes[7]));
    for (; i < n; ++i) total += x[i] * y[i];
    return total;
}

double dot_avx2_f64(std::size_t n, const double* x, const double* y) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    }
    acc0 = _mm256_add_pd(acc0, acc1);
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc0);
    double total = (lanes[0] + lanes[2]) + (lanes[1] + lanes[3]);
    for (; i < n; ++i) total += x[i] * y[i];
    return total;
}

void mul_avx2_f32(std::size_t n, const float* x, const float* y, float* out) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    }
    for (; i < n; ++i) out[i] = x[i] * y[i];
}

void mul_avx2_f64(std::size_t n, const double* x, const double* y, double* out) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) out[i] = x[i] * y[i];
}

void mul_acc_avx2_f32(std::size_t n, const float* x, const float* y, float* acc) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 prod = _mm256_mul_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i));
        _mm256_storeu_ps(acc + i, _mm256_add_ps(_mm256_loadu_ps(acc + i), prod));
    }
    for (; i < n; ++i) acc[i] += x[i] * y[i];
}

void mul_acc_avx2_f64(std::size_t n, const double* x, const double* y, double* acc) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), prod));
    }
    for (; i < n; ++i) acc[i] += x[i] * y[i];
}

void sgd_step_avx2_f32(std::size_t n, float lr, float momentum, const float* g, float* v, float* p) {
    const __m256 vlr = _mm256_set1_ps(lr);
    const __m256 vmu = _mm256_set1_ps(momentum);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 vel = _mm256_sub_ps(_mm256_mul_ps(vmu, _mm256_loadu_ps(v + i)),
                                         _mm256_mul_ps(vlr, _mm256_loadu_ps(g + i)));
        _mm256_storeu_ps(v + i, vel);
        _mm256_storeu_ps(p + i, _mm256_add_ps(_mm256_loadu_ps(p + i), vel));
    }
    for (; i < n; ++i) {
        v[i] = momentum * v[i] - lr * g[i];
        p[i] += v[i];
    }
}

void sgd_step_avx2_f64(std::size_t n, double lr, double momentum, const double* g, double* v, double* p) {
    const __m256d vlr = _mm256_set1_pd(lr);
    const __m256d vmu = _mm256_set1_pd(momentum);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vel = _mm256_sub_pd(_mm256_mul_pd(vmu, _mm256_loadu_pd(v + i)),
                                          _mm256_mul_pd(vlr, _mm256_loadu_pd(g + i)));
        _mm256_storeu_pd(v + i, vel);
        _mm256_storeu_pd(p + i, _mm256_add_pd(_mm256_loadu_pd(p + i), vel));
    }
    for (; i < n; ++i) {
        v[i] = momentum * v[i] - lr * g[i];
        p[i] += v[i];
    }
}

const Table<float> kAvx2F32 = {
    &axpy_avx2_f32, &dot_avx2_f32, &mul_avx2_f32, &mul_acc_avx2_f32, &sgd_step_avx2_f32,
};

const Table<double> kAvx2F64 = {
    &axpy_avx2_f64, &dot_avx2_f64, &mul_avx2_f64, &mul_acc_avx2_f64, &sgd_step_avx2_f64,
};

} // namespace

namespace detail {
const Table<float>* avx2_table_f32() { return &kAvx2F32; }
const Table<double>* avx2_table_f64() { return &kAvx2F64; }
} // namespace detail

} // namespace sstd::kern

#else // no AVX2 at compile time

namespace sstd::kern::detail {
const Table<float>* avx2_table_f32() { return nullptr; }
const Table<double>* avx2_table_f64() { return nullptr; }
} // namespace sstd::kern::detail

#endif
