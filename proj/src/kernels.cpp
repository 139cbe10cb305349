#include "sstd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "sstd/error.hpp"

namespace sstd::kern {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend pick_startup_backend() {
    const bool usable = cpu_has_avx2() && detail::avx2_table_f32() != nullptr;
    if (const char* env = std::getenv("SSTD_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
        if (std::strcmp(env, "avx2") == 0 && usable) return Backend::avx2;
    }
    return usable ? Backend::avx2 : Backend::scalar;
}

std::atomic<Backend>& backend_slot() {
    static std::atomic<Backend> slot{pick_startup_backend()};
    return slot;
}

} // namespace

bool avx2_supported() {
    return cpu_has_avx2() && detail::avx2_table_f32() != nullptr;
}

Backend active_backend() { return backend_slot().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
    if (b == Backend::avx2 && !avx2_supported())
        fail_validation("avx2 kernel backend requested but not available on this host");
    backend_slot().store(b, std::memory_order_relaxed);
}

template <>
const Table<float>& table<float>() {
    return active_backend() == Backend::avx2 ? *detail::avx2_table_f32()
                                             : *detail::scalar_table_f32();
}

template <>
const Table<double>& table<double>() {
    return active_backend() == Backend::avx2 ? *detail::avx2_table_f64()
                                             : *detail::scalar_table_f64();
}

} // namespace sstd::kern
