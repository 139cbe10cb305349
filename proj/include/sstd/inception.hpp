#pragma once

#include <string>

#include "sstd/ops.hpp"
#include "sstd/params.hpp"

namespace sstd {
class Rng;

/// Four-branch inception block: 1x1 conv, dilated 3x3 conv, 3x3 max-pool +
/// 1x1 conv, and a 5x5 conv decomposed into dilated 1x5 then 5x1. Each branch
/// emits `branch_channels`; the output is their channel concatenation (spatial
/// size preserved).
template <typename T>
struct InceptionTrace {
    TensorT<T> b1;            // 1x1 branch
    TensorT<T> b3;            // 3x3 dilated branch
    ops::MaxPoolResult<T> pool;
    TensorT<T> bp;            // 1x1 conv on pooled features
    TensorT<T> b15;           // 1x5 stage
    TensorT<T> b51;           // 5x1 stage (branch output)
    TensorT<T> out;           // concat of b1, b3, bp, b51
};

// Parameter names under `prefix`: b1x1, b3x3, pool1x1, b1x5, b5x1 (.w/.b each).
template <typename T>
void init_inception_params(ModelParamsT<T>& params, const std::string& prefix, int in_channels,
                           int branch_channels, Rng& rng);

template <typename T>
InceptionTrace<T> inception_block(const TensorT<T>& features, const ModelParamsT<T>& params,
                                  const std::string& prefix);

// Consumes trace.out.grad; accumulates into parameter grads and features.grad.
template <typename T>
void inception_backward(TensorT<T>& features, ModelParamsT<T>& params, const std::string& prefix,
                        InceptionTrace<T>& trace);

/// Cross-layer feature aggregation: the lower (finer) layer is max-pooled by
/// 2, the higher (coarser) layer is bilinearly upsampled by 2, the available
/// inputs are channel-concatenated and a 1x1 conv projects to `out_channels`.
template <typename T>
struct AifTrace {
    ops::MaxPoolResult<T> lower_pool;
    TensorT<T> higher_up;
    TensorT<T> concat;
    TensorT<T> out;
};

template <typename T>
void init_aif_params(ModelParamsT<T>& params, const std::string& prefix, int concat_channels,
                     int out_channels, Rng& rng);

template <typename T>
AifTrace<T> aggregate_aif(const TensorT<T>* lower, const TensorT<T>& current,
                          const TensorT<T>* higher, const ModelParamsT<T>& params,
                          const std::string& prefix);

template <typename T>
void aif_backward(TensorT<T>* lower, TensorT<T>& current, TensorT<T>* higher,
                  ModelParamsT<T>& params, const std::string& prefix, AifTrace<T>& trace);

} // namespace sstd
