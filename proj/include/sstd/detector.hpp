#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sstd/anchors.hpp"
#include "sstd/attention.hpp"
#include "sstd/config.hpp"
#include "sstd/inception.hpp"
#include "sstd/scene.hpp"

namespace sstd {

template <typename T>
struct LayerHead {
    TensorT<T> cls; // (n, A*2, g, g): channel slot*2 + class
    TensorT<T> loc; // (n, A*5, g, g): channel slot*5 + offset component
};

// Every intermediate needed to run the hand-written backward pass.
template <typename T>
struct NetTrace {
    TensorT<T> input;
    std::vector<TensorT<T>> conv_acts;                    // per backbone layer (convs only filled)
    std::map<int, ops::MaxPoolResult<T>> pools;           // backbone pool layers by index
    std::map<std::string, InceptionTrace<T>> inception;   // by source tap
    std::map<std::string, AifTrace<T>> aif;               // by prediction layer name
    AttentionTrace<T> attention;
    bool has_attention = false;
    std::vector<TensorT<T>> pred_features;                // gated head inputs, per layer
    std::vector<bool> gated;                              // whether layer i was gated
};

template <typename T>
struct ForwardResult {
    std::vector<LayerHead<T>> heads; // per prediction layer, config order
    NetTrace<T> trace;

    const AttentionMapsT<T>* attention_maps() const {
        return trace.has_attention ? &trace.attention.maps : nullptr;
    }
};

struct LossBreakdown {
    double total = 0;
    double cls = 0, loc = 0, att = 0; // unweighted components
    int positives = 0;
};

template <typename T>
struct OptimizerStateT {
    std::map<std::string, std::vector<T>> velocity;
    double lr = 0;
    int step = 0;
    bool decayed = false;
};

using OptimizerState = OptimizerStateT<float>;

// anchors per feature-map cell implied by the scale/ratio sets
int anchors_per_location(const DetectorConfig& cfg);

// head input width for a prediction layer
int prediction_feature_channels(const DetectorConfig& cfg, const PredictionLayerSpec& pl);

/// Builds and initialises every parameter tensor the config names: backbone
/// convs, inception blocks for each tapped layer, AIF projections, the
/// attention branch and the per-layer prediction heads.
template <typename T>
ModelParamsT<T> init_params(const DetectorConfig& cfg, Rng& rng);

template <typename T>
ForwardResult<T> forward(const TensorT<T>& image, const ModelParamsT<T>& params,
                         const DetectorConfig& cfg);

/// Propagates the grads stored in heads[*].cls/.loc and the attention maps
/// back into params.grad. Call total_loss_with_grads first.
template <typename T>
void backward(ForwardResult<T>& fr, ModelParamsT<T>& params, const DetectorConfig& cfg);

/// Per-anchor classification loss under a background label, used to rank
/// hard negatives.
template <typename T>
std::vector<double> negative_cls_losses(const ForwardResult<T>& fr, const AnchorSet& anchors);

/// Weighted sum of classification, localisation and attention terms.
/// Classification averages over non-ignored anchors, localisation over
/// positives; mask may be null when the attention term is disabled.
template <typename T>
LossBreakdown total_loss(const ForwardResult<T>& fr, const TargetBundle& targets,
                         const AnchorSet& anchors, const BinaryMask* mask,
                         const DetectorConfig& cfg);

// As total_loss, but also accumulates d(scale * total)/d(head outputs) and
// the attention-map grads into fr.
template <typename T>
LossBreakdown total_loss_with_grads(ForwardResult<T>& fr, const TargetBundle& targets,
                                    const AnchorSet& anchors, const BinaryMask* mask,
                                    const DetectorConfig& cfg, double scale);

/// One SGD-with-momentum step over a mini-batch: augment (per config),
/// forward, match, mine negatives, loss, backward, update. Throws on
/// non-finite loss. Gradients are averaged over the batch.
LossBreakdown train_step(std::span<const SceneSample> batch, ModelParams& params,
                         OptimizerState& state, const DetectorConfig& cfg,
                         const AnchorSet& anchors, Rng& rng);

/// Forward, score thresholding, offset decoding, image clipping, NMS.
/// Negative overrides fall back to the config thresholds.
template <typename T>
std::vector<Detection> detect(const TensorT<T>& image, const ModelParamsT<T>& params,
                              const DetectorConfig& cfg, const AnchorSet& anchors,
                              double conf_override = -1, double nms_override = -1);

} // namespace sstd
