#pragma once

#include <string>
#include <vector>

#include "sstd/anchors.hpp"

namespace sstd {

struct BackboneLayerSpec {
    enum class Kind { conv, maxpool };
    std::string name;
    Kind kind = Kind::conv;
    int out_channels = 0; // conv only
    int kernel = 3;
    int stride = 1;
    int pad = 1;
};

struct PredictionLayerSpec {
    enum class Kind { aif, inception };
    std::string name;
    Kind kind = Kind::inception;
    std::string source;        // backbone tap feeding this layer
    std::string lower, higher; // aif only; empty = absent neighbour
    int stride = 0;
    std::vector<double> scales; // default-box scales, input pixels
};

struct AttentionConfig {
    bool enabled = true;
    // gate every prediction layer, or only the first aggregated layer
    enum class Scope { all_layers, first_aif } scope = Scope::all_layers;
    double loss_weight = 1.0;
    int width = 16; // channel width of the attention convs
};

struct OptimizerConfig {
    double lr = 1e-3;
    double momentum = 0.9;
    int decay_step = 15000;     // lr multiplied by decay_factor when reaching this step
    double decay_factor = 0.1;
    int freeze_layers = 0;      // first k backbone conv layers excluded from updates
};

struct MatchingConfig {
    double pos_threshold = 0.5;
    double neg_pos_ratio = 3.0;
    int neg_floor = 32;
    bool rotated_overlap = false;
};

struct AugmentConfig {
    bool enabled = true;
    std::vector<double> min_overlaps = {0.1, 0.3, 0.5, 0.7, 0.9};
    int max_attempts = 50;
    double min_patch_scale = 0.3;      // square patch side as fraction of image
    double brightness_delta = 32.0 / 255.0;
    double contrast_lo = 0.8, contrast_hi = 1.25;
};

/// Declarative network description: backbone, prediction layers with their
/// default-box scales, loss weights and inference thresholds.
struct DetectorConfig {
    int input_size = 128;
    std::vector<BackboneLayerSpec> backbone;
    std::vector<PredictionLayerSpec> prediction_layers;
    std::vector<double> aspect_ratios = {0.5, 1, 2, 3, 5, 7, 9, 11};
    int inception_branch_channels = 16; // each branch; block emits 4x this
    int aif_channels = 64;
    AttentionConfig attention;
    double cls_weight = 1.0, loc_weight = 1.0;
    MatchingConfig matching;
    AugmentConfig augment;
    OptimizerConfig optimizer;
    double conf_threshold = 0.7;
    double nms_threshold = 0.3;
    bool nms_rotated = true;
    int batch_size = 4;

    void validate() const;

    std::vector<LayerAnchorSpec> anchor_specs() const;

    // true when the config can build a runnable model (a backbone exists)
    bool runnable() const { return !backbone.empty(); }

    /// 128-px training configuration: six-conv backbone (widths 16..64) with
    /// taps at strides 4/8/16/32, one aggregated prediction layer at stride 8
    /// plus inception layers at 16 and 32, box scales rescaled by 128/704.
    static DetectorConfig desk_default();

    /// 32-px miniature of the desk layout for gradient checks and fast tests.
    static DetectorConfig desk_small();

    /// 704-px seven-layer anchor geometry with the full-size box scales.
    /// Ships as data only: it has no backbone and cannot build a model.
    static DetectorConfig full_scale();
};

DetectorConfig load_config(const std::string& path);
void save_config(const DetectorConfig& cfg, const std::string& path);

} // namespace sstd
