#include "sstd/detector.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sstd/augment.hpp"
#include "sstd/init.hpp"
#include "sstd/kernels.hpp"

namespace sstd {
namespace {

struct AnchorLoc {
    int layer;
    int iy, ix, slot;
};

AnchorLoc locate_anchor(const AnchorSet& set, std::size_t global) {
    for (std::size_t l = 0; l < set.layers.size(); ++l) {
        const auto& range = set.layers[l];
        if (global < range.end) {
            const std::size_t within = global - range.begin;
            const int cell = static_cast<int>(within / set.per_location);
            AnchorLoc loc;
            loc.layer = static_cast<int>(l);
            loc.slot = static_cast<int>(within % set.per_location);
            loc.iy = cell / range.grid_w;
            loc.ix = cell % range.grid_w;
            return loc;
        }
    }
    fail_validation("anchor index out of range");
}

// stable two-class cross entropy; returns loss, fills probs
template <typename T>
double two_class_ce(T l0, T l1, int label, double* p0 = nullptr, double* p1 = nullptr) {
    const double m = std::max(static_cast<double>(l0), static_cast<double>(l1));
    const double e0 = std::exp(static_cast<double>(l0) - m);
    const double e1 = std::exp(static_cast<double>(l1) - m);
    const double sum = e0 + e1;
    if (p0) *p0 = e0 / sum;
    if (p1) *p1 = e1 / sum;
    const double picked = label == 0 ? e0 : e1;
    return std::log(sum) - std::log(picked);
}

std::vector<std::string> tap_order(const DetectorConfig& cfg) {
    std::vector<std::string> taps;
    const auto add = [&](const std::string& t) {
        if (!t.empty() && std::find(taps.begin(), taps.end(), t) == taps.end()) taps.push_back(t);
    };
    for (const auto& pl : cfg.prediction_layers) {
        add(pl.lower);
        add(pl.source);
        add(pl.higher);
    }
    return taps;
}

int backbone_channels_at(const DetectorConfig& cfg, const std::string& tap) {
    int ch = 3;
    for (const auto& bl : cfg.backbone) {
        if (bl.kind == BackboneLayerSpec::Kind::conv) ch = bl.out_channels;
        if (bl.name == tap) return ch;
    }
    fail_validation("unknown backbone tap '" + tap + "'");
}

ConvSpec backbone_conv_spec(const BackboneLayerSpec& bl, int in_ch) {
    ConvSpec s;
    s.kh = s.kw = bl.kernel;
    s.sh = s.sw = bl.stride;
    s.ph = s.pw = bl.pad;
    s.in_channels = in_ch;
    s.out_channels = bl.out_channels;
    return s;
}

std::set<std::string> frozen_param_prefixes(const DetectorConfig& cfg) {
    std::set<std::string> frozen;
    int seen = 0;
    for (const auto& bl : cfg.backbone) {
        if (bl.kind != BackboneLayerSpec::Kind::conv) continue;
        if (seen++ < cfg.optimizer.freeze_layers) frozen.insert("backbone." + bl.name + ".");
        else break;
    }
    return frozen;
}

} // namespace

int anchors_per_location(const DetectorConfig& cfg) {
    int per_ratio = 0;
    for (double r : cfg.aspect_ratios) per_ratio += (r == 1.0) ? 1 : 2;
    int scales = cfg.prediction_layers.empty()
                     ? 0
                     : static_cast<int>(cfg.prediction_layers.front().scales.size());
    return per_ratio * scales;
}

int prediction_feature_channels(const DetectorConfig& cfg, const PredictionLayerSpec& pl) {
    return pl.kind == PredictionLayerSpec::Kind::aif ? cfg.aif_channels
                                                     : 4 * cfg.inception_branch_channels;
}

template <typename T>
ModelParamsT<T> init_params(const DetectorConfig& cfg, Rng& rng) {
    cfg.validate();
    require(cfg.runnable(), "init_params: config has no backbone and cannot build a model");
    ModelParamsT<T> params;

    int in_ch = 3;
    for (const auto& bl : cfg.backbone) {
        if (bl.kind != BackboneLayerSpec::Kind::conv) continue;
        auto& w = params.add("backbone." + bl.name + ".w",
                             TensorT<T>(bl.out_channels, in_ch, bl.kernel, bl.kernel));
        fan_in_uniform_fill(w, in_ch * bl.kernel * bl.kernel, rng);
        params.add("backbone." + bl.name + ".b", TensorT<T>(1, bl.out_channels, 1, 1));
        in_ch = bl.out_channels;
    }

    for (const std::string& tap : tap_order(cfg))
        init_inception_params<T>(params, "inc." + tap, backbone_channels_at(cfg, tap),
                                 cfg.inception_branch_channels, rng);

    const int inc_out = 4 * cfg.inception_branch_channels;
    for (const auto& pl : cfg.prediction_layers) {
        if (pl.kind != PredictionLayerSpec::Kind::aif) continue;
        const int concat = inc_out * (1 + (pl.lower.empty() ? 0 : 1) + (pl.higher.empty() ? 0 : 1));
        init_aif_params<T>(params, "aif." + pl.name, concat, cfg.aif_channels, rng);
    }

    if (cfg.attention.enabled) {
        require(cfg.prediction_layers.front().kind == PredictionLayerSpec::Kind::aif,
                "attention requires the first prediction layer to be an aggregated (aif) layer");
        init_attention_params<T>(params, "att", cfg.aif_channels, cfg.attention.width,
                                 cfg.prediction_layers.front().stride, rng);
    }

    // heads start at zero: text scores open at exactly 0.5 and offsets at the
    // anchors themselves, which keeps the first steps well-conditioned
    const int per_loc = anchors_per_location(cfg);
    for (const auto& pl : cfg.prediction_layers) {
        const int fc = prediction_feature_channels(cfg, pl);
        params.add("head." + pl.name + ".cls.w", TensorT<T>(per_loc * 2, fc, 1, 1));
        params.add("head." + pl.name + ".cls.b", TensorT<T>(1, per_loc * 2, 1, 1));
        params.add("head." + pl.name + ".loc.w", TensorT<T>(per_loc * 5, fc, 1, 1));
        params.add("head." + pl.name + ".loc.b", TensorT<T>(1, per_loc * 5, 1, 1));
    }
    return params;
}

template <typename T>
ForwardResult<T> forward(const TensorT<T>& image, const ModelParamsT<T>& params,
                         const DetectorConfig& cfg) {
    require(cfg.runnable(), "forward: config has no backbone");
    require(image.c == 3, "forward: image must have 3 channels, got " + std::to_string(image.c));
    require(image.h == cfg.input_size && image.w == cfg.input_size,
            "forward: image is " + image.shape_str() + ", config expects " +
                std::to_string(cfg.input_size) + "x" + std::to_string(cfg.input_size));

    ForwardResult<T> fr;
    NetTrace<T>& tr = fr.trace;
    tr.input = image;
    tr.conv_acts.resize(cfg.backbone.size());

    // backbone chain; activation i = output of backbone layer i
    const TensorT<T>* cur = &tr.input;
    std::map<std::string, int> layer_index;
    for (std::size_t i = 0; i < cfg.backbone.size(); ++i) {
        const auto& bl = cfg.backbone[i];
        if (bl.kind == BackboneLayerSpec::Kind::conv) {
            tr.conv_acts[i] = ops::conv2d(*cur, params.at("backbone." + bl.name + ".w"),
                                          params.bias("backbone." + bl.name + ".b"),
                                          backbone_conv_spec(bl, cur->c));
            cur = &tr.conv_acts[i];
        } else {
            auto res = ops::maxpool2d_fwd(*cur, bl.kernel, bl.stride, bl.pad);
            auto [it, ok] = tr.pools.emplace(static_cast<int>(i), std::move(res));
            cur = &it->second.output;
        }
        layer_index[bl.name] = static_cast<int>(i);
    }

    const auto act_of = [&](const std::string& tap) -> const TensorT<T>& {
        auto it = layer_index.find(tap);
        require(it != layer_index.end(), "forward: unknown tap '" + tap + "'");
        const int i = it->second;
        return cfg.backbone[i].kind == BackboneLayerSpec::Kind::conv ? tr.conv_acts[i]
                                                                     : tr.pools.at(i).output;
    };

    for (const std::string& tap : tap_order(cfg))
        tr.inception.emplace(tap, inception_block(act_of(tap), params, "inc." + tap));

    // aggregated layers then raw features per prediction layer
    std::vector<const TensorT<T>*> features(cfg.prediction_layers.size());
    for (std::size_t i = 0; i < cfg.prediction_layers.size(); ++i) {
        const auto& pl = cfg.prediction_layers[i];
        if (pl.kind == PredictionLayerSpec::Kind::aif) {
            const TensorT<T>* lower = pl.lower.empty() ? nullptr : &tr.inception.at(pl.lower).out;
            const TensorT<T>* higher = pl.higher.empty() ? nullptr : &tr.inception.at(pl.higher).out;
            auto [it, ok] = tr.aif.emplace(
                pl.name, aggregate_aif(lower, tr.inception.at(pl.source).out, higher, params,
                                       "aif." + pl.name));
            features[i] = &it->second.out;
        } else {
            features[i] = &tr.inception.at(pl.source).out;
        }
        const int grid = cfg.input_size / pl.stride;
        require(features[i]->h == grid && features[i]->w == grid,
                "forward: layer '" + pl.name + "' produced " + features[i]->shape_str() +
                    ", expected grid " + std::to_string(grid));
    }

    if (cfg.attention.enabled) {
        const auto& first = cfg.prediction_layers.front();
        require(first.kind == PredictionLayerSpec::Kind::aif,
                "attention requires an aggregated first prediction layer");
        require(features[0]->h * first.stride == cfg.input_size,
                "attention: first-layer stride ratio mismatch");
        std::vector<AttentionLayerSize> sizes;
        for (std::size_t i = 0; i < cfg.prediction_layers.size(); ++i)
            sizes.push_back({cfg.prediction_layers[i].name, features[i]->h, features[i]->w});
        tr.attention =
            compute_attention(*features[0], params, "att", first.stride, std::span(sizes));
        tr.has_attention = true;
    }

    tr.pred_features.resize(cfg.prediction_layers.size());
    tr.gated.assign(cfg.prediction_layers.size(), false);
    fr.heads.resize(cfg.prediction_layers.size());
    const int per_loc = anchors_per_location(cfg);
    for (std::size_t i = 0; i < cfg.prediction_layers.size(); ++i) {
        const auto& pl = cfg.prediction_layers[i];
        const bool gate = tr.has_attention &&
                          (cfg.attention.scope == AttentionConfig::Scope::all_layers || i == 0);
        if (gate) {
            tr.pred_features[i] = encode_attention(*features[i], tr.attention.maps, pl.name);
            tr.gated[i] = true;
        } else {
            tr.pred_features[i] = *features[i]; // plain copy keeps backward uniform
        }
        tr.pred_features[i].ensure_grad();

        const int fc = tr.pred_features[i].c;
        fr.heads[i].cls = ops::conv2d(tr.pred_features[i], params.at("head." + pl.name + ".cls.w"),
                                      params.bias("head." + pl.name + ".cls.b"),
                                      ConvSpec::simple(fc, per_loc * 2, 1, 0));
        fr.heads[i].loc = ops::conv2d(tr.pred_features[i], params.at("head." + pl.name + ".loc.w"),
                                      params.bias("head." + pl.name + ".loc.b"),
                                      ConvSpec::simple(fc, per_loc * 5, 1, 0));
        fr.heads[i].cls.ensure_grad();
        fr.heads[i].loc.ensure_grad();
    }
    return fr;
}

template <typename T>
void backward(ForwardResult<T>& fr, ModelParamsT<T>& params, const DetectorConfig& cfg) {
    NetTrace<T>& tr = fr.trace;
    const int per_loc = anchors_per_location(cfg);

    // activation grads everywhere the chain needs them
    for (std::size_t i = 0; i < cfg.backbone.size(); ++i) {
        if (cfg.backbone[i].kind == BackboneLayerSpec::Kind::conv)
            tr.conv_acts[i].ensure_grad();
        else
            tr.pools.at(static_cast<int>(i)).output.ensure_grad();
    }
    for (auto& [tap, inc] : tr.inception) inc.out.ensure_grad();

    std::map<std::string, int> layer_index;
    for (std::size_t i = 0; i < cfg.backbone.size(); ++i)
        layer_index[cfg.backbone[i].name] = static_cast<int>(i);
    const auto act_ref = [&](const std::string& tap) -> TensorT<T>& {
        const int i = layer_index.at(tap);
        return cfg.backbone[i].kind == BackboneLayerSpec::Kind::conv
                   ? tr.conv_acts[i]
                   : tr.pools.at(i).output;
    };
    const auto feature_ref = [&](std::size_t i) -> TensorT<T>& {
        const auto& pl = cfg.prediction_layers[i];
        return pl.kind == PredictionLayerSpec::Kind::aif ? tr.aif.at(pl.name).out
                                                         : tr.inception.at(pl.source).out;
    };

    // heads, then the attention gate
    for (std::size_t i = 0; i < cfg.prediction_layers.size(); ++i) {
        const auto& pl = cfg.prediction_layers[i];
        const int fc = tr.pred_features[i].c;
        ops::conv2d_backward(tr.pred_features[i], params.at("head." + pl.name + ".cls.w"),
                             params.bias_grad("head." + pl.name + ".cls.b"),
                             ConvSpec::simple(fc, per_loc * 2, 1, 0), fr.heads[i].cls);
        ops::conv2d_backward(tr.pred_features[i], params.at("head." + pl.name + ".loc.w"),
                             params.bias_grad("head." + pl.name + ".loc.b"),
                             ConvSpec::simple(fc, per_loc * 5, 1, 0), fr.heads[i].loc);

        TensorT<T>& feat = feature_ref(i);
        feat.ensure_grad();
        if (tr.gated[i]) {
            ops::elementwise_scale_backward(feat, tr.attention.maps.resized.at(pl.name),
                                            tr.pred_features[i]);
        } else {
            for (std::size_t e = 0; e < feat.grad.size(); ++e)
                feat.grad[e] += tr.pred_features[i].grad[e];
        }
    }

    if (tr.has_attention) {
        TensorT<T>& f_aif1 = feature_ref(0);
        attention_backward(f_aif1, params, "att",
                           cfg.prediction_layers.front().stride, tr.attention);
    }

    for (const auto& pl : cfg.prediction_layers) {
        if (pl.kind != PredictionLayerSpec::Kind::aif) continue;
        TensorT<T>* lower = pl.lower.empty() ? nullptr : &tr.inception.at(pl.lower).out;
        TensorT<T>* higher = pl.higher.empty() ? nullptr : &tr.inception.at(pl.higher).out;
        aif_backward(lower, tr.inception.at(pl.source).out, higher, params, "aif." + pl.name,
                     tr.aif.at(pl.name));
    }

    for (const std::string& tap : tap_order(cfg))
        inception_backward(act_ref(tap), params, "inc." + tap, tr.inception.at(tap));

    // backbone chain in reverse; the raw image gets no grad buffer
    for (int i = static_cast<int>(cfg.backbone.size()) - 1; i >= 0; --i) {
        const auto& bl = cfg.backbone[i];
        TensorT<T>& below = i == 0 ? tr.input
                            : (cfg.backbone[i - 1].kind == BackboneLayerSpec::Kind::conv
                                   ? tr.conv_acts[i - 1]
                                   : tr.pools.at(i - 1).output);
        if (bl.kind == BackboneLayerSpec::Kind::conv) {
            ops::conv2d_backward(below, params.at("backbone." + bl.name + ".w"),
                                 params.bias_grad("backbone." + bl.name + ".b"),
                                 backbone_conv_spec(bl, below.c), tr.conv_acts[i]);
        } else {
            ops::maxpool2d_backward(tr.pools.at(i), below);
        }
    }
}

template <typename T>
std::vector<double> negative_cls_losses(const ForwardResult<T>& fr, const AnchorSet& anchors) {
    std::vector<double> losses(anchors.size(), 0.0);
    for (std::size_t a = 0; a < anchors.size(); ++a) {
        const AnchorLoc loc = locate_anchor(anchors, a);
        const auto& cls = fr.heads[loc.layer].cls;
        const T l0 = cls.at(0, loc.slot * 2 + 0, loc.iy, loc.ix);
        const T l1 = cls.at(0, loc.slot * 2 + 1, loc.iy, loc.ix);
        losses[a] = two_class_ce(l0, l1, 0);
    }
    return losses;
}

template <typename T>
static LossBreakdown loss_impl(const ForwardResult<T>* fr_const, ForwardResult<T>* fr_mut,
                               const TargetBundle& targets, const AnchorSet& anchors,
                               const BinaryMask* mask, const DetectorConfig& cfg, double scale) {
    const ForwardResult<T>& fr = fr_const ? *fr_const : *fr_mut;
    require(targets.labels.size() == anchors.size(), "total_loss: targets/anchors size mismatch");
    require(fr.heads.size() == cfg.prediction_layers.size(), "total_loss: head count mismatch");

    std::size_t active = 0;
    for (auto v : targets.labels)
        if (v != -1) ++active;
    require(active > 0, "total_loss: no anchors to supervise (zero positives and zero "
                        "retained negatives)");

    LossBreakdown out;
    out.positives = targets.positive_count;

    // classification summed over non-ignored anchors, normalised by positive
    // count (active count when the image has no positives)
    const double cls_norm =
        targets.positive_count > 0 ? targets.positive_count : static_cast<double>(active);
    double cls_total = 0;
    for (std::size_t a = 0; a < anchors.size(); ++a) {
        const int label = targets.labels[a];
        if (label == -1) continue;
        const AnchorLoc loc = locate_anchor(anchors, a);
        const auto& cls = fr.heads[loc.layer].cls;
        const T l0 = cls.at(0, loc.slot * 2 + 0, loc.iy, loc.ix);
        const T l1 = cls.at(0, loc.slot * 2 + 1, loc.iy, loc.ix);
        double p0 = 0, p1 = 0;
        cls_total += two_class_ce(l0, l1, label, &p0, &p1);
        if (fr_mut) {
            auto& g = fr_mut->heads[loc.layer].cls;
            const double w = cfg.cls_weight * scale / cls_norm;
            g.grad[g.index(0, loc.slot * 2 + 0, loc.iy, loc.ix)] +=
                static_cast<T>(w * (p0 - (label == 0 ? 1.0 : 0.0)));
            g.grad[g.index(0, loc.slot * 2 + 1, loc.iy, loc.ix)] +=
                static_cast<T>(w * (p1 - (label == 1 ? 1.0 : 0.0)));
        }
    }
    out.cls = cls_total / cls_norm;

    // localisation over positives, averaged by positive count
    double loc_total = 0;
    if (targets.positive_count > 0) {
        for (const auto& [a, target] : targets.offsets) {
            const AnchorLoc loc = locate_anchor(anchors, static_cast<std::size_t>(a));
            const auto& lt = fr.heads[loc.layer].loc;
            T pred[5], targ[5];
            for (int j = 0; j < 5; ++j)
                pred[j] = lt.at(0, loc.slot * 5 + j, loc.iy, loc.ix);
            targ[0] = static_cast<T>(target.tx);
            targ[1] = static_cast<T>(target.ty);
            targ[2] = static_cast<T>(target.tw);
            targ[3] = static_cast<T>(target.th);
            targ[4] = static_cast<T>(target.ttheta);
            loc_total += ops::smooth_l1(std::span<const T>(pred, 5), std::span<const T>(targ, 5));
            if (fr_mut) {
                T grad5[5] = {};
                const T w = static_cast<T>(cfg.loc_weight * scale /
                                           static_cast<double>(targets.positive_count));
                ops::smooth_l1_backward(std::span<const T>(pred, 5), std::span<const T>(targ, 5),
                                        w, std::span<T>(grad5, 5));
                auto& g = fr_mut->heads[loc.layer].loc;
                for (int j = 0; j < 5; ++j)
                    g.grad[g.index(0, loc.slot * 5 + j, loc.iy, loc.ix)] += grad5[j];
            }
        }
        out.loc = loc_total / static_cast<double>(targets.positive_count);
    }

    if (cfg.attention.enabled && fr.trace.has_attention) {
        require(mask != nullptr, "total_loss: attention enabled but no mask supplied");
        out.att = attention_loss(fr.trace.attention.maps.alpha, *mask);
        if (fr_mut)
            attention_loss_backward(fr.trace.attention.maps.alpha, *mask,
                                    static_cast<T>(cfg.attention.loss_weight * scale),
                                    fr_mut->trace.attention.maps.alpha);
    }

    out.total = cfg.cls_weight * out.cls + cfg.loc_weight * out.loc +
                (cfg.attention.enabled ? cfg.attention.loss_weight * out.att : 0.0);
    return out;
}

template <typename T>
LossBreakdown total_loss(const ForwardResult<T>& fr, const TargetBundle& targets,
                         const AnchorSet& anchors, const BinaryMask* mask,
                         const DetectorConfig& cfg) {
    return loss_impl<T>(&fr, nullptr, targets, anchors, mask, cfg, 0.0);
}

template <typename T>
LossBreakdown total_loss_with_grads(ForwardResult<T>& fr, const TargetBundle& targets,
                                    const AnchorSet& anchors, const BinaryMask* mask,
                                    const DetectorConfig& cfg, double scale) {
    return loss_impl<T>(nullptr, &fr, targets, anchors, mask, cfg, scale);
}

LossBreakdown train_step(std::span<const SceneSample> batch, ModelParams& params,
                         OptimizerState& state, const DetectorConfig& cfg,
                         const AnchorSet& anchors, Rng& rng) {
    require(!batch.empty(), "train_step: empty batch");
    if (state.lr == 0) state.lr = cfg.optimizer.lr;
    if (!state.decayed && state.step >= cfg.optimizer.decay_step) {
        state.lr *= cfg.optimizer.decay_factor;
        state.decayed = true;
    }

    params.zero_grads();
    const double scale = 1.0 / static_cast<double>(batch.size());
    LossBreakdown record;

    for (const SceneSample& raw : batch) {
        SceneSample sample =
            cfg.augment.enabled ? augment_sample(raw, rng, cfg.augment, cfg.input_size) : raw;
        require(sample.image.h == cfg.input_size,
                "train_step: sample size does not match config input_size");

        auto fr = forward<float>(sample.image, params, cfg);
        const auto match =
            match_anchors(anchors, sample.boxes, cfg.matching.pos_threshold,
                          cfg.matching.rotated_overlap);
        const auto neg = negative_cls_losses(fr, anchors);
        TargetOptions topt;
        topt.neg_pos_ratio = cfg.matching.neg_pos_ratio;
        topt.neg_floor = cfg.matching.neg_floor;
        const auto targets = build_targets(match, anchors, sample.boxes, neg, topt);

        const BinaryMask* mask = cfg.attention.enabled ? &sample.mask : nullptr;
        const auto loss = total_loss_with_grads(fr, targets, anchors, mask, cfg, scale);
        if (!std::isfinite(loss.total))
            fail_numeric("train_step: non-finite loss (cls=" + std::to_string(loss.cls) +
                         " loc=" + std::to_string(loss.loc) + " att=" + std::to_string(loss.att) +
                         ") at step " + std::to_string(state.step));
        record.total += loss.total * scale;
        record.cls += loss.cls * scale;
        record.loc += loss.loc * scale;
        record.att += loss.att * scale;
        record.positives += loss.positives;

        backward(fr, params, cfg);
    }

    const auto frozen = frozen_param_prefixes(cfg);
    for (auto& [name, t] : params.tensors) {
        bool skip = false;
        for (const auto& pre : frozen)
            if (name.rfind(pre, 0) == 0) {
                skip = true;
                break;
            }
        if (skip) continue;
        auto& vel = state.velocity[name];
        if (vel.size() != t.data.size()) vel.assign(t.data.size(), 0.0f);
        kern::sgd_step<float>(t.data.size(), static_cast<float>(state.lr),
                              static_cast<float>(cfg.optimizer.momentum), t.grad.data(),
                              vel.data(), t.data.data());
    }
    ++state.step;
    return record;
}

template <typename T>
std::vector<Detection> detect(const TensorT<T>& image, const ModelParamsT<T>& params,
                              const DetectorConfig& cfg, const AnchorSet& anchors,
                              double conf_override, double nms_override) {
    const double conf = conf_override > 0 ? conf_override : cfg.conf_threshold;
    const double nms_thr = nms_override > 0 ? nms_override : cfg.nms_threshold;

    const auto fr = forward(image, params, cfg);

    std::vector<Detection> cands;
    for (std::size_t a = 0; a < anchors.size(); ++a) {
        const AnchorLoc loc = locate_anchor(anchors, a);
        const auto& cls = fr.heads[loc.layer].cls;
        const T l0 = cls.at(0, loc.slot * 2 + 0, loc.iy, loc.ix);
        const T l1 = cls.at(0, loc.slot * 2 + 1, loc.iy, loc.ix);
        double p0 = 0, p1 = 0;
        two_class_ce(l0, l1, 0, &p0, &p1);
        if (p1 < conf) continue;
        const auto& lt = fr.heads[loc.layer].loc;
        BoxOffsets off;
        off.tx = lt.at(0, loc.slot * 5 + 0, loc.iy, loc.ix);
        off.ty = lt.at(0, loc.slot * 5 + 1, loc.iy, loc.ix);
        off.tw = lt.at(0, loc.slot * 5 + 2, loc.iy, loc.ix);
        off.th = lt.at(0, loc.slot * 5 + 3, loc.iy, loc.ix);
        off.ttheta = lt.at(0, loc.slot * 5 + 4, loc.iy, loc.ix);
        Detection det;
        det.box = decode_offsets(off, anchors.boxes[a]);
        // clip to the image: centre inside, sizes bounded
        const double s = cfg.input_size;
        det.box.cx = std::clamp(det.box.cx, 0.0, s);
        det.box.cy = std::clamp(det.box.cy, 0.0, s);
        det.box.w = std::min(det.box.w, 2.0 * s);
        det.box.h = std::min(det.box.h, 2.0 * s);
        det.score = p1;
        cands.push_back(det);
    }

    // cap the suppression workload; candidates are score-ranked anyway
    constexpr std::size_t kPreNmsTopK = 400;
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Detection& a, const Detection& b) { return a.score > b.score; });
    if (cands.size() > kPreNmsTopK) cands.resize(kPreNmsTopK);

    return nms(cands, nms_thr, cfg.nms_rotated);
}

#define SSTD_INSTANTIATE_DETECTOR(T)                                                               \
    template ModelParamsT<T> init_params<T>(const DetectorConfig&, Rng&);                          \
    template ForwardResult<T> forward<T>(const TensorT<T>&, const ModelParamsT<T>&,                \
                                         const DetectorConfig&);                                   \
    template void backward<T>(ForwardResult<T>&, ModelParamsT<T>&, const DetectorConfig&);         \
    template std::vector<double> negative_cls_losses<T>(const ForwardResult<T>&,                   \
                                                        const AnchorSet&);                         \
    template LossBreakdown total_loss<T>(const ForwardResult<T>&, const TargetBundle&,             \
                                         const AnchorSet&, const BinaryMask*,                      \
                                         const DetectorConfig&);                                   \
    template LossBreakdown total_loss_with_grads<T>(ForwardResult<T>&, const TargetBundle&,        \
                                                    const AnchorSet&, const BinaryMask*,           \
                                                    const DetectorConfig&, double);                \
    template std::vector<Detection> detect<T>(const TensorT<T>&, const ModelParamsT<T>&,           \
                                              const DetectorConfig&, const AnchorSet&, double,     \
                                              double);

SSTD_INSTANTIATE_DETECTOR(float)
SSTD_INSTANTIATE_DETECTOR(double)

#undef SSTD_INSTANTIATE_DETECTOR

} // namespace sstd
