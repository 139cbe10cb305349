#include "sstd/config.hpp"

#include <fstream>
#include <set>

#include "json.hpp"

namespace sstd {

void DetectorConfig::validate() const {
    require(input_size >= 8, "config: input_size must be >= 8");
    require(!prediction_layers.empty(), "config: no prediction layers");
    int last_stride = 0;
    std::set<std::string> names;
    for (const auto& pl : prediction_layers) {
        require(pl.stride > last_stride, "config: prediction layer strides must be strictly "
                                         "increasing (layer '" + pl.name + "')");
        last_stride = pl.stride;
        require(names.insert(pl.name).second, "config: duplicate prediction layer '" + pl.name + "'");
        require(input_size % pl.stride == 0, "config: input_size not divisible by stride of '" +
                                                 pl.name + "'");
        require(pl.scales.size() >= 1, "config: layer '" + pl.name + "' has no scales");
    }
    require(conf_threshold > 0 && conf_threshold < 1, "config: conf_threshold must be in (0,1)");
    require(nms_threshold > 0 && nms_threshold < 1, "config: nms_threshold must be in (0,1)");
    require(matching.pos_threshold > 0 && matching.pos_threshold < 1,
            "config: matching pos_threshold must be in (0,1)");
    require(inception_branch_channels >= 1 && aif_channels >= 1, "config: channel widths >= 1");
    if (runnable()) {
        std::set<std::string> taps;
        for (const auto& bl : backbone) {
            require(!bl.name.empty(), "config: backbone layer without name");
            require(taps.insert(bl.name).second, "config: duplicate backbone layer '" + bl.name + "'");
        }
        for (const auto& pl : prediction_layers) {
            require(taps.count(pl.source), "config: layer '" + pl.name + "' taps unknown source '" +
                                               pl.source + "'");
            if (pl.kind == PredictionLayerSpec::Kind::aif) {
                if (!pl.lower.empty())
                    require(taps.count(pl.lower), "config: aif '" + pl.name + "' references "
                                                  "unknown lower tap '" + pl.lower + "'");
                if (!pl.higher.empty())
                    require(taps.count(pl.higher), "config: aif '" + pl.name + "' references "
                                                   "unknown higher tap '" + pl.higher + "'");
            }
        }
    }
}

std::vector<LayerAnchorSpec> DetectorConfig::anchor_specs() const {
    std::vector<LayerAnchorSpec> specs;
    specs.reserve(prediction_layers.size());
    for (const auto& pl : prediction_layers) {
        LayerAnchorSpec s;
        s.layer_name = pl.name;
        s.stride = pl.stride;
        s.scales = pl.scales;
        s.aspect_ratios = aspect_ratios;
        specs.push_back(std::move(s));
    }
    return specs;
}

namespace {

// Box scales from the 704-px configuration, one column per prediction layer.
constexpr double kFullScales[7][3] = {
    {7.7, 17.9, 28.2},    {38.4, 48.6, 58.9},   {69.1, 79.4, 89.6},  {102.4, 133.1, 163.8},
    {194.6, 225.3, 256.0}, {286.7, 317.4, 348.2}, {378.9, 409.6, 440.3},
};

std::vector<double> scaled_column(int col, double factor) {
    return {kFullScales[col][0] * factor, kFullScales[col][1] * factor,
            kFullScales[col][2] * factor};
}

} // namespace

DetectorConfig DetectorConfig::desk_default() {
    DetectorConfig cfg;
    cfg.input_size = 128;
    cfg.backbone = {
        {"conv1", BackboneLayerSpec::Kind::conv, 16, 3, 1, 1},
        {"pool1", BackboneLayerSpec::Kind::maxpool, 0, 2, 2, 0},
        {"conv2", BackboneLayerSpec::Kind::conv, 32, 3, 1, 1},
        {"pool2", BackboneLayerSpec::Kind::maxpool, 0, 2, 2, 0},
        {"conv3", BackboneLayerSpec::Kind::conv, 32, 3, 1, 1}, // stride 4 tap
        {"pool3", BackboneLayerSpec::Kind::maxpool, 0, 2, 2, 0},
        {"conv4", BackboneLayerSpec::Kind::conv, 64, 3, 1, 1}, // stride 8 tap
        {"pool4", BackboneLayerSpec::Kind::maxpool, 0, 2, 2, 0},
        {"conv5", BackboneLayerSpec::Kind::conv, 64, 3, 1, 1}, // stride 16 tap
        {"pool5", BackboneLayerSpec::Kind::maxpool, 0, 2, 2, 0},
        {"conv6", BackboneLayerSpec::Kind::conv, 64, 3, 1, 1}, // stride 32 tap
    };
    const double f = 128.0 / 704.0;
    cfg.prediction_layers = {
        {"AIF-1", PredictionLayerSpec::Kind::aif, "conv4", "conv3", "conv5", 8,
         scaled_column(0, f)},
        {"Inc-2", PredictionLayerSpec::Kind::inception, "conv5", "", "", 16, scaled_column(1, f)},
        {"Inc-3", PredictionLayerSpec::Kind::inception, "conv6", "", "", 32, scaled_column(2, f)},
    };
    cfg.inception_branch_channels = 16;
    cfg.aif_channels = 64;
    cfg.attention.width = 16;
    cfg.optimizer.decay_step = 1500;
    return cfg;
}

DetectorConfig DetectorConfig::desk_small() {
    DetectorConfig cfg;
    cfg.input_size = 32;
    cfg.backbone = {
        {"conv1", BackboneLayerSpec::Kind::conv, 4, 3, 1, 1},
        {"pool1", BackboneLayerSpec::Kind::maxpool, 0, 2, 2, 0},
        {"conv2", BackboneLayerSpec::Kind::conv, 8, 3, 1, 1},
        {"pool2", BackboneLayerSpec::Kind::maxpool, 0, 2, 2, 0},
        {"conv3", BackboneLayerSpec::Kind::conv, 8, 3, 1, 1}, // stride 4 tap
        {"pool3", BackboneLayerSpec::Kind::maxpool, 0, 2, 2, 0},
        {"conv4", BackboneLayerSpec::Kind::conv, 8, 3, 1, 1}, // stride 8 tap
        {"pool4", BackboneLayerSpec::Kind::maxpool, 0, 2, 2, 0},
        {"conv5", BackboneLayerSpec::Kind::conv, 8, 3, 1, 1}, // stride 16 tap
    };
    const double f = 32.0 / 704.0;
    cfg.prediction_layers = {
        {"AIF-1", PredictionLayerSpec::Kind::aif, "conv4", "conv3", "conv5", 8,
         scaled_column(0, f)},
        {"Inc-2", PredictionLayerSpec::Kind::inception, "conv5", "", "", 16, scaled_column(1, f)},
    };
    cfg.inception_branch_channels = 2;
    cfg.aif_channels = 8;
    cfg.attention.width = 4;
    cfg.batch_size = 1;
    return cfg;
}

DetectorConfig DetectorConfig::full_scale() {
    DetectorConfig cfg;
    cfg.input_size = 704;
    cfg.inception_branch_channels = 128;
    cfg.aif_channels = 512;
    cfg.attention.width = 512;
    // strides chosen among divisors of 704 so every grid is exact
    const char* names[7] = {"AIF-1", "AIF-2", "AIF-3", "Inc-4", "Inc-5", "Inc-6", "Inc-7"};
    const int strides[7] = {8, 16, 32, 64, 88, 176, 352};
    const PredictionLayerSpec::Kind kinds[7] = {
        PredictionLayerSpec::Kind::aif,       PredictionLayerSpec::Kind::aif,
        PredictionLayerSpec::Kind::aif,       PredictionLayerSpec::Kind::inception,
        PredictionLayerSpec::Kind::inception, PredictionLayerSpec::Kind::inception,
        PredictionLayerSpec::Kind::inception,
    };
    for (int i = 0; i < 7; ++i) {
        PredictionLayerSpec pl;
        pl.name = names[i];
        pl.kind = kinds[i];
        pl.stride = strides[i];
        pl.scales = scaled_column(i, 1.0);
        cfg.prediction_layers.push_back(std::move(pl));
    }
    cfg.batch_size = 32;
    return cfg;
}

namespace {

using nlohmann::json;

json backbone_to_json(const std::vector<BackboneLayerSpec>& layers) {
    json arr = json::array();
    for (const auto& l : layers) {
        json j;
        j["name"] = l.name;
        j["type"] = l.kind == BackboneLayerSpec::Kind::conv ? "conv" : "maxpool";
        if (l.kind == BackboneLayerSpec::Kind::conv) j["out_channels"] = l.out_channels;
        j["kernel"] = l.kernel;
        j["stride"] = l.stride;
        j["pad"] = l.pad;
        arr.push_back(std::move(j));
    }
    return arr;
}

std::vector<BackboneLayerSpec> backbone_from_json(const json& arr) {
    std::vector<BackboneLayerSpec> out;
    for (const auto& j : arr) {
        BackboneLayerSpec l;
        l.name = j.at("name").get<std::string>();
        const auto type = j.at("type").get<std::string>();
        if (type == "conv")
            l.kind = BackboneLayerSpec::Kind::conv;
        else if (type == "maxpool")
            l.kind = BackboneLayerSpec::Kind::maxpool;
        else
            fail_validation("config: unknown backbone layer type '" + type + "'");
        l.out_channels = j.value("out_channels", 0);
        l.kernel = j.value("kernel", 3);
        l.stride = j.value("stride", 1);
        l.pad = j.value("pad", l.kind == BackboneLayerSpec::Kind::conv ? 1 : 0);
        out.push_back(std::move(l));
    }
    return out;
}

} // namespace

DetectorConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail_io("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        fail_validation("config parse error in '" + path + "': " + e.what());
    }

    DetectorConfig cfg;
    cfg.input_size = j.value("input_size", cfg.input_size);
    if (j.contains("backbone")) cfg.backbone = backbone_from_json(j["backbone"]);
    if (j.contains("prediction_layers")) {
        cfg.prediction_layers.clear();
        for (const auto& jl : j["prediction_layers"]) {
            PredictionLayerSpec pl;
            pl.name = jl.at("name").get<std::string>();
            const auto kind = jl.at("kind").get<std::string>();
            if (kind == "aif")
                pl.kind = PredictionLayerSpec::Kind::aif;
            else if (kind == "inception")
                pl.kind = PredictionLayerSpec::Kind::inception;
            else
                fail_validation("config: unknown prediction layer kind '" + kind + "'");
            pl.source = jl.value("source", "");
            pl.lower = jl.value("lower", "");
            pl.higher = jl.value("higher", "");
            pl.stride = jl.at("stride").get<int>();
            pl.scales = jl.at("scales").get<std::vector<double>>();
            cfg.prediction_layers.push_back(std::move(pl));
        }
    }
    if (j.contains("aspect_ratios"))
        cfg.aspect_ratios = j["aspect_ratios"].get<std::vector<double>>();
    if (j.contains("channels")) {
        const auto& jc = j["channels"];
        cfg.inception_branch_channels =
            jc.value("inception_branch", cfg.inception_branch_channels);
        cfg.aif_channels = jc.value("aif", cfg.aif_channels);
        cfg.attention.width = jc.value("attention", cfg.attention.width);
    }
    if (j.contains("attention")) {
        const auto& ja = j["attention"];
        cfg.attention.enabled = ja.value("enabled", cfg.attention.enabled);
        const auto scope = ja.value("scope", std::string("all_layers"));
        if (scope == "all_layers")
            cfg.attention.scope = AttentionConfig::Scope::all_layers;
        else if (scope == "first_aif")
            cfg.attention.scope = AttentionConfig::Scope::first_aif;
        else
            fail_validation("config: unknown attention scope '" + scope + "'");
        cfg.attention.loss_weight = ja.value("loss_weight", cfg.attention.loss_weight);
    }
    if (j.contains("loss")) {
        cfg.cls_weight = j["loss"].value("cls", cfg.cls_weight);
        cfg.loc_weight = j["loss"].value("loc", cfg.loc_weight);
    }
    if (j.contains("matching")) {
        const auto& jm = j["matching"];
        cfg.matching.pos_threshold = jm.value("pos_threshold", cfg.matching.pos_threshold);
        cfg.matching.neg_pos_ratio = jm.value("neg_pos_ratio", cfg.matching.neg_pos_ratio);
        cfg.matching.neg_floor = jm.value("neg_floor", cfg.matching.neg_floor);
        cfg.matching.rotated_overlap = jm.value("rotated_overlap", cfg.matching.rotated_overlap);
    }
    if (j.contains("augment")) {
        const auto& ja = j["augment"];
        cfg.augment.enabled = ja.value("enabled", cfg.augment.enabled);
        if (ja.contains("min_overlaps"))
            cfg.augment.min_overlaps = ja["min_overlaps"].get<std::vector<double>>();
        cfg.augment.max_attempts = ja.value("max_attempts", cfg.augment.max_attempts);
        cfg.augment.min_patch_scale = ja.value("min_patch_scale", cfg.augment.min_patch_scale);
        cfg.augment.brightness_delta = ja.value("brightness_delta", cfg.augment.brightness_delta);
        cfg.augment.contrast_lo = ja.value("contrast_lo", cfg.augment.contrast_lo);
        cfg.augment.contrast_hi = ja.value("contrast_hi", cfg.augment.contrast_hi);
    }
    if (j.contains("optimizer")) {
        const auto& jo = j["optimizer"];
        cfg.optimizer.lr = jo.value("lr", cfg.optimizer.lr);
        cfg.optimizer.momentum = jo.value("momentum", cfg.optimizer.momentum);
        cfg.optimizer.decay_step = jo.value("decay_step", cfg.optimizer.decay_step);
        cfg.optimizer.decay_factor = jo.value("decay_factor", cfg.optimizer.decay_factor);
        cfg.optimizer.freeze_layers = jo.value("freeze_layers", cfg.optimizer.freeze_layers);
    }
    if (j.contains("thresholds")) {
        cfg.conf_threshold = j["thresholds"].value("conf", cfg.conf_threshold);
        cfg.nms_threshold = j["thresholds"].value("nms", cfg.nms_threshold);
        cfg.nms_rotated = j["thresholds"].value("nms_rotated", cfg.nms_rotated);
    }
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.validate();
    return cfg;
}

void save_config(const DetectorConfig& cfg, const std::string& path) {
    json j;
    j["input_size"] = cfg.input_size;
    if (!cfg.backbone.empty()) j["backbone"] = backbone_to_json(cfg.backbone);
    json layers = json::array();
    for (const auto& pl : cfg.prediction_layers) {
        json jl;
        jl["name"] = pl.name;
        jl["kind"] = pl.kind == PredictionLayerSpec::Kind::aif ? "aif" : "inception";
        if (!pl.source.empty()) jl["source"] = pl.source;
        if (!pl.lower.empty()) jl["lower"] = pl.lower;
        if (!pl.higher.empty()) jl["higher"] = pl.higher;
        jl["stride"] = pl.stride;
        jl["scales"] = pl.scales;
        layers.push_back(std::move(jl));
    }
    j["prediction_layers"] = std::move(layers);
    j["aspect_ratios"] = cfg.aspect_ratios;
    j["channels"] = {{"inception_branch", cfg.inception_branch_channels},
                     {"aif", cfg.aif_channels},
                     {"attention", cfg.attention.width}};
    j["attention"] = {
        {"enabled", cfg.attention.enabled},
        {"scope",
         cfg.attention.scope == AttentionConfig::Scope::all_layers ? "all_layers" : "first_aif"},
        {"loss_weight", cfg.attention.loss_weight}};
    j["loss"] = {{"cls", cfg.cls_weight}, {"loc", cfg.loc_weight}};
    j["matching"] = {{"pos_threshold", cfg.matching.pos_threshold},
                     {"neg_pos_ratio", cfg.matching.neg_pos_ratio},
                     {"neg_floor", cfg.matching.neg_floor},
                     {"rotated_overlap", cfg.matching.rotated_overlap}};
    j["augment"] = {{"enabled", cfg.augment.enabled},
                    {"min_overlaps", cfg.augment.min_overlaps},
                    {"max_attempts", cfg.augment.max_attempts},
                    {"min_patch_scale", cfg.augment.min_patch_scale},
                    {"brightness_delta", cfg.augment.brightness_delta},
                    {"contrast_lo", cfg.augment.contrast_lo},
                    {"contrast_hi", cfg.augment.contrast_hi}};
    j["optimizer"] = {{"lr", cfg.optimizer.lr},
                      {"momentum", cfg.optimizer.momentum},
                      {"decay_step", cfg.optimizer.decay_step},
                      {"decay_factor", cfg.optimizer.decay_factor},
                      {"freeze_layers", cfg.optimizer.freeze_layers}};
    j["thresholds"] = {{"conf", cfg.conf_threshold},
                       {"nms", cfg.nms_threshold},
                       {"nms_rotated", cfg.nms_rotated}};
    j["batch_size"] = cfg.batch_size;

    std::ofstream out(path);
    if (!out) fail_io("cannot write config file '" + path + "'");
    out << j.dump(2) << "\n";
}

} // namespace sstd
