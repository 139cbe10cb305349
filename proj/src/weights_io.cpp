#include "sstd/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace sstd {
namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
    put_u32(out, std::bit_cast<std::uint32_t>(v));
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t offset() const { return pos_; }

    std::uint32_t u32(const char* what) {
        need(4, what);
        const std::uint32_t v = static_cast<std::uint32_t>(bytes_[pos_]) |
                                (static_cast<std::uint32_t>(bytes_[pos_ + 1]) << 8) |
                                (static_cast<std::uint32_t>(bytes_[pos_ + 2]) << 16) |
                                (static_cast<std::uint32_t>(bytes_[pos_ + 3]) << 24);
        pos_ += 4;
        return v;
    }

    float f32(const char* what) { return std::bit_cast<float>(u32(what)); }

    std::string str(std::size_t len, const char* what) {
        need(len, what);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
        pos_ += len;
        return s;
    }

    void need(std::size_t count, const char* what) {
        if (pos_ + count > bytes_.size())
            fail_io(std::string("weights: unexpected end of data while reading ") + what,
                    static_cast<long long>(pos_));
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

} // namespace

std::vector<std::uint8_t> encode_weights(const ModelParams& params) {
    std::vector<std::uint8_t> out;
    out.push_back('S');
    out.push_back('S');
    out.push_back('T');
    out.push_back('D');
    put_u32(out, kWeightsVersion);
    put_u32(out, static_cast<std::uint32_t>(params.tensors.size()));
    for (const auto& [name, t] : params.tensors) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        put_u32(out, static_cast<std::uint32_t>(t.n));
        put_u32(out, static_cast<std::uint32_t>(t.c));
        put_u32(out, static_cast<std::uint32_t>(t.h));
        put_u32(out, static_cast<std::uint32_t>(t.w));
        for (float v : t.data) put_f32(out, v);
    }
    return out;
}

ModelParams decode_weights(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    r.need(4, "magic");
    if (std::memcmp(bytes.data(), "SSTD", 4) != 0) fail_io("weights: bad magic", 0);
    (void)r.str(4, "magic");

    const std::uint32_t version = r.u32("version");
    if (version != kWeightsVersion)
        fail_io("weights: unsupported version " + std::to_string(version) + " (expected " +
                    std::to_string(kWeightsVersion) + ")",
                4);

    const std::uint32_t count = r.u32("tensor count");
    ModelParams params;
    for (std::uint32_t i = 0; i < count; ++i) {
        const long long name_at = static_cast<long long>(r.offset());
        const std::uint32_t name_len = r.u32("name length");
        if (name_len == 0 || name_len > 4096)
            fail_io("weights: implausible name length " + std::to_string(name_len), name_at);
        const std::string name = r.str(name_len, "tensor name");
        const int n = static_cast<int>(r.u32("dim n"));
        const int c = static_cast<int>(r.u32("dim c"));
        const int h = static_cast<int>(r.u32("dim h"));
        const int w = static_cast<int>(r.u32("dim w"));
        if (n < 1 || c < 1 || h < 1 || w < 1)
            fail_io("weights: tensor '" + name + "' has invalid dims",
                    static_cast<long long>(r.offset()) - 16);
        Tensor t(n, c, h, w);
        r.need(t.size() * 4, "tensor data");
        for (std::size_t e = 0; e < t.size(); ++e) t.data[e] = r.f32("tensor data");
        if (params.has(name))
            fail_io("weights: duplicate tensor '" + name + "'", name_at);
        params.add(name, std::move(t));
    }
    return params;
}

void save_weights(const ModelParams& params, const std::string& path) {
    const auto bytes = encode_weights(params);
    std::ofstream out(path, std::ios::binary);
    if (!out) fail_io("cannot write weights file '" + path + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) fail_io("short write to '" + path + "'");
}

ModelParams load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_io("cannot open weights file '" + path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return decode_weights(bytes);
}

} // namespace sstd
