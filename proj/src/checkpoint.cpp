#include "amd/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "amd/errors.hpp"

namespace amd {

namespace {

constexpr char kMagic[4] = {'D', 'S', 'N', '1'};

void put_u8(std::string& out, uint8_t v) { out.push_back(static_cast<char>(v)); }

void put_u16(std::string& out, uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) {
    uint32_t bits = std::bit_cast<uint32_t>(v);
    put_u32(out, bits);
}

struct Reader {
    const std::string& bytes;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > bytes.size()) throw DataError("checkpoint: truncated file");
    }
    uint8_t u8() {
        need(1);
        return static_cast<uint8_t>(bytes[pos++]);
    }
    uint16_t u16() {
        need(2);
        uint16_t v = static_cast<uint16_t>(static_cast<uint8_t>(bytes[pos]) |
                                           (static_cast<uint8_t>(bytes[pos + 1]) << 8));
        pos += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<uint32_t>(static_cast<uint8_t>(bytes[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<uint64_t>(static_cast<uint8_t>(bytes[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
};

}  // namespace

std::string encode_network(const Network& net) {
    std::string out;
    out.append(kMagic, 4);
    put_u32(out, static_cast<uint32_t>(net.in_channels));
    put_u32(out, static_cast<uint32_t>(net.in_h));
    put_u32(out, static_cast<uint32_t>(net.in_w));
    put_u32(out, static_cast<uint32_t>(net.layers.size()));
    for (const auto& l : net.layers) {
        put_u8(out, static_cast<uint8_t>(l.spec.kind));
        put_u8(out, l.spec.trainable ? 1 : 0);
        put_u16(out, 0);
        put_u32(out, static_cast<uint32_t>(l.spec.kernel));
        put_u32(out, static_cast<uint32_t>(l.spec.stride));
        put_u32(out, static_cast<uint32_t>(l.spec.out_channels));
        put_u32(out, static_cast<uint32_t>(l.spec.units));
    }
    put_u64(out, net.param_count());
    for (const auto& l : net.layers) {
        for (double w : l.weights.data) put_f32(out, static_cast<float>(w));
        for (double b : l.bias.data) put_f32(out, static_cast<float>(b));
    }
    return out;
}

Network decode_network(const std::string& bytes) {
    Reader r{bytes};
    r.need(4);
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw DataError("checkpoint: bad magic (want DSN1)");
    r.pos = 4;

    int in_c = static_cast<int>(r.u32());
    int in_h = static_cast<int>(r.u32());
    int in_w = static_cast<int>(r.u32());
    uint32_t n_layers = r.u32();
    if (n_layers > 10000) throw DataError("checkpoint: implausible layer count");

    std::vector<LayerSpec> specs;
    specs.reserve(n_layers);
    for (uint32_t i = 0; i < n_layers; ++i) {
        LayerSpec s;
        uint8_t kind = r.u8();
        if (kind > static_cast<uint8_t>(LayerKind::Softmax))
            throw DataError("checkpoint: unknown layer kind " + std::to_string(kind));
        s.kind = static_cast<LayerKind>(kind);
        s.trainable = r.u8() != 0;
        r.u16();  // reserved
        s.kernel = static_cast<int>(r.u32());
        s.stride = static_cast<int>(r.u32());
        s.out_channels = static_cast<int>(r.u32());
        s.units = static_cast<int>(r.u32());
        specs.push_back(s);
    }

    Network net = make_network(in_c, in_h, in_w, specs);
    uint64_t declared = r.u64();
    if (declared != net.param_count())
        throw DataError("checkpoint: parameter count mismatch (file says " +
                        std::to_string(declared) + ", shapes need " +
                        std::to_string(net.param_count()) + ")");
    for (auto& l : net.layers) {
        for (auto& w : l.weights.data) w = r.f32();
        for (auto& b : l.bias.data) b = r.f32();
    }
    if (r.pos != bytes.size()) throw DataError("checkpoint: trailing bytes");
    return net;
}

void atomic_write_file(const std::filesystem::path& path, const std::string& bytes) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw DataError("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw DataError("rename failed for " + path.string() + ": " + ec.message());
}

void save_network(const std::filesystem::path& path, const Network& net) {
    atomic_write_file(path, encode_network(net));
}

Network load_network(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_network(bytes);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

}  // namespace amd
