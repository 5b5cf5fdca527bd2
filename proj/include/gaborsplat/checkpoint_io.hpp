#ifndef GABORSPLAT_CHECKPOINT_IO_HPP
#define GABORSPLAT_CHECKPOINT_IO_HPP

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "gaborsplat/core.hpp"
#include "gaborsplat/scene.hpp"

namespace gsp {
namespace ckpt_detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(char(v & 0xff));
    out.push_back(char((v >> 8) & 0xff));
    out.push_back(char((v >> 16) & 0xff));
    out.push_back(char((v >> 24) & 0xff));
}

inline std::uint32_t get_u32(const std::string& b, size_t off) {
    return std::uint32_t(std::uint8_t(b[off])) | std::uint32_t(std::uint8_t(b[off + 1])) << 8 |
           std::uint32_t(std::uint8_t(b[off + 2])) << 16 |
           std::uint32_t(std::uint8_t(b[off + 3])) << 24;
}

constexpr std::uint32_t kVersion = 1;
constexpr size_t kHeaderSize = 20;  // magic + version + n_waves + count + mode

}  // namespace ckpt_detail

// Layout (all integers little-endian): "GSPL", u32 version, u32 n_waves,
// u32 primitive count, u32 mode tag, count*stride f32 raw parameters,
// u32 CRC-32 of everything before it. Mode tags follow the RenderMode
// declaration order.
inline std::string serialize_checkpoint(const Scene& scene) {
    scene.validate();
    std::string out;
    out.reserve(ckpt_detail::kHeaderSize + scene.raw.size() * 4 + 4);
    out += "GSPL";
    ckpt_detail::put_u32(out, ckpt_detail::kVersion);
    ckpt_detail::put_u32(out, std::uint32_t(scene.n_waves));
    ckpt_detail::put_u32(out, std::uint32_t(scene.count()));
    ckpt_detail::put_u32(out, std::uint32_t(scene.mode));
    for (Real v : scene.raw) ckpt_detail::put_u32(out, std::bit_cast<std::uint32_t>(float(v)));
    std::uint32_t crc =
        std::uint32_t(crc32(0L, reinterpret_cast<const Bytef*>(out.data()), uInt(out.size())));
    ckpt_detail::put_u32(out, crc);
    return out;
}

inline Scene parse_checkpoint(const std::string& bytes) {
    using namespace ckpt_detail;
    if (bytes.size() >= 4 && bytes.compare(0, 4, "GSPL") != 0)
        throw std::runtime_error("checkpoint: not a checkpoint (bad magic)");
    if (bytes.size() < kHeaderSize + 4)
        throw std::runtime_error("checkpoint: unexpected end at offset " +
                                 std::to_string(bytes.size()));
    std::uint32_t version = get_u32(bytes, 4);
    if (version != kVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    std::uint32_t n_waves = get_u32(bytes, 8);
    if (n_waves < 1 || n_waves > std::uint32_t(kMaxWaves))
        throw std::runtime_error("checkpoint: invalid wave count " + std::to_string(n_waves));
    std::uint32_t count = get_u32(bytes, 12);
    std::uint32_t mode_tag = get_u32(bytes, 16);
    if (mode_tag > 4)
        throw std::runtime_error("checkpoint: invalid mode tag " + std::to_string(mode_tag));

    size_t stride = kBaseStride + 3 * size_t(n_waves);
    std::uint64_t need = kHeaderSize + std::uint64_t(count) * stride * 4 + 4;
    if (bytes.size() < need)
        throw std::runtime_error("checkpoint: unexpected end at offset " +
                                 std::to_string(bytes.size()));
    if (bytes.size() > need)
        throw std::runtime_error("checkpoint: trailing data at offset " + std::to_string(need));

    std::uint32_t stored_crc = get_u32(bytes, bytes.size() - 4);
    std::uint32_t crc = std::uint32_t(
        crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), uInt(bytes.size() - 4)));
    if (stored_crc != crc) throw std::runtime_error("checkpoint: checksum mismatch");

    Scene scene;
    scene.n_waves = int(n_waves);
    scene.mode = RenderMode(mode_tag);
    scene.raw.resize(size_t(count) * stride);
    for (size_t i = 0; i < scene.raw.size(); ++i)
        scene.raw[i] = Real(std::bit_cast<float>(get_u32(bytes, kHeaderSize + i * 4)));
    scene.validate();
    return scene;
}

inline void save_checkpoint(const std::string& path, const Scene& scene) {
    std::string bytes = serialize_checkpoint(scene);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out) throw std::runtime_error("write failed: '" + path + "'");
}

inline Scene load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_checkpoint(buf.str());
    } catch (const std::runtime_error& e) {
        throw std::runtime_error("'" + path + "': " + e.what());
    }
}

}  // namespace gsp

#endif
