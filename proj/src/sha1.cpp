#include "nqk/sha1.hpp"

#include <array>
#include <cstring>

namespace nqk {

namespace {

inline std::uint32_t rol(std::uint32_t x, int s) {
    return (x << s) | (x >> (32 - s));
}

}  // namespace

std::string sha1_hex(std::string_view data) {
    std::array<std::uint32_t, 5> h = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu,
                                      0x10325476u, 0xC3D2E1F0u};

    const std::uint64_t total_bits = static_cast<std::uint64_t>(data.size()) * 8;
    std::string msg(data);
    msg.push_back(static_cast<char>(0x80));
    while (msg.size() % 64 != 56) msg.push_back('\0');
    for (int i = 7; i >= 0; --i) {
        msg.push_back(static_cast<char>((total_bits >> (8 * i)) & 0xFF));
    }

    std::uint32_t w[80];
    for (std::size_t chunk = 0; chunk < msg.size(); chunk += 64) {
        const unsigned char* p = reinterpret_cast<const unsigned char*>(msg.data() + chunk);
        for (int t = 0; t < 16; ++t) {
            w[t] = (std::uint32_t(p[4 * t]) << 24) | (std::uint32_t(p[4 * t + 1]) << 16) |
                   (std::uint32_t(p[4 * t + 2]) << 8) | std::uint32_t(p[4 * t + 3]);
        }
        for (int t = 16; t < 80; ++t) {
            w[t] = rol(w[t - 3] ^ w[t - 8] ^ w[t - 14] ^ w[t - 16], 1);
        }

        std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
        for (int t = 0; t < 80; ++t) {
            std::uint32_t f, k;
            if (t < 20) {
                f = (b & c) | ((~b) & d);
                k = 0x5A827999u;
            } else if (t < 40) {
                f = b ^ c ^ d;
                k = 0x6ED9EBA1u;
            } else if (t < 60) {
                f = (b & c) | (b & d) | (c & d);
                k = 0x8F1BBCDCu;
            } else {
                f = b ^ c ^ d;
                k = 0xCA62C1D6u;
            }
            const std::uint32_t tmp = rol(a, 5) + f + e + k + w[t];
            e = d;
            d = c;
            c = rol(b, 30);
            b = a;
            a = tmp;
        }
        h[0] += a;
        h[1] += b;
        h[2] += c;
        h[3] += d;
        h[4] += e;
    }

    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(40);
    for (std::uint32_t word : h) {
        for (int i = 7; i >= 0; --i) out.push_back(hex[(word >> (4 * i)) & 0xF]);
    }
    return out;
}

std::string git_blob_hash(std::string_view data) {
    std::string buf = "blob " + std::to_string(data.size());
    buf.push_back('\0');
    buf.append(data);
    return sha1_hex(buf);
}

}  // namespace nqk
