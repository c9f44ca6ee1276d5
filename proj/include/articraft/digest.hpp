#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace articraft {

// FNV-1a 64-bit. Used for content digests (traces, manifests, determinism
// checks); stable across platforms and needs no dependencies.
struct Fnv1a {
    std::uint64_t state = 0xcbf29ce484222325ull;

    void update(std::string_view bytes) {
        for (unsigned char c : bytes) {
            state ^= c;
            state *= 0x100000001b3ull;
        }
    }
    std::uint64_t value() const { return state; }
};

inline std::uint64_t fnv1a64(std::string_view bytes) {
    Fnv1a h;
    h.update(bytes);
    return h.value();
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[i] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

inline std::string content_digest(std::string_view bytes) { return hex64(fnv1a64(bytes)); }

}  // namespace articraft
