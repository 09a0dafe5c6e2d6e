#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

namespace tvws {

// Incremental FNV-1a 64-bit hash.
class Digest {
public:
    Digest& bytes(const void* data, std::size_t n);
    Digest& str(std::string_view s) { return bytes(s.data(), s.size()); }
    Digest& u64(std::uint64_t v);
    Digest& f64(double v); // hashes the bit pattern

    std::uint64_t value() const { return state_; }
    std::string hex() const;

private:
    std::uint64_t state_ = 14695981039346656037ull;
};

std::uint64_t fnv1a64(std::string_view s);

} // namespace tvws
