#pragma once

#include <string>
#include <string_view>

namespace som {

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);

std::string base64_encode(std::string_view bytes);

/// Incremental SHA-256.
class Sha256 {
public:
    Sha256();
    ~Sha256();
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    void update(std::string_view bytes);
    std::string hex_digest();

private:
    struct State;
    State* state_;
};

}  // namespace som
