#pragma once

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "somlist/mask.hpp"

namespace testsupport {

inline std::filesystem::path fixtures() { return SOM_FIXTURES_DIR; }

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out << bytes;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("somlist-" + tag + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

// Random blob: union of a few filled rectangles and discs, or plain noise.
inline som::BinaryMask random_mask(std::mt19937_64& rng, int max_side = 64) {
    std::uniform_int_distribution<int> side(1, max_side);
    const int w = side(rng);
    const int h = side(rng);
    som::BinaryMask m(w, h);
    std::uniform_int_distribution<int> kind(0, 3);
    if (kind(rng) == 0) {
        std::bernoulli_distribution bit(0.5);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) m.set(x, y, bit(rng));
        return m;
    }
    std::uniform_int_distribution<int> shapes(1, 4);
    const int n = shapes(rng);
    for (int s = 0; s < n; ++s) {
        std::uniform_int_distribution<int> px(0, w - 1), py(0, h - 1);
        const int x0 = px(rng), y0 = py(rng), x1 = px(rng), y1 = py(rng);
        if (kind(rng) % 2 == 0) {
            for (int y = std::min(y0, y1); y <= std::max(y0, y1); ++y)
                for (int x = std::min(x0, x1); x <= std::max(x0, x1); ++x) m.set(x, y);
        } else {
            const int r = std::max(std::abs(x1 - x0), std::abs(y1 - y0)) / 2;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    if ((x - x0) * (x - x0) + (y - y0) * (y - y0) <= r * r) m.set(x, y);
        }
    }
    return m;
}

struct CommandOutput {
    int exit_code = -1;
    std::string out;
};

// Runs a shell command, capturing stdout. stderr is discarded.
inline CommandOutput run(const std::string& cmd) {
    CommandOutput r;
    FILE* pipe = popen((cmd + " 2>/dev/null").c_str(), "r");
    if (pipe == nullptr) {
        return r;
    }
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) {
        r.out.append(buf, n);
    }
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

}  // namespace testsupport
