#pragma once

#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "oracles.hpp"
#include "volseg/grid.hpp"

namespace testutil {

// Unique scratch directory, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        const int id = counter++;
        path_ = std::filesystem::temp_directory_path()
                / ("volseg_test_" + std::to_string(::getpid()) + "_" + std::to_string(id));
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

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
}

inline volseg::Volume volume_of(const volseg::Index3& dims, const volseg::Spacing3& spacing,
                                float fill = 0.0f) {
    volseg::Volume v = volseg::Volume::zeros(oracle::make_grid(dims, spacing));
    for (auto& x : v.voxels) x = fill;
    return v;
}

// Axis-aligned box of foreground voxels, corners inclusive.
inline void fill_box(volseg::Mask& m, const volseg::Index3& lo, const volseg::Index3& hi) {
    for (int k = lo[2]; k <= hi[2]; ++k)
        for (int j = lo[1]; j <= hi[1]; ++j)
            for (int i = lo[0]; i <= hi[0]; ++i) m.set(i, j, k, true);
}

inline bool masks_equal(const volseg::Mask& a, const volseg::Mask& b) {
    return a.geom.dims == b.geom.dims && a.voxels == b.voxels;
}

inline bool subset_of(const volseg::Mask& inner, const volseg::Mask& outer) {
    for (std::size_t i = 0; i < inner.voxels.size(); ++i) {
        if (inner.voxels[i] && !outer.voxels[i]) return false;
    }
    return true;
}

inline std::size_t overlap_count(const volseg::Mask& a, const volseg::Mask& b) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.voxels.size(); ++i) n += (a.voxels[i] && b.voxels[i]);
    return n;
}

} // namespace testutil
