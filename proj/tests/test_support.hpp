#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "frlbench/rng.hpp"
#include "frlbench/tabular.hpp"

namespace testing_support {

// Fresh directory under the system temp path, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("frlbench_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Small dataset with Gaussian features, two groups, and tasks "a" and "b".
inline frlbench::Dataset random_dataset(std::size_t n, std::size_t d, std::uint64_t seed) {
    frlbench::Rng rng(seed);
    frlbench::Dataset ds;
    ds.features = frlbench::Matrix(n, d);
    for (std::size_t j = 0; j < d; ++j) ds.feature_names.push_back("f" + std::to_string(j));
    ds.sensitive.resize(n);
    frlbench::Labels a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
        ds.sensitive[i] = static_cast<int>(i % 2);
        for (std::size_t j = 0; j < d; ++j) ds.features(i, j) = rng.normal() + (j == 0 ? ds.sensitive[i] : 0.0);
        a[i] = ds.features(i, 0) + 0.3 * rng.normal() > 0.5 ? 1 : 0;
        b[i] = rng.bernoulli(0.5) ? 1 : 0;
    }
    ds.tasks.emplace("a", std::move(a));
    ds.tasks.emplace("b", std::move(b));
    return ds;
}

}  // namespace testing_support
