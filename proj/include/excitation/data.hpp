#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "excitation/linalg.hpp"

namespace exc {

struct Dataset {
    Matrix features;                   // n x d
    std::vector<std::int32_t> labels;  // n
    std::size_t classes = 0;
    std::string name;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t dim() const noexcept { return features.cols(); }
};

struct DataSplits {
    Dataset train;
    Dataset test;
};

namespace cifar10 {

inline constexpr std::size_t kImageSide = 32;
inline constexpr std::size_t kChannels = 3;
inline constexpr std::size_t kPixels = kImageSide * kImageSide * kChannels;  // 3072
inline constexpr std::size_t kRecordBytes = 1 + kPixels;                     // 3073
inline constexpr std::size_t kRecordsPerFile = 10000;
inline constexpr std::size_t kFileBytes = kRecordBytes * kRecordsPerFile;    // 30730000

/// Decodes raw records (label byte + channel-planar pixels) into a dataset
/// with pixels scaled to [0, 1]. Throws FormatError if the buffer is not a
/// whole number of records or a label is >= 10.
Dataset decode_records(std::span<const std::uint8_t> bytes, std::string name);

/// Per-channel mean and standard deviation of a dataset in CIFAR layout.
struct ChannelStats {
    std::array<double, kChannels> mean{};
    std::array<double, kChannels> stddev{};
};

ChannelStats channel_stats(const Dataset& data);
void standardize(Dataset& data, const ChannelStats& stats);

}  // namespace cifar10

/// Loads data_batch_{1..5}.bin and test_batch.bin from `dir`, standardising
/// both splits with channel statistics of the train split.
/// Throws IoError for a missing file, FormatError for a wrong file size.
DataSplits load_cifar10(const std::filesystem::path& dir);

/// True when `dir` holds all six CIFAR-10 binary batch files.
bool has_cifar10(const std::filesystem::path& dir);

/// Gaussian clusters around C centres drawn on a radius-4 sphere.
/// Labels cycle 0..C-1 so classes are balanced.
Dataset synth_clusters(std::uint64_t seed, std::size_t n, std::size_t dim, std::size_t classes,
                       double spread);

/// Train/test pair from one draw of centres.
DataSplits synth_splits(std::uint64_t seed, std::size_t n_train, std::size_t n_test, std::size_t dim,
                        std::size_t classes, double spread);

struct BatchPlan {
    std::uint64_t seed = 0;
    std::size_t batch_size = 512;
};

/// Shuffled index batches for one epoch; the last batch may be short.
/// Depends only on (seed, epoch, n).
std::vector<std::vector<std::size_t>> batches(const BatchPlan& plan, std::size_t n, std::uint64_t epoch);

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows);
std::vector<std::int32_t> gather(std::span<const std::int32_t> values, std::span<const std::size_t> rows);

/// splitmix64 mixing, used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept;

}  // namespace exc
