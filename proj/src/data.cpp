#include "excitation/data.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "excitation/errors.hpp"

namespace exc {

namespace cifar10 {

Dataset decode_records(std::span<const std::uint8_t> bytes, std::string name) {
    if (bytes.size() % kRecordBytes != 0)
        throw FormatError(name + ": " + std::to_string(bytes.size()) +
                          " bytes is not a whole number of records");
    const std::size_t n = bytes.size() / kRecordBytes;
    Dataset out{Matrix(n, kPixels), std::vector<std::int32_t>(n), 10, std::move(name)};
    for (std::size_t r = 0; r < n; ++r) {
        const std::uint8_t* rec = bytes.data() + r * kRecordBytes;
        if (rec[0] >= 10) throw FormatError(out.name + ": label byte " + std::to_string(rec[0]) + " >= 10");
        out.labels[r] = rec[0];
        auto row = out.features.row(r);
        for (std::size_t p = 0; p < kPixels; ++p) row[p] = static_cast<double>(rec[1 + p]) / 255.0;
    }
    return out;
}

ChannelStats channel_stats(const Dataset& data) {
    constexpr std::size_t plane = kImageSide * kImageSide;
    ChannelStats stats;
    const double count = static_cast<double>(data.size() * plane);
    for (std::size_t ch = 0; ch < kChannels; ++ch) {
        double sum = 0.0;
        for (std::size_t r = 0; r < data.size(); ++r) {
            auto row = data.features.row(r).subspan(ch * plane, plane);
            for (double v : row) sum += v;
        }
        const double mu = sum / count;
        double sq = 0.0;
        for (std::size_t r = 0; r < data.size(); ++r) {
            auto row = data.features.row(r).subspan(ch * plane, plane);
            for (double v : row) sq += (v - mu) * (v - mu);
        }
        stats.mean[ch] = mu;
        stats.stddev[ch] = std::sqrt(sq / count);
    }
    return stats;
}

void standardize(Dataset& data, const ChannelStats& stats) {
    constexpr std::size_t plane = kImageSide * kImageSide;
    for (std::size_t r = 0; r < data.size(); ++r) {
        auto row = data.features.row(r);
        for (std::size_t ch = 0; ch < kChannels; ++ch) {
            const double sd = stats.stddev[ch] > 0.0 ? stats.stddev[ch] : 1.0;
            for (double& v : row.subspan(ch * plane, plane)) v = (v - stats.mean[ch]) / sd;
        }
    }
}

}  // namespace cifar10

namespace {

void check_batch_file(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) throw IoError("missing CIFAR-10 file " + path.string());
    const auto size = std::filesystem::file_size(path, ec);
    if (ec) throw IoError("cannot stat " + path.string() + ": " + ec.message());
    if (size != cifar10::kFileBytes)
        throw FormatError(path.string() + ": expected " + std::to_string(cifar10::kFileBytes) +
                          " bytes, found " + std::to_string(size));
}

std::vector<std::uint8_t> read_batch_file(const std::filesystem::path& path) {
    check_batch_file(path);
    const auto size = cifar10::kFileBytes;
    std::vector<std::uint8_t> bytes(size);
    std::ifstream in(path, std::ios::binary);
    if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size)))
        throw IoError("failed reading " + path.string());
    return bytes;
}

const char* const kTrainFiles[] = {"data_batch_1.bin", "data_batch_2.bin", "data_batch_3.bin",
                                   "data_batch_4.bin", "data_batch_5.bin"};
constexpr const char* kTestFile = "test_batch.bin";

}  // namespace

bool has_cifar10(const std::filesystem::path& dir) {
    std::error_code ec;
    for (const char* f : kTrainFiles)
        if (!std::filesystem::is_regular_file(dir / f, ec)) return false;
    return std::filesystem::is_regular_file(dir / kTestFile, ec);
}

DataSplits load_cifar10(const std::filesystem::path& dir) {
    // Validate every file before decoding anything.
    for (const char* f : kTrainFiles) check_batch_file(dir / f);
    check_batch_file(dir / kTestFile);
    std::vector<std::uint8_t> all;
    all.reserve(cifar10::kFileBytes * 5);
    for (const char* f : kTrainFiles) {
        auto bytes = read_batch_file(dir / f);
        all.insert(all.end(), bytes.begin(), bytes.end());
    }
    DataSplits splits;
    splits.train = cifar10::decode_records(all, "cifar10-train");
    std::vector<std::uint8_t>().swap(all);
    splits.test = cifar10::decode_records(read_batch_file(dir / kTestFile), "cifar10-test");
    const auto stats = cifar10::channel_stats(splits.train);
    cifar10::standardize(splits.train, stats);
    cifar10::standardize(splits.test, stats);
    return splits;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept {
    std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

namespace {

Matrix draw_centres(std::uint64_t seed, std::size_t classes, std::size_t dim) {
    std::mt19937_64 rng(mix_seed(seed, 0));
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix centres(classes, dim);
    for (std::size_t c = 0; c < classes; ++c) {
        auto row = centres.row(c);
        double norm = 0.0;
        do {
            norm = 0.0;
            for (double& v : row) {
                v = normal(rng);
                norm += v * v;
            }
        } while (norm == 0.0);
        norm = std::sqrt(norm);
        for (double& v : row) v = 4.0 * v / norm;
    }
    return centres;
}

Dataset draw_samples(const Matrix& centres, std::uint64_t stream, std::size_t n, double spread,
                     std::string name) {
    std::mt19937_64 rng(stream);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t classes = centres.rows();
    Dataset out{Matrix(n, centres.cols()), std::vector<std::int32_t>(n), classes, std::move(name)};
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i % classes;
        out.labels[i] = static_cast<std::int32_t>(c);
        auto row = out.features.row(i);
        auto centre = centres.row(c);
        for (std::size_t j = 0; j < row.size(); ++j) row[j] = centre[j] + spread * normal(rng);
    }
    return out;
}

}  // namespace

Dataset synth_clusters(std::uint64_t seed, std::size_t n, std::size_t dim, std::size_t classes,
                       double spread) {
    if (classes == 0 || dim == 0) throw InputError("synth_clusters: classes and dim must be positive");
    return draw_samples(draw_centres(seed, classes, dim), mix_seed(seed, 1), n, spread, "synth");
}

DataSplits synth_splits(std::uint64_t seed, std::size_t n_train, std::size_t n_test, std::size_t dim,
                        std::size_t classes, double spread) {
    if (classes == 0 || dim == 0) throw InputError("synth_splits: classes and dim must be positive");
    const Matrix centres = draw_centres(seed, classes, dim);
    return {draw_samples(centres, mix_seed(seed, 1), n_train, spread, "synth-train"),
            draw_samples(centres, mix_seed(seed, 2), n_test, spread, "synth-test")};
}

std::vector<std::vector<std::size_t>> batches(const BatchPlan& plan, std::size_t n, std::uint64_t epoch) {
    if (plan.batch_size == 0) throw InputError("batches: batch size must be positive");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(mix_seed(plan.seed, epoch + 0x5EED));
    for (std::size_t i = n; i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(order[i - 1], order[pick(rng)]);
    }
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t start = 0; start < n; start += plan.batch_size) {
        const std::size_t end = std::min(n, start + plan.batch_size);
        out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
    Matrix out(rows.size(), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto src = m.row(rows[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

std::vector<std::int32_t> gather(std::span<const std::int32_t> values, std::span<const std::size_t> rows) {
    std::vector<std::int32_t> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out[i] = values[rows[i]];
    return out;
}

}  // namespace exc
