#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sclc/image_io.hpp"
#include "sclc/rng.hpp"
#include "sclc/tensor.hpp"

namespace sclc {

enum class ShapeKind : std::size_t {
    Disc = 0,
    Square,
    Triangle,
    Ring,
    Cross,
    HStripes,
    VStripes,
    Checker
};

inline const char* shape_name(ShapeKind s) {
    switch (s) {
        case ShapeKind::Disc: return "disc";
        case ShapeKind::Square: return "square";
        case ShapeKind::Triangle: return "triangle";
        case ShapeKind::Ring: return "ring";
        case ShapeKind::Cross: return "cross";
        case ShapeKind::HStripes: return "h-stripes";
        case ShapeKind::VStripes: return "v-stripes";
        case ShapeKind::Checker: return "checker";
    }
    return "?";
}

inline ShapeKind parse_shape_kind(const std::string& name) {
    for (std::size_t i = 0; i < 8; ++i)
        if (name == shape_name(static_cast<ShapeKind>(i))) return static_cast<ShapeKind>(i);
    throw std::invalid_argument("unknown shape '" + name + "'");
}

/// Inclusive pixel bounds of a painted object.
struct BBox {
    std::size_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    bool contains(std::size_t x, std::size_t y) const {
        return x >= x0 && x <= x1 && y >= y0 && y <= y1;
    }
    std::size_t area() const { return (x1 - x0 + 1) * (y1 - y0 + 1); }
};

struct LabeledDataset {
    std::vector<Tensor> images;  // each [3,H,W], values in [0,1]
    std::vector<std::size_t> labels;
    std::vector<std::string> class_names;
    std::vector<BBox> boxes;  // empty, or one per image (synthetic data)

    std::size_t size() const { return images.size(); }
    std::size_t classes() const { return class_names.size(); }

    std::vector<std::size_t> class_counts() const {
        std::vector<std::size_t> counts(class_names.size(), 0);
        for (std::size_t y : labels) counts.at(y)++;
        return counts;
    }

    void validate() const {
        if (images.size() != labels.size())
            throw std::invalid_argument("dataset: image/label count mismatch");
        if (!boxes.empty() && boxes.size() != images.size())
            throw std::invalid_argument("dataset: bounding-box count mismatch");
        for (std::size_t y : labels)
            if (y >= class_names.size())
                throw std::invalid_argument("dataset: label " + std::to_string(y) +
                                            " out of range");
        for (const Tensor& img : images)
            if (img.shape() != images.front().shape())
                throw std::invalid_argument("dataset: images are not uniformly shaped");
    }
};

struct SynthSpec {
    std::vector<ShapeKind> shapes;     // one class per entry, all distinct
    std::vector<std::size_t> counts;   // parallel to shapes, all >= 1
    std::size_t height = 32, width = 32;
    double scale_min = 0.25, scale_max = 0.45;  // object size as a fraction of min(H,W)
    double bg_min = 0.10, bg_max = 0.30;        // background gray level
    double color_min = 0.60, color_max = 0.95;  // per-channel object color
    double noise_sigma = 0.05;

    static SynthSpec first_classes(std::size_t k, std::vector<std::size_t> per_class_counts) {
        SynthSpec s;
        for (std::size_t i = 0; i < k; ++i) s.shapes.push_back(static_cast<ShapeKind>(i));
        s.counts = std::move(per_class_counts);
        return s;
    }

    void validate() const {
        if (shapes.empty() || shapes.size() > 8)
            throw std::invalid_argument("SynthSpec: needs 1..8 shape classes");
        if (counts.size() != shapes.size())
            throw std::invalid_argument("SynthSpec: counts must parallel shapes");
        for (std::size_t c : counts)
            if (c == 0) throw std::invalid_argument("SynthSpec: per-class counts must be >= 1");
        for (std::size_t i = 0; i < shapes.size(); ++i)
            for (std::size_t j = i + 1; j < shapes.size(); ++j)
                if (shapes[i] == shapes[j])
                    throw std::invalid_argument("SynthSpec: duplicate shape class");
        if (height < 8 || width < 8)
            throw std::invalid_argument("SynthSpec: resolution must be at least 8x8");
        if (!(scale_min > 0.0 && scale_min <= scale_max))
            throw std::invalid_argument("SynthSpec: bad scale range");
        const double m = static_cast<double>(std::min(height, width));
        if (scale_max * m > m - 4.0)
            throw std::invalid_argument("SynthSpec: maximum object scale leaves no border");
        if (noise_sigma < 0.0) throw std::invalid_argument("SynthSpec: negative noise sigma");
    }
};

namespace detail {

inline bool shape_inside(ShapeKind s, double u, double v) {
    const double au = std::abs(u), av = std::abs(v);
    switch (s) {
        case ShapeKind::Disc: return u * u + v * v <= 1.0;
        case ShapeKind::Square: return au <= 1.0 && av <= 1.0;
        case ShapeKind::Triangle: return av <= 1.0 && au <= (v + 1.0) * 0.5;
        case ShapeKind::Ring: {
            const double r2 = u * u + v * v;
            return r2 <= 1.0 && r2 >= 0.55 * 0.55;
        }
        case ShapeKind::Cross: return (au <= 0.33 && av <= 1.0) || (av <= 0.33 && au <= 1.0);
        case ShapeKind::HStripes:
            return au <= 1.0 && av <= 1.0 &&
                   static_cast<long>(std::floor((v + 1.0) * 2.0)) % 2 == 0;
        case ShapeKind::VStripes:
            return au <= 1.0 && av <= 1.0 &&
                   static_cast<long>(std::floor((u + 1.0) * 2.0)) % 2 == 0;
        case ShapeKind::Checker:
            return au <= 1.0 && av <= 1.0 &&
                   (static_cast<long>(std::floor((u + 1.0) * 2.0)) +
                    static_cast<long>(std::floor((v + 1.0) * 2.0))) %
                           2 ==
                       0;
    }
    return false;
}

}  // namespace detail

/// Deterministic synthetic dataset: one colored shape per image on a noisy
/// gray background, grouped by class in spec order. Each image consumes its
/// own rng substream, so the result is a pure function of (spec, seed).
inline LabeledDataset generate(const SynthSpec& spec, std::uint64_t seed) {
    spec.validate();
    LabeledDataset ds;
    for (ShapeKind s : spec.shapes) ds.class_names.emplace_back(shape_name(s));
    const std::size_t h = spec.height, w = spec.width;
    const double m = static_cast<double>(std::min(h, w));

    for (std::size_t c = 0; c < spec.shapes.size(); ++c) {
        for (std::size_t idx = 0; idx < spec.counts[c]; ++idx) {
            Rng rng(derive_seed(seed, c, idx));
            const double bg = rng.uniform(spec.bg_min, spec.bg_max);
            const double col[3] = {rng.uniform(spec.color_min, spec.color_max),
                                   rng.uniform(spec.color_min, spec.color_max),
                                   rng.uniform(spec.color_min, spec.color_max)};
            const double frac = rng.uniform(spec.scale_min, spec.scale_max);
            const double rad = frac * m * 0.5;
            const double cx = rng.uniform(rad + 1.0, static_cast<double>(w) - 2.0 - rad);
            const double cy = rng.uniform(rad + 1.0, static_cast<double>(h) - 2.0 - rad);

            Tensor img({3, h, w});
            BBox box;
            bool painted = false;
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x) {
                    const double u = (static_cast<double>(x) - cx) / rad;
                    const double v = (static_cast<double>(y) - cy) / rad;
                    const bool inside = detail::shape_inside(spec.shapes[c], u, v);
                    if (inside) {
                        if (!painted) {
                            box = BBox{x, y, x, y};
                            painted = true;
                        } else {
                            box.x0 = std::min(box.x0, x);
                            box.x1 = std::max(box.x1, x);
                            box.y0 = std::min(box.y0, y);
                            box.y1 = std::max(box.y1, y);
                        }
                    }
                    for (std::size_t ch = 0; ch < 3; ++ch) {
                        const double base = inside ? col[ch] : bg;
                        img.at(ch, y, x) = std::clamp(
                            base + spec.noise_sigma * rng.normal(), 0.0, 1.0);
                    }
                }
            if (!painted) {
                const std::size_t px = static_cast<std::size_t>(cx);
                const std::size_t py = static_cast<std::size_t>(cy);
                box = BBox{px, py, px, py};
            }
            ds.images.push_back(std::move(img));
            ds.labels.push_back(c);
            ds.boxes.push_back(box);
        }
    }
    return ds;
}

/// Folder-per-class loader. Class indices follow lexicographic folder names;
/// files within a class are read in lexicographic order.
inline LabeledDataset load_directory(const std::string& root,
                                     std::vector<std::string>* warnings = nullptr) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root))
        throw std::runtime_error("dataset root '" + root + "' is not a directory");

    std::vector<std::string> class_dirs;
    for (const fs::directory_entry& e : fs::directory_iterator(root))
        if (e.is_directory()) class_dirs.push_back(e.path().filename().string());
    std::sort(class_dirs.begin(), class_dirs.end());
    if (class_dirs.empty())
        throw std::runtime_error("dataset root '" + root + "' has no class folders");

    LabeledDataset ds;
    ds.class_names = class_dirs;
    for (std::size_t c = 0; c < class_dirs.size(); ++c) {
        std::vector<std::string> files;
        for (const fs::directory_entry& e : fs::directory_iterator(fs::path(root) / class_dirs[c]))
            if (e.is_regular_file()) files.push_back(e.path().string());
        std::sort(files.begin(), files.end());
        if (files.empty() && warnings)
            warnings->push_back("class folder '" + class_dirs[c] + "' is empty");
        for (const std::string& f : files) {
            ds.images.push_back(read_ppm(f));
            ds.labels.push_back(c);
        }
    }
    if (ds.images.empty())
        throw std::runtime_error("dataset root '" + root + "' holds no images");
    ds.validate();
    return ds;
}

/// Stratified split: per class, round(fraction * n_c) samples go to train,
/// chosen by a seeded within-class shuffle. Singleton classes go to train.
inline std::pair<LabeledDataset, LabeledDataset> split_stratified(
    const LabeledDataset& ds, double train_fraction, std::uint64_t seed,
    std::vector<std::string>* warnings = nullptr) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::invalid_argument("split_stratified: train fraction must lie in (0,1)");
    ds.validate();

    LabeledDataset train, test;
    train.class_names = ds.class_names;
    test.class_names = ds.class_names;
    Rng rng(derive_seed(seed, 2));

    for (std::size_t c = 0; c < ds.classes(); ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < ds.size(); ++i)
            if (ds.labels[i] == c) members.push_back(i);
        if (members.empty()) continue;
        shuffle(members, rng);

        std::size_t n_train;
        if (members.size() == 1) {
            n_train = 1;
            if (warnings)
                warnings->push_back("class '" + ds.class_names[c] +
                                    "' has a single sample; assigned to train");
        } else {
            n_train = static_cast<std::size_t>(
                std::lround(train_fraction * static_cast<double>(members.size())));
            n_train = std::min(n_train, members.size());
        }
        for (std::size_t k = 0; k < members.size(); ++k) {
            LabeledDataset& dst = (k < n_train) ? train : test;
            dst.images.push_back(ds.images[members[k]]);
            dst.labels.push_back(c);
            if (!ds.boxes.empty()) dst.boxes.push_back(ds.boxes[members[k]]);
        }
    }
    return {std::move(train), std::move(test)};
}

struct Batch {
    Tensor images;  // [B,3,H,W]
    std::vector<std::size_t> labels;
    std::vector<std::size_t> indices;  // positions in the source dataset
};

/// One seeded-shuffle pass over a dataset in fixed-size batches.
class BatchIterator {
public:
    BatchIterator(const LabeledDataset& ds, std::size_t batch_size, std::uint64_t seed,
                  bool drop_last = false)
        : ds_(&ds), batch_size_(batch_size), drop_last_(drop_last) {
        if (batch_size_ == 0) throw std::invalid_argument("batches: batch size must be >= 1");
        ds.validate();
        order_.resize(ds.size());
        for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
        Rng rng(seed);
        shuffle(order_, rng);
    }

    /// Fetch the next batch; returns false at the end of the epoch.
    bool next(Batch& out) {
        if (pos_ >= order_.size()) return false;
        std::size_t n = std::min(batch_size_, order_.size() - pos_);
        if (n < batch_size_ && drop_last_) return false;
        const Tensor& first = ds_->images.front();
        out.images = Tensor({n, first.dim(0), first.dim(1), first.dim(2)});
        out.labels.resize(n);
        out.indices.resize(n);
        const std::size_t stride = first.size();
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t src = order_[pos_ + k];
            const Tensor& img = ds_->images[src];
            std::copy(img.data(), img.data() + stride, out.images.data() + k * stride);
            out.labels[k] = ds_->labels[src];
            out.indices[k] = src;
        }
        pos_ += n;
        return true;
    }

private:
    const LabeledDataset* ds_;
    std::size_t batch_size_;
    bool drop_last_;
    std::vector<std::size_t> order_;
    std::size_t pos_ = 0;
};

/// Write train/test splits as PPM trees (split/class/NNNNN.ppm) plus a
/// manifest.csv listing every file with its class and split.
inline void export_dataset(const LabeledDataset& train, const LabeledDataset& test,
                           const std::string& dir) {
    namespace fs = std::filesystem;
    train.validate();
    test.validate();
    if (train.class_names != test.class_names)
        throw std::invalid_argument("export_dataset: splits disagree on class names");

    fs::create_directories(dir);
    std::ofstream manifest(fs::path(dir) / "manifest.csv", std::ios::trunc);
    if (!manifest)
        throw std::runtime_error("export_dataset: cannot write manifest in '" + dir + "'");
    manifest << "path,class-name,class-index,split\n";

    auto emit = [&](const LabeledDataset& ds, const char* split) {
        std::vector<std::size_t> counter(ds.classes(), 0);
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const std::size_t c = ds.labels[i];
            char name[16];
            std::snprintf(name, sizeof(name), "%05zu.ppm", counter[c]++);
            const std::string rel =
                std::string(split) + "/" + ds.class_names[c] + "/" + name;
            fs::create_directories(fs::path(dir) / split / ds.class_names[c]);
            write_ppm(ds.images[i], (fs::path(dir) / rel).string());
            manifest << rel << "," << ds.class_names[c] << "," << c << "," << split << "\n";
        }
    };
    emit(train, "train");
    emit(test, "test");
    if (!manifest) throw std::runtime_error("export_dataset: manifest write failed");
}

}  // namespace sclc
