#include "uap/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "uap/rng.hpp"

namespace uap {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_be_u32(std::ifstream& in, const std::string& path, std::size_t& offset) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw FormatError(path + ": truncated header", offset);
    offset += 4;
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
           std::uint32_t(b[3]);
}

void write_be_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

InputShape Dataset::input_shape() const {
    return InputShape{images.dim(1), images.dim(2), images.dim(3)};
}

Tensor Dataset::image_rows(std::span<const int> indices) const {
    const std::int64_t per = images.numel() / size();
    Tensor out = Tensor::zeros({static_cast<int>(indices.size()), images.dim(1), images.dim(2),
                                images.dim(3)});
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const float* src = images.ptr() + indices[i] * per;
        std::copy(src, src + per, out.ptr() + static_cast<std::int64_t>(i) * per);
    }
    return out;
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw DataError("cannot open " + images_path);
    std::size_t off = 0;
    const std::uint32_t magic = read_be_u32(img, images_path, off);
    if (magic != kImagesMagic) {
        throw FormatError(images_path + ": bad image magic", off - 4);
    }
    const std::uint32_t n = read_be_u32(img, images_path, off);
    const std::uint32_t h = read_be_u32(img, images_path, off);
    const std::uint32_t w = read_be_u32(img, images_path, off);
    const std::size_t pixels = std::size_t(n) * h * w;
    std::vector<unsigned char> raw(pixels);
    img.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(pixels));
    if (static_cast<std::size_t>(img.gcount()) != pixels) {
        throw FormatError(images_path + ": truncated pixel payload",
                          off + static_cast<std::size_t>(img.gcount()));
    }

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw DataError("cannot open " + labels_path);
    std::size_t loff = 0;
    const std::uint32_t lmagic = read_be_u32(lab, labels_path, loff);
    if (lmagic != kLabelsMagic) {
        throw FormatError(labels_path + ": bad label magic", loff - 4);
    }
    const std::uint32_t ln = read_be_u32(lab, labels_path, loff);
    if (ln != n) {
        throw FormatError(labels_path + ": label count " + std::to_string(ln) +
                              " does not match image count " + std::to_string(n),
                          loff - 4);
    }
    std::vector<unsigned char> lraw(ln);
    lab.read(reinterpret_cast<char*>(lraw.data()), static_cast<std::streamsize>(ln));
    if (static_cast<std::size_t>(lab.gcount()) != ln) {
        throw FormatError(labels_path + ": truncated label payload",
                          loff + static_cast<std::size_t>(lab.gcount()));
    }

    Dataset ds;
    ds.images = Tensor::zeros({static_cast<int>(n), 1, static_cast<int>(h), static_cast<int>(w)});
    for (std::size_t i = 0; i < pixels; ++i) {
        ds.images.data[i] = static_cast<float>(raw[i]) / 255.0f;
    }
    ds.labels.assign(lraw.begin(), lraw.end());
    int max_label = 0;
    for (int y : ds.labels) max_label = std::max(max_label, y);
    ds.num_classes = max_label + 1;
    return ds;
}

void save_idx(const Dataset& ds, const std::string& images_path, const std::string& labels_path) {
    if (ds.images.dim(1) != 1) throw DataError("save_idx: only single-channel datasets");
    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw DataError("cannot write " + images_path);
    write_be_u32(img, kImagesMagic);
    write_be_u32(img, static_cast<std::uint32_t>(ds.size()));
    write_be_u32(img, static_cast<std::uint32_t>(ds.images.dim(2)));
    write_be_u32(img, static_cast<std::uint32_t>(ds.images.dim(3)));
    std::vector<unsigned char> raw(ds.images.data.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const float v = std::clamp(ds.images.data[i], 0.0f, 1.0f);
        raw[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
    }
    img.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));

    std::ofstream lab(labels_path, std::ios::binary);
    if (!lab) throw DataError("cannot write " + labels_path);
    write_be_u32(lab, kLabelsMagic);
    write_be_u32(lab, static_cast<std::uint32_t>(ds.size()));
    std::vector<unsigned char> lraw(ds.labels.size());
    for (std::size_t i = 0; i < lraw.size(); ++i) lraw[i] = static_cast<unsigned char>(ds.labels[i]);
    lab.write(reinterpret_cast<const char*>(lraw.data()),
              static_cast<std::streamsize>(lraw.size()));
}

Dataset synth_blobs(int num_classes, int per_class, InputShape shape, std::uint64_t seed) {
    if (num_classes <= 0 || per_class <= 0) {
        throw DataError("synth_blobs: num_classes and per_class must be positive");
    }
    const int h = shape.height, w = shape.width, c = shape.channels;
    if (h < 8 || w < 8) throw DataError("synth_blobs: image too small");

    struct Bump {
        float cy, cx, sigma, amp;
    };
    // Per-class constellation of 3 bumps, positions from a class-seeded stream.
    std::vector<std::vector<Bump>> constellations(static_cast<std::size_t>(num_classes));
    for (int cls = 0; cls < num_classes; ++cls) {
        Rng rng(Rng::mix(seed, 0x10000 + static_cast<std::uint64_t>(cls)));
        auto& bumps = constellations[static_cast<std::size_t>(cls)];
        for (int b = 0; b < 3; ++b) {
            Bump bump;
            bump.cy = rng.uniform(3.0f, static_cast<float>(h - 4));
            bump.cx = rng.uniform(3.0f, static_cast<float>(w - 4));
            bump.sigma = rng.uniform(1.3f, 2.4f);
            bump.amp = rng.uniform(0.55f, 0.95f);
            bumps.push_back(bump);
        }
    }

    const int n = num_classes * per_class;
    Dataset ds;
    ds.images = Tensor::zeros({n, c, h, w});
    ds.labels.resize(static_cast<std::size_t>(n));
    ds.num_classes = num_classes;
    const std::int64_t per = static_cast<std::int64_t>(c) * h * w;
    for (int i = 0; i < n; ++i) {
        const int cls = i / per_class;
        ds.labels[static_cast<std::size_t>(i)] = cls;
        Rng rng(Rng::mix(seed, 0x200000 + static_cast<std::uint64_t>(i)));
        float* px = ds.images.ptr() + i * per;
        for (const Bump& base : constellations[static_cast<std::size_t>(cls)]) {
            const float cy = base.cy + rng.uniform(-1.6f, 1.6f);
            const float cx = base.cx + rng.uniform(-1.6f, 1.6f);
            const float sg = base.sigma * rng.uniform(0.85f, 1.2f);
            const float amp = base.amp * rng.uniform(0.75f, 1.0f);
            const float inv2s2 = 1.0f / (2.0f * sg * sg);
            for (int ch = 0; ch < c; ++ch) {
                float* plane = px + static_cast<std::int64_t>(ch) * h * w;
                for (int y = 0; y < h; ++y) {
                    const float dy2 = (static_cast<float>(y) - cy) * (static_cast<float>(y) - cy);
                    for (int x = 0; x < w; ++x) {
                        const float dx2 =
                            (static_cast<float>(x) - cx) * (static_cast<float>(x) - cx);
                        plane[static_cast<std::int64_t>(y) * w + x] +=
                            amp * std::exp(-(dy2 + dx2) * inv2s2);
                    }
                }
            }
        }
        for (std::int64_t k = 0; k < per; ++k) {
            px[k] = std::clamp(px[k] + rng.uniform(0.0f, 0.10f), 0.0f, 1.0f);
        }
    }
    return ds;
}

std::pair<std::vector<int>, std::vector<int>> make_splits(const Dataset& ds, int n_attack,
                                                          int n_eval, std::uint64_t seed) {
    const int n = ds.size();
    if (n_attack + n_eval > n) {
        throw DataError("make_splits: requested " + std::to_string(n_attack + n_eval) +
                        " samples from dataset of " + std::to_string(n));
    }
    const int classes = ds.num_classes;
    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(classes));
    for (int i = 0; i < n; ++i) by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
    for (int c = 0; c < classes; ++c) {
        Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(c)));
        rng.shuffle(by_class[static_cast<std::size_t>(c)]);
    }
    // Per-class quotas differ by at most one: remainders go to the lowest class ids.
    auto quota = [classes](int total, int c) {
        return total / classes + (c < total % classes ? 1 : 0);
    };
    std::vector<int> attack, eval;
    for (int c = 0; c < classes; ++c) {
        const auto& pool = by_class[static_cast<std::size_t>(c)];
        const int qa = quota(n_attack, c), qe = quota(n_eval, c);
        if (static_cast<int>(pool.size()) < qa + qe) {
            throw DataError("make_splits: class " + std::to_string(c) + " has only " +
                            std::to_string(pool.size()) + " samples, needs " +
                            std::to_string(qa + qe));
        }
        attack.insert(attack.end(), pool.begin(), pool.begin() + qa);
        eval.insert(eval.end(), pool.begin() + qa, pool.begin() + qa + qe);
    }
    std::sort(attack.begin(), attack.end());
    std::sort(eval.begin(), eval.end());
    return {attack, eval};
}

Dataset subset(const Dataset& ds, std::span<const int> indices) {
    Dataset out;
    out.images = ds.image_rows(indices);
    out.labels.reserve(indices.size());
    for (int i : indices) out.labels.push_back(ds.labels[static_cast<std::size_t>(i)]);
    out.num_classes = ds.num_classes;
    return out;
}

BatchPlan::BatchPlan(int dataset_size, int epochs, int large_batch, int small_batch,
                     int traversal_k, std::uint64_t seed)
    : n_(dataset_size),
      epochs_(epochs),
      large_batch_(large_batch),
      small_batch_(small_batch),
      traversal_k_(traversal_k),
      seed_(seed) {
    if (n_ <= 0) throw DataError("batch plan: empty dataset");
    if (epochs_ < 1 || large_batch_ < 1 || small_batch_ < 1 || traversal_k_ < 1) {
        throw ConfigError("batch plan: epochs, batch sizes and K must be >= 1");
    }
    if (small_batch_ > large_batch_) {
        throw ConfigError("batch plan: |x^SB| = " + std::to_string(small_batch_) +
                          " exceeds |x^LB| = " + std::to_string(large_batch_));
    }
    if (large_batch_ % small_batch_ != 0) {
        throw ConfigError("batch plan: |x^SB| = " + std::to_string(small_batch_) +
                          " must divide |x^LB| = " + std::to_string(large_batch_));
    }
    per_epoch_.resize(static_cast<std::size_t>(epochs_));
    for (int e = 0; e < epochs_; ++e) {
        std::vector<int> order(static_cast<std::size_t>(n_));
        for (int i = 0; i < n_; ++i) order[static_cast<std::size_t>(i)] = i;
        Rng rng(Rng::mix(seed_, 0xE000 + static_cast<std::uint64_t>(e)));
        rng.shuffle(order);
        auto& batches = per_epoch_[static_cast<std::size_t>(e)];
        for (int start = 0; start < n_; start += large_batch_) {
            const int end = std::min(start + large_batch_, n_);
            std::vector<int> batch(order.begin() + start, order.begin() + end);
            std::sort(batch.begin(), batch.end());
            batches.push_back(std::move(batch));
        }
    }
}

int BatchPlan::outer_steps_per_epoch() const { return (n_ + large_batch_ - 1) / large_batch_; }

const std::vector<std::vector<int>>& BatchPlan::epoch_batches(int epoch) const {
    return per_epoch_[static_cast<std::size_t>(epoch)];
}

std::vector<std::vector<int>> BatchPlan::inner_schedule(int epoch, int outer_index) const {
    const auto& batch = per_epoch_[static_cast<std::size_t>(epoch)][static_cast<std::size_t>(
        outer_index)];
    Rng rng(Rng::mix(seed_, 0x1F000000ULL + static_cast<std::uint64_t>(epoch) * 65536 +
                                static_cast<std::uint64_t>(outer_index)));
    std::vector<int> stream;
    stream.reserve(batch.size() * static_cast<std::size_t>(traversal_k_));
    for (int k = 0; k < traversal_k_; ++k) {
        std::vector<int> pass = batch;
        rng.shuffle(pass);
        stream.insert(stream.end(), pass.begin(), pass.end());
    }
    std::vector<std::vector<int>> chunks;
    for (std::size_t start = 0; start < stream.size();
         start += static_cast<std::size_t>(small_batch_)) {
        const std::size_t end =
            std::min(start + static_cast<std::size_t>(small_batch_), stream.size());
        std::vector<int> chunk(stream.begin() + static_cast<std::ptrdiff_t>(start),
                               stream.begin() + static_cast<std::ptrdiff_t>(end));
        std::sort(chunk.begin(), chunk.end());
        chunks.push_back(std::move(chunk));
    }
    return chunks;
}

}  // namespace uap
