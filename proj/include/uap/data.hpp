#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "uap/tensor.hpp"

namespace uap {

struct InputShape {
    int channels = 1;
    int height = 28;
    int width = 28;
};

// Images live in [0,1]; labels are ground truth and used only for surrogate
// training. Attack objectives use clean model predictions, cached per model.
struct Dataset {
    Tensor images;  // (n, c, h, w)
    std::vector<int> labels;
    int num_classes = 0;
    std::map<std::string, std::vector<int>> clean_predictions;

    int size() const { return images.shape.empty() ? 0 : images.dim(0); }
    InputShape input_shape() const;
    Tensor image_rows(std::span<const int> indices) const;  // gather into (k,c,h,w)
};

// IDX container (big-endian header). Magic 0x00000803 for images,
// 0x00000801 for labels; u8 pixels scaled to [0,1] by /255.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);
void save_idx(const Dataset& ds, const std::string& images_path, const std::string& labels_path);

// Class-conditional Gaussian bump constellations with per-sample jitter and
// pixel noise; deterministic per seed. Linearly separable by construction at
// 2 classes (distinct constellations), noisy enough to overlap at 10.
Dataset synth_blobs(int num_classes, int per_class, InputShape shape, std::uint64_t seed);

// Disjoint class-stratified index sets: (attack-train, eval).
std::pair<std::vector<int>, std::vector<int>> make_splits(const Dataset& ds, int n_attack,
                                                          int n_eval, std::uint64_t seed);

Dataset subset(const Dataset& ds, std::span<const int> indices);

// Batch schedule for one attack run. Outer level: every sample in exactly one
// large batch per epoch. Inner level: K concatenated shuffles of the large
// batch sliced into |x^SB|-sized chunks, so each sample is traversed exactly
// K times per outer step. Indices inside every batch/chunk are sorted
// ascending; membership, not order, defines the math, and the fixed order
// pins the float summation sequence.
class BatchPlan {
public:
    BatchPlan(int dataset_size, int epochs, int large_batch, int small_batch, int traversal_k,
              std::uint64_t seed);

    int epochs() const { return epochs_; }
    int outer_steps_per_epoch() const;
    const std::vector<std::vector<int>>& epoch_batches(int epoch) const;
    std::vector<std::vector<int>> inner_schedule(int epoch, int outer_index) const;

    int large_batch() const { return large_batch_; }
    int small_batch() const { return small_batch_; }
    int traversal_k() const { return traversal_k_; }

private:
    int n_;
    int epochs_;
    int large_batch_;
    int small_batch_;
    int traversal_k_;
    std::uint64_t seed_;
    std::vector<std::vector<std::vector<int>>> per_epoch_;
};

}  // namespace uap
