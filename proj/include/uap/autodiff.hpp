#pragma once

#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "uap/tensor.hpp"

namespace uap {

// Handle to a node on a Tape.
struct Var {
    int id = -1;
};

// Define-by-run tape. Forward primitives append nodes; backward() replays
// adjoints in reverse and is allowed exactly once per tape. A tape belongs to
// a single thread for its forward/backward lifetime.
class Tape {
public:
    Var input(Tensor value, bool differentiable);

    const Tensor& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
    bool needs_grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].needs_grad; }
    bool consumed() const { return consumed_; }

    // Gradients for every differentiable input, keyed by Var id. Inputs the
    // seed never reaches get zero gradients of the right shape.
    std::unordered_map<int, Tensor> backward(Var output, const Tensor& seed);

    // Primitive plumbing (used by ops).
    using BackwardFn = std::function<void(Tape&, const Tensor& grad_out)>;
    Var emit(Tensor value, bool needs_grad, BackwardFn fn);
    void add_grad(Var v, const Tensor& contribution);
    void add_grad_at(Var v, std::int64_t flat_index, float contribution);
    Tensor& grad_buffer(Var v);

private:
    struct Node {
        Tensor value;
        bool needs_grad = false;
        bool differentiable_input = false;
        BackwardFn backward_fn;
    };
    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
    std::vector<char> has_grad_;
    bool consumed_ = false;

    void ensure_grad(Var v);
};

namespace ops {

// All primitives run at stride 1 in float32 with explicit shape checks.
enum class Padding { Valid, Same };

Var matmul(Tape& t, Var a, Var b);                       // (n,k)x(k,m) -> (n,m)
Var bias_add_row(Tape& t, Var x, Var b);                 // (n,m)+(m,) -> (n,m)
Var bias_add_chan(Tape& t, Var x, Var b);                // (n,c,h,w)+(c,) -> (n,c,h,w)
Var add_uap(Tape& t, Var x, Var delta);                  // (n,c,h,w)+(c,h,w)
Var conv2d(Tape& t, Var x, Var kernel, Padding padding); // (n,ci,h,w)*(co,ci,kh,kw)
Var maxpool2(Tape& t, Var x);                            // 2x2, stride 2, floor
Var relu(Tape& t, Var x);
Var flatten(Tape& t, Var x);                             // (n,...) -> (n,prod)
Var softmax_xent(Tape& t, Var logits, std::span<const int> labels);  // per-sample CE (n,)
Var pick_logit(Tape& t, Var logits, std::span<const int> labels);    // z_label (n,)
Var clipped_sum(Tape& t, Var per_sample, float beta);    // sum of min(v,beta); +inf beta = plain sum
Var sum_all(Tape& t, Var x);
Var mean_all(Tape& t, Var x);
Var scale(Tape& t, Var x, float c);
Var add(Tape& t, Var x, Var y);                          // same shape

}  // namespace ops

// Non-traced helper: row-wise softmax of (n,m) logits.
Tensor softmax_rows(const Tensor& logits);

}  // namespace uap
