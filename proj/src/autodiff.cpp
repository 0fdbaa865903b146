#include "uap/autodiff.hpp"

#include <cmath>
#include <limits>

namespace uap {

Var Tape::input(Tensor value, bool differentiable) {
    Node node;
    node.value = std::move(value);
    node.needs_grad = differentiable;
    node.differentiable_input = differentiable;
    nodes_.push_back(std::move(node));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::emit(Tensor value, bool needs_grad, BackwardFn fn) {
    Node node;
    node.value = std::move(value);
    node.needs_grad = needs_grad;
    if (needs_grad) node.backward_fn = std::move(fn);
    nodes_.push_back(std::move(node));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

void Tape::ensure_grad(Var v) {
    const auto id = static_cast<std::size_t>(v.id);
    if (!has_grad_[id]) {
        grads_[id] = Tensor::zeros(nodes_[id].value.shape);
        has_grad_[id] = 1;
    }
}

void Tape::add_grad(Var v, const Tensor& contribution) {
    const auto id = static_cast<std::size_t>(v.id);
    if (!nodes_[id].needs_grad) return;
    ensure_grad(v);
    Tensor& g = grads_[id];
    const std::size_t n = g.data.size();
    for (std::size_t i = 0; i < n; ++i) g.data[i] += contribution.data[i];
}

void Tape::add_grad_at(Var v, std::int64_t flat_index, float contribution) {
    const auto id = static_cast<std::size_t>(v.id);
    if (!nodes_[id].needs_grad) return;
    ensure_grad(v);
    grads_[id].data[static_cast<std::size_t>(flat_index)] += contribution;
}

Tensor& Tape::grad_buffer(Var v) {
    ensure_grad(v);
    return grads_[static_cast<std::size_t>(v.id)];
}

std::unordered_map<int, Tensor> Tape::backward(Var output, const Tensor& seed) {
    if (consumed_) throw UsageError("backward: tape already consumed");
    const Tensor& out_value = value(output);
    if (seed.shape != out_value.shape) {
        throw ShapeError("backward: seed shape " + shape_str(seed.shape) +
                         " does not match output shape " + shape_str(out_value.shape));
    }
    consumed_ = true;
    grads_.assign(nodes_.size(), Tensor{});
    has_grad_.assign(nodes_.size(), 0);
    add_grad(output, seed);

    for (int id = output.id; id >= 0; --id) {
        const auto idx = static_cast<std::size_t>(id);
        if (!has_grad_[idx]) continue;
        if (nodes_[idx].backward_fn) nodes_[idx].backward_fn(*this, grads_[idx]);
    }

    std::unordered_map<int, Tensor> result;
    for (std::size_t id = 0; id < nodes_.size(); ++id) {
        if (!nodes_[id].differentiable_input) continue;
        if (has_grad_[id]) {
            result.emplace(static_cast<int>(id), std::move(grads_[id]));
        } else {
            result.emplace(static_cast<int>(id), Tensor::zeros(nodes_[id].value.shape));
        }
    }
    grads_.clear();
    has_grad_.clear();
    return result;
}

namespace ops {

namespace {

void require(bool cond, const char* op, const std::string& detail) {
    if (!cond) throw ShapeError(std::string(op) + ": " + detail);
}

void require_rank(const char* op, const Tensor& t, int rank) {
    require(t.rank() == rank, op,
            "expected rank " + std::to_string(rank) + ", got shape " + shape_str(t.shape));
}

void check_labels(const char* op, std::span<const int> labels, int n, int classes) {
    if (static_cast<int>(labels.size()) != n) {
        throw ShapeError(std::string(op) + ": " + std::to_string(labels.size()) +
                         " labels for batch of " + std::to_string(n));
    }
    for (int y : labels) {
        if (y < 0 || y >= classes) {
            throw DataError(std::string(op) + ": label " + std::to_string(y) +
                            " out of range [0," + std::to_string(classes) + ")");
        }
    }
}

}  // namespace

Var matmul(Tape& t, Var a, Var b) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    require_rank("matmul", av, 2);
    require_rank("matmul", bv, 2);
    require(av.dim(1) == bv.dim(0), "matmul",
            "inner dims disagree " + shape_str(av.shape) + " vs " + shape_str(bv.shape));
    const int n = av.dim(0), k = av.dim(1), m = bv.dim(1);
    Tensor out = Tensor::zeros({n, m});
    for (int i = 0; i < n; ++i) {
        const float* arow = av.ptr() + static_cast<std::size_t>(i) * k;
        float* orow = out.ptr() + static_cast<std::size_t>(i) * m;
        for (int kk = 0; kk < k; ++kk) {
            const float aik = arow[kk];
            const float* brow = bv.ptr() + static_cast<std::size_t>(kk) * m;
            for (int j = 0; j < m; ++j) orow[j] += aik * brow[j];
        }
    }
    const bool needs = t.needs_grad(a) || t.needs_grad(b);
    return t.emit(std::move(out), needs, [a, b, n, k, m](Tape& tape, const Tensor& go) {
        const Tensor& av2 = tape.value(a);
        const Tensor& bv2 = tape.value(b);
        if (tape.needs_grad(a)) {
            Tensor& da = tape.grad_buffer(a);
            for (int i = 0; i < n; ++i) {
                const float* grow = go.ptr() + static_cast<std::size_t>(i) * m;
                float* drow = da.ptr() + static_cast<std::size_t>(i) * k;
                for (int kk = 0; kk < k; ++kk) {
                    const float* brow = bv2.ptr() + static_cast<std::size_t>(kk) * m;
                    float acc = 0.0f;
                    for (int j = 0; j < m; ++j) acc += grow[j] * brow[j];
                    drow[kk] += acc;
                }
            }
        }
        if (tape.needs_grad(b)) {
            Tensor& db = tape.grad_buffer(b);
            for (int i = 0; i < n; ++i) {
                const float* arow = av2.ptr() + static_cast<std::size_t>(i) * k;
                const float* grow = go.ptr() + static_cast<std::size_t>(i) * m;
                for (int kk = 0; kk < k; ++kk) {
                    const float aik = arow[kk];
                    float* drow = db.ptr() + static_cast<std::size_t>(kk) * m;
                    for (int j = 0; j < m; ++j) drow[j] += aik * grow[j];
                }
            }
        }
    });
}

Var bias_add_row(Tape& t, Var x, Var b) {
    const Tensor& xv = t.value(x);
    const Tensor& bv = t.value(b);
    require_rank("bias_add_row", xv, 2);
    require_rank("bias_add_row", bv, 1);
    require(xv.dim(1) == bv.dim(0), "bias_add_row",
            "width mismatch " + shape_str(xv.shape) + " vs " + shape_str(bv.shape));
    const int n = xv.dim(0), m = xv.dim(1);
    Tensor out = xv;
    for (int i = 0; i < n; ++i) {
        float* row = out.ptr() + static_cast<std::size_t>(i) * m;
        for (int j = 0; j < m; ++j) row[j] += bv.data[static_cast<std::size_t>(j)];
    }
    const bool needs = t.needs_grad(x) || t.needs_grad(b);
    return t.emit(std::move(out), needs, [x, b, n, m](Tape& tape, const Tensor& go) {
        if (tape.needs_grad(x)) tape.add_grad(x, go);
        if (tape.needs_grad(b)) {
            Tensor& db = tape.grad_buffer(b);
            for (int i = 0; i < n; ++i) {
                const float* grow = go.ptr() + static_cast<std::size_t>(i) * m;
                for (int j = 0; j < m; ++j) db.data[static_cast<std::size_t>(j)] += grow[j];
            }
        }
    });
}

Var bias_add_chan(Tape& t, Var x, Var b) {
    const Tensor& xv = t.value(x);
    const Tensor& bv = t.value(b);
    require_rank("bias_add_chan", xv, 4);
    require_rank("bias_add_chan", bv, 1);
    require(xv.dim(1) == bv.dim(0), "bias_add_chan",
            "channel mismatch " + shape_str(xv.shape) + " vs " + shape_str(bv.shape));
    const int n = xv.dim(0), c = xv.dim(1);
    const std::int64_t hw = static_cast<std::int64_t>(xv.dim(2)) * xv.dim(3);
    Tensor out = xv;
    for (int i = 0; i < n; ++i) {
        for (int ch = 0; ch < c; ++ch) {
            float* p = out.ptr() + (static_cast<std::int64_t>(i) * c + ch) * hw;
            const float bc = bv.data[static_cast<std::size_t>(ch)];
            for (std::int64_t k = 0; k < hw; ++k) p[k] += bc;
        }
    }
    const bool needs = t.needs_grad(x) || t.needs_grad(b);
    return t.emit(std::move(out), needs, [x, b, n, c, hw](Tape& tape, const Tensor& go) {
        if (tape.needs_grad(x)) tape.add_grad(x, go);
        if (tape.needs_grad(b)) {
            Tensor& db = tape.grad_buffer(b);
            for (int i = 0; i < n; ++i) {
                for (int ch = 0; ch < c; ++ch) {
                    const float* p = go.ptr() + (static_cast<std::int64_t>(i) * c + ch) * hw;
                    float acc = 0.0f;
                    for (std::int64_t k = 0; k < hw; ++k) acc += p[k];
                    db.data[static_cast<std::size_t>(ch)] += acc;
                }
            }
        }
    });
}

Var add_uap(Tape& t, Var x, Var delta) {
    const Tensor& xv = t.value(x);
    const Tensor& dv = t.value(delta);
    require_rank("add_uap", xv, 4);
    require_rank("add_uap", dv, 3);
    require(xv.dim(1) == dv.dim(0) && xv.dim(2) == dv.dim(1) && xv.dim(3) == dv.dim(2), "add_uap",
            "perturbation shape " + shape_str(dv.shape) + " does not match inputs " +
                shape_str(xv.shape));
    const int n = xv.dim(0);
    const std::int64_t per = dv.numel();
    Tensor out = xv;
    for (int i = 0; i < n; ++i) {
        float* p = out.ptr() + i * per;
        for (std::int64_t k = 0; k < per; ++k) p[k] += dv.data[static_cast<std::size_t>(k)];
    }
    const bool needs = t.needs_grad(x) || t.needs_grad(delta);
    return t.emit(std::move(out), needs, [x, delta, n, per](Tape& tape, const Tensor& go) {
        if (tape.needs_grad(x)) tape.add_grad(x, go);
        if (tape.needs_grad(delta)) {
            Tensor& dd = tape.grad_buffer(delta);
            for (int i = 0; i < n; ++i) {
                const float* p = go.ptr() + i * per;
                for (std::int64_t k = 0; k < per; ++k) dd.data[static_cast<std::size_t>(k)] += p[k];
            }
        }
    });
}

Var conv2d(Tape& t, Var x, Var kernel, Padding padding) {
    const Tensor& xv = t.value(x);
    const Tensor& kv = t.value(kernel);
    require_rank("conv2d", xv, 4);
    require_rank("conv2d", kv, 4);
    require(xv.dim(1) == kv.dim(1), "conv2d",
            "input channels disagree " + shape_str(xv.shape) + " vs kernel " + shape_str(kv.shape));
    const int n = xv.dim(0), ci = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
    const int co = kv.dim(0), kh = kv.dim(2), kw = kv.dim(3);
    const bool same = padding == Padding::Same;
    const int pad_h = same ? (kh - 1) / 2 : 0;
    const int pad_w = same ? (kw - 1) / 2 : 0;
    const int oh = same ? h : h - kh + 1;
    const int ow = same ? w : w - kw + 1;
    require(oh >= 1 && ow >= 1, "conv2d",
            "kernel " + shape_str(kv.shape) + " larger than input " + shape_str(xv.shape));

    Tensor out = Tensor::zeros({n, co, oh, ow});
    const std::int64_t x_chw = static_cast<std::int64_t>(ci) * h * w;
    const std::int64_t o_chw = static_cast<std::int64_t>(co) * oh * ow;
    for (int in = 0; in < n; ++in) {
        const float* xs = xv.ptr() + in * x_chw;
        float* os = out.ptr() + in * o_chw;
        for (int oc = 0; oc < co; ++oc) {
            float* oplane = os + static_cast<std::int64_t>(oc) * oh * ow;
            for (int ic = 0; ic < ci; ++ic) {
                const float* xplane = xs + static_cast<std::int64_t>(ic) * h * w;
                const float* kplane =
                    kv.ptr() + (static_cast<std::int64_t>(oc) * ci + ic) * kh * kw;
                for (int oy = 0; oy < oh; ++oy) {
                    for (int ky = 0; ky < kh; ++ky) {
                        const int iy = oy + ky - pad_h;
                        if (iy < 0 || iy >= h) continue;
                        const float* xrow = xplane + static_cast<std::int64_t>(iy) * w;
                        const float* krow = kplane + static_cast<std::int64_t>(ky) * kw;
                        float* orow = oplane + static_cast<std::int64_t>(oy) * ow;
                        for (int kx = 0; kx < kw; ++kx) {
                            const float kval = krow[kx];
                            const int x0 = -pad_w + kx;
                            const int lo = std::max(0, -x0);
                            const int hi = std::min(ow, w - x0);
                            const float* xr = xrow + x0;
                            for (int ox = lo; ox < hi; ++ox) orow[ox] += kval * xr[ox];
                        }
                    }
                }
            }
        }
    }

    const bool needs = t.needs_grad(x) || t.needs_grad(kernel);
    return t.emit(std::move(out), needs,
                  [x, kernel, n, ci, h, w, co, kh, kw, oh, ow, pad_h, pad_w](Tape& tape,
                                                                             const Tensor& go) {
        const Tensor& xv2 = tape.value(x);
        const Tensor& kv2 = tape.value(kernel);
        const std::int64_t x_chw = static_cast<std::int64_t>(ci) * h * w;
        const std::int64_t o_chw = static_cast<std::int64_t>(co) * oh * ow;
        if (tape.needs_grad(x)) {
            Tensor& dx = tape.grad_buffer(x);
            for (int in = 0; in < n; ++in) {
                const float* gs = go.ptr() + in * o_chw;
                float* ds = dx.ptr() + in * x_chw;
                for (int oc = 0; oc < co; ++oc) {
                    const float* gplane = gs + static_cast<std::int64_t>(oc) * oh * ow;
                    for (int ic = 0; ic < ci; ++ic) {
                        float* dplane = ds + static_cast<std::int64_t>(ic) * h * w;
                        const float* kplane =
                            kv2.ptr() + (static_cast<std::int64_t>(oc) * ci + ic) * kh * kw;
                        for (int oy = 0; oy < oh; ++oy) {
                            const float* grow = gplane + static_cast<std::int64_t>(oy) * ow;
                            for (int ky = 0; ky < kh; ++ky) {
                                const int iy = oy + ky - pad_h;
                                if (iy < 0 || iy >= h) continue;
                                float* drow = dplane + static_cast<std::int64_t>(iy) * w;
                                const float* krow = kplane + static_cast<std::int64_t>(ky) * kw;
                                for (int kx = 0; kx < kw; ++kx) {
                                    const float kval = krow[kx];
                                    const int x0 = -pad_w + kx;
                                    const int lo = std::max(0, -x0);
                                    const int hi = std::min(ow, w - x0);
                                    float* dr = drow + x0;
                                    for (int ox = lo; ox < hi; ++ox) dr[ox] += kval * grow[ox];
                                }
                            }
                        }
                    }
                }
            }
        }
        if (tape.needs_grad(kernel)) {
            Tensor& dk = tape.grad_buffer(kernel);
            for (int in = 0; in < n; ++in) {
                const float* xs = xv2.ptr() + in * x_chw;
                const float* gs = go.ptr() + in * o_chw;
                for (int oc = 0; oc < co; ++oc) {
                    const float* gplane = gs + static_cast<std::int64_t>(oc) * oh * ow;
                    for (int ic = 0; ic < ci; ++ic) {
                        const float* xplane = xs + static_cast<std::int64_t>(ic) * h * w;
                        float* kplane =
                            dk.ptr() + (static_cast<std::int64_t>(oc) * ci + ic) * kh * kw;
                        for (int ky = 0; ky < kh; ++ky) {
                            float* krow = kplane + static_cast<std::int64_t>(ky) * kw;
                            for (int oy = 0; oy < oh; ++oy) {
                                const int iy = oy + ky - pad_h;
                                if (iy < 0 || iy >= h) continue;
                                const float* xrow = xplane + static_cast<std::int64_t>(iy) * w;
                                const float* grow = gplane + static_cast<std::int64_t>(oy) * ow;
                                for (int kx = 0; kx < kw; ++kx) {
                                    const int x0 = -pad_w + kx;
                                    const int lo = std::max(0, -x0);
                                    const int hi = std::min(ow, w - x0);
                                    const float* xr = xrow + x0;
                                    float acc = 0.0f;
                                    for (int ox = lo; ox < hi; ++ox) acc += xr[ox] * grow[ox];
                                    krow[kx] += acc;
                                }
                            }
                        }
                    }
                }
            }
        }
    });
}

Var maxpool2(Tape& t, Var x) {
    const Tensor& xv = t.value(x);
    require_rank("maxpool2", xv, 4);
    const int n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
    require(h >= 2 && w >= 2, "maxpool2", "input too small " + shape_str(xv.shape));
    const int oh = h / 2, ow = w / 2;
    Tensor out = Tensor::zeros({n, c, oh, ow});
    // argmax indices, ties to the first position in row-major scan order
    auto arg = std::make_shared<std::vector<std::int64_t>>(out.data.size());
    std::int64_t oi = 0;
    for (int in = 0; in < n; ++in) {
        for (int ic = 0; ic < c; ++ic) {
            const float* plane =
                xv.ptr() + (static_cast<std::int64_t>(in) * c + ic) * h * w;
            const std::int64_t plane_off = (static_cast<std::int64_t>(in) * c + ic) * h * w;
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox, ++oi) {
                    float best = -std::numeric_limits<float>::infinity();
                    std::int64_t best_idx = 0;
                    for (int dy = 0; dy < 2; ++dy) {
                        for (int dx = 0; dx < 2; ++dx) {
                            const std::int64_t idx =
                                static_cast<std::int64_t>(oy * 2 + dy) * w + (ox * 2 + dx);
                            const float v = plane[idx];
                            if (v > best) {
                                best = v;
                                best_idx = plane_off + idx;
                            }
                        }
                    }
                    out.data[static_cast<std::size_t>(oi)] = best;
                    (*arg)[static_cast<std::size_t>(oi)] = best_idx;
                }
            }
        }
    }
    const bool needs = t.needs_grad(x);
    return t.emit(std::move(out), needs, [x, arg](Tape& tape, const Tensor& go) {
        Tensor& dx = tape.grad_buffer(x);
        for (std::size_t i = 0; i < go.data.size(); ++i) {
            dx.data[static_cast<std::size_t>((*arg)[i])] += go.data[i];
        }
    });
}

Var relu(Tape& t, Var x) {
    const Tensor& xv = t.value(x);
    Tensor out = xv;
    for (float& v : out.data) v = v > 0.0f ? v : 0.0f;
    const bool needs = t.needs_grad(x);
    return t.emit(std::move(out), needs, [x](Tape& tape, const Tensor& go) {
        const Tensor& xv2 = tape.value(x);
        Tensor& dx = tape.grad_buffer(x);
        for (std::size_t i = 0; i < go.data.size(); ++i) {
            if (xv2.data[i] > 0.0f) dx.data[i] += go.data[i];
        }
    });
}

Var flatten(Tape& t, Var x) {
    const Tensor& xv = t.value(x);
    require(xv.rank() >= 2, "flatten", "needs a batch dimension, got " + shape_str(xv.shape));
    const int n = xv.dim(0);
    const int rest = static_cast<int>(xv.numel() / n);
    Tensor out({n, rest}, xv.data);
    const bool needs = t.needs_grad(x);
    return t.emit(std::move(out), needs, [x](Tape& tape, const Tensor& go) {
        Tensor& dx = tape.grad_buffer(x);
        for (std::size_t i = 0; i < go.data.size(); ++i) dx.data[i] += go.data[i];
    });
}

Var softmax_xent(Tape& t, Var logits, std::span<const int> labels) {
    const Tensor& zv = t.value(logits);
    require_rank("softmax_xent", zv, 2);
    const int n = zv.dim(0), m = zv.dim(1);
    check_labels("softmax_xent", labels, n, m);
    Tensor out = Tensor::zeros({n});
    auto labels_copy = std::make_shared<std::vector<int>>(labels.begin(), labels.end());
    for (int i = 0; i < n; ++i) {
        const float* row = zv.ptr() + static_cast<std::size_t>(i) * m;
        float mx = row[0];
        for (int j = 1; j < m; ++j) mx = std::max(mx, row[j]);
        float s = 0.0f;
        for (int j = 0; j < m; ++j) s += std::exp(row[j] - mx);
        out.data[static_cast<std::size_t>(i)] =
            mx + std::log(s) - row[(*labels_copy)[static_cast<std::size_t>(i)]];
    }
    const bool needs = t.needs_grad(logits);
    return t.emit(std::move(out), needs, [logits, labels_copy, n, m](Tape& tape, const Tensor& go) {
        const Tensor& zv2 = tape.value(logits);
        Tensor& dz = tape.grad_buffer(logits);
        for (int i = 0; i < n; ++i) {
            const float g = go.data[static_cast<std::size_t>(i)];
            if (g == 0.0f) continue;
            const float* row = zv2.ptr() + static_cast<std::size_t>(i) * m;
            float* drow = dz.ptr() + static_cast<std::size_t>(i) * m;
            float mx = row[0];
            for (int j = 1; j < m; ++j) mx = std::max(mx, row[j]);
            float s = 0.0f;
            for (int j = 0; j < m; ++j) s += std::exp(row[j] - mx);
            const int y = (*labels_copy)[static_cast<std::size_t>(i)];
            for (int j = 0; j < m; ++j) {
                const float p = std::exp(row[j] - mx) / s;
                drow[j] += g * (p - (j == y ? 1.0f : 0.0f));
            }
        }
    });
}

Var pick_logit(Tape& t, Var logits, std::span<const int> labels) {
    const Tensor& zv = t.value(logits);
    require_rank("pick_logit", zv, 2);
    const int n = zv.dim(0), m = zv.dim(1);
    check_labels("pick_logit", labels, n, m);
    auto labels_copy = std::make_shared<std::vector<int>>(labels.begin(), labels.end());
    Tensor out = Tensor::zeros({n});
    for (int i = 0; i < n; ++i) {
        out.data[static_cast<std::size_t>(i)] =
            zv.data[static_cast<std::size_t>(i) * m + (*labels_copy)[static_cast<std::size_t>(i)]];
    }
    const bool needs = t.needs_grad(logits);
    return t.emit(std::move(out), needs, [logits, labels_copy, m](Tape& tape, const Tensor& go) {
        for (std::size_t i = 0; i < go.data.size(); ++i) {
            tape.add_grad_at(logits, static_cast<std::int64_t>(i) * m + (*labels_copy)[i],
                             go.data[i]);
        }
    });
}

Var clipped_sum(Tape& t, Var per_sample, float beta) {
    const Tensor& v = t.value(per_sample);
    require_rank("clipped_sum", v, 1);
    float acc = 0.0f;
    for (float x : v.data) acc += std::min(x, beta);
    Tensor out({1}, {acc});
    const bool needs = t.needs_grad(per_sample);
    return t.emit(std::move(out), needs, [per_sample, beta](Tape& tape, const Tensor& go) {
        const Tensor& v2 = tape.value(per_sample);
        Tensor& dv = tape.grad_buffer(per_sample);
        for (std::size_t i = 0; i < v2.data.size(); ++i) {
            if (v2.data[i] < beta) dv.data[i] += go.data[0];
        }
    });
}

Var sum_all(Tape& t, Var x) {
    const Tensor& v = t.value(x);
    float acc = 0.0f;
    for (float e : v.data) acc += e;
    Tensor out({1}, {acc});
    const bool needs = t.needs_grad(x);
    return t.emit(std::move(out), needs, [x](Tape& tape, const Tensor& go) {
        Tensor& dx = tape.grad_buffer(x);
        for (float& e : dx.data) e += go.data[0];
    });
}

Var mean_all(Tape& t, Var x) {
    const Tensor& v = t.value(x);
    const float inv = 1.0f / static_cast<float>(v.numel());
    float acc = 0.0f;
    for (float e : v.data) acc += e;
    Tensor out({1}, {acc * inv});
    const bool needs = t.needs_grad(x);
    return t.emit(std::move(out), needs, [x, inv](Tape& tape, const Tensor& go) {
        Tensor& dx = tape.grad_buffer(x);
        const float g = go.data[0] * inv;
        for (float& e : dx.data) e += g;
    });
}

Var scale(Tape& t, Var x, float c) {
    Tensor out = t.value(x);
    for (float& v : out.data) v *= c;
    const bool needs = t.needs_grad(x);
    return t.emit(std::move(out), needs, [x, c](Tape& tape, const Tensor& go) {
        Tensor& dx = tape.grad_buffer(x);
        for (std::size_t i = 0; i < go.data.size(); ++i) dx.data[i] += c * go.data[i];
    });
}

Var add(Tape& t, Var x, Var y) {
    const Tensor& xv = t.value(x);
    const Tensor& yv = t.value(y);
    check_same_shape("add", xv, yv);
    Tensor out = xv;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += yv.data[i];
    const bool needs = t.needs_grad(x) || t.needs_grad(y);
    return t.emit(std::move(out), needs, [x, y](Tape& tape, const Tensor& go) {
        if (tape.needs_grad(x)) tape.add_grad(x, go);
        if (tape.needs_grad(y)) tape.add_grad(y, go);
    });
}

}  // namespace ops

Tensor softmax_rows(const Tensor& logits) {
    if (logits.rank() != 2) {
        throw ShapeError("softmax_rows: expected rank 2, got " + shape_str(logits.shape));
    }
    const int n = logits.dim(0), m = logits.dim(1);
    Tensor out = logits;
    for (int i = 0; i < n; ++i) {
        float* row = out.ptr() + static_cast<std::size_t>(i) * m;
        float mx = row[0];
        for (int j = 1; j < m; ++j) mx = std::max(mx, row[j]);
        float s = 0.0f;
        for (int j = 0; j < m; ++j) {
            row[j] = std::exp(row[j] - mx);
            s += row[j];
        }
        for (int j = 0; j < m; ++j) row[j] /= s;
    }
    return out;
}

}  // namespace uap
