#include "hybridlm/autodiff.hpp"

#include <cmath>
#include <cstring>

#include "hybridlm/errors.hpp"
#include "hybridlm/kernels.hpp"

namespace hybridlm::ad {

namespace {

bool any_requires_grad(const std::vector<NodePtr>& parents) {
    for (const auto& p : parents) {
        if (p->requires_grad) return true;
    }
    return false;
}

void check_2d(const Tensor& a, const char* op) {
    if (a.shape().size() != 2) {
        throw DimensionError(std::string(op) + ": expected 2-D tensor, got " + a.value().shape_str());
    }
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.value().same_shape(b.value())) {
        throw DimensionError(std::string(op) + ": shape mismatch, " + a.value().shape_str() + " vs " +
                             b.value().shape_str());
    }
}

}  // namespace

Tensor Tensor::leaf(TensorData v, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    n->requires_grad = requires_grad;
    if (requires_grad) n->ensure_grad();
    return Tensor(n);
}

Tensor Tape::record(TensorData value, std::vector<NodePtr> parents, std::function<void()> backward_fn) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = any_requires_grad(parents);
    n->parents = std::move(parents);
    if (n->requires_grad) {
        n->ensure_grad();
        n->backward = std::move(backward_fn);
    }
    nodes_.push_back(n);
    return Tensor(n);
}

void Tape::backward(const Tensor& root) {
    Node* r = root.node().get();
    if (!r->requires_grad) return;
    // Recorded (op-output) grads are per-pass scratch; only leaf gradients
    // persist, so repeated backward calls accumulate leaves additively.
    for (auto& n : nodes_) {
        if (n->requires_grad) n->zero_grad();
    }
    r->ensure_grad();
    for (float& g : r->grad) g += 1.0f;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        Node* n = it->get();
        if (n->requires_grad && n->backward) n->backward();
    }
}

// Each op records a node first, then installs a backward closure that may
// capture the freshly created node (for its grad) plus raw parent pointers.
// Parents are pinned by the node's parent list, so raw pointers are safe.

Tensor matmul(Tape& t, const Tensor& a, const Tensor& b) {
    check_2d(a, "matmul");
    check_2d(b, "matmul");
    const int m = a.shape()[0], k = a.shape()[1];
    const int k2 = b.shape()[0], n = b.shape()[1];
    if (k != k2) {
        throw DimensionError("matmul: inner dimensions disagree, " + a.value().shape_str() + " vs " +
                             b.value().shape_str());
    }
    TensorData out({m, n});
    kern::matmul(a.value().data.data(), b.value().data.data(), out.data.data(), m, k, n, false);
    Tensor res = t.record(std::move(out), {a.node(), b.node()}, nullptr);
    if (res.requires_grad()) {
        Node* self = res.node().get();
        Node* an = a.node().get();
        Node* bn = b.node().get();
        self->backward = [self, an, bn, m, k, n]() {
            const float* dc = self->grad.data();
            if (an->requires_grad) {
                an->ensure_grad();
                // dA += dC * B^T
                kern::matmul_nt(dc, bn->value.data.data(), an->grad.data(), m, n, k, true);
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                // dB += A^T * dC
                kern::matmul_tn(an->value.data.data(), dc, bn->grad.data(), m, k, n, true);
            }
        };
    }
    return res;
}

Tensor matmul_nt(Tape& t, const Tensor& a, const Tensor& b) {
    check_2d(a, "matmul_nt");
    check_2d(b, "matmul_nt");
    const int m = a.shape()[0], k = a.shape()[1];
    const int n = b.shape()[0], k2 = b.shape()[1];
    if (k != k2) {
        throw DimensionError("matmul_nt: inner dimensions disagree, " + a.value().shape_str() + " vs " +
                             b.value().shape_str());
    }
    TensorData out({m, n});
    kern::matmul_nt(a.value().data.data(), b.value().data.data(), out.data.data(), m, k, n, false);
    Tensor res = t.record(std::move(out), {a.node(), b.node()}, nullptr);
    if (res.requires_grad()) {
        Node* self = res.node().get();
        Node* an = a.node().get();
        Node* bn = b.node().get();
        self->backward = [self, an, bn, m, k, n]() {
            const float* dc = self->grad.data();
            if (an->requires_grad) {
                an->ensure_grad();
                // dA += dC * B
                kern::matmul(dc, bn->value.data.data(), an->grad.data(), m, n, k, true);
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                // dB += dC^T * A
                kern::matmul_tn(dc, an->value.data.data(), bn->grad.data(), m, n, k, true);
            }
        };
    }
    return res;
}

Tensor add(Tape& t, const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    TensorData out = a.value();
    const auto& bd = b.value().data;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += bd[i];
    Tensor res = t.record(std::move(out), {a.node(), b.node()}, nullptr);
    if (res.requires_grad()) {
        Node* self = res.node().get();
        Node* an = a.node().get();
        Node* bn = b.node().get();
        self->backward = [self, an, bn]() {
            for (Node* p : {an, bn}) {
                if (!p->requires_grad) continue;
                p->ensure_grad();
                for (size_t i = 0; i < self->grad.size(); ++i) p->grad[i] += self->grad[i];
            }
        };
    }
    return res;
}

Tensor add_rowvec(Tape& t, const Tensor& a, const Tensor& v) {
    check_2d(a, "add_rowvec");
    const int m = a.shape()[0], n = a.shape()[1];
    if (static_cast<int>(v.value().numel()) != n) {
        throw DimensionError("add_rowvec: vector length mismatch, " + a.value().shape_str() + " vs " +
                             v.value().shape_str());
    }
    TensorData out = a.value();
    const float* vd = v.value().data.data();
    for (int i = 0; i < m; ++i) {
        float* row = out.data.data() + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) row[j] += vd[j];
    }
    Tensor res = t.record(std::move(out), {a.node(), v.node()}, nullptr);
    if (res.requires_grad()) {
        Node* self = res.node().get();
        Node* an = a.node().get();
        Node* vn = v.node().get();
        self->backward = [self, an, vn, m, n]() {
            if (an->requires_grad) {
                an->ensure_grad();
                for (size_t i = 0; i < self->grad.size(); ++i) an->grad[i] += self->grad[i];
            }
            if (vn->requires_grad) {
                vn->ensure_grad();
                for (int i = 0; i < m; ++i) {
                    const float* row = self->grad.data() + static_cast<size_t>(i) * n;
                    for (int j = 0; j < n; ++j) vn->grad[j] += row[j];
                }
            }
        };
    }
    return res;
}

Tensor mul(Tape& t, const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    TensorData out = a.value();
    const auto& bd = b.value().data;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= bd[i];
    Tensor res = t.record(std::move(out), {a.node(), b.node()}, nullptr);
    if (res.requires_grad()) {
        Node* self = res.node().get();
        Node* an = a.node().get();
        Node* bn = b.node().get();
        self->backward = [self, an, bn]() {
            if (an->requires_grad) {
                an->ensure_grad();
                for (size_t i = 0; i < self->grad.size(); ++i) an->grad[i] += self->grad[i] * bn->value.data[i];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (size_t i = 0; i < self->grad.size(); ++i) bn->grad[i] += self->grad[i] * an->value.data[i];
            }
        };
    }
    return res;
}

Tensor scale(Tape& t, const Tensor& a, float s) {
    TensorData out = a.value();
    for (float& x : out.data) x *= s;
    Tensor res = t.record(std::move(out), {a.node()}, nullptr);
    if (res.requires_grad()) {
        Node* self = res.node().get();
        Node* an = a.node().get();
        self->backward = [self, an, s]() {
            an->ensure_grad();
            for (size_t i = 0; i < self->grad.size(); ++i) an->grad[i] += self->grad[i] * s;
        };
    }
    return res;
}

Tensor gelu(Tape& t, const Tensor& a) {
    TensorData out(a.value().shape);
    kern::gelu(a.value().data.data(), out.data.data(), out.numel());
    Tensor res = t.record(std::move(out), {a.node()}, nullptr);
    if (res.requires_grad()) {
        Node* self = res.node().get();
        Node* an = a.node().get();
        self->backward = [self, an]() {
            an->ensure_grad();
            kern::gelu_backward(an->value.data.data(), self->grad.data(), an->grad.data(), self->grad.size());
        };
    }
    return res;
}

Tensor softmax_rows(Tape& t, const Tensor& a, std::vector<int> limits) {
    check_2d(a, "softmax_rows");
    const int m = a.shape()[0], n = a.shape()[1];
    if (static_cast<int>(limits.size()) != m) {
        throw DimensionError("softmax_rows: limits length " + std::to_string(limits.size()) +
                             " does not match rows of " + a.value().shape_str());
    }
    for (int i = 0; i < m; ++i) {
        if (limits[i] < 1 || limits[i] > n) {
            throw DimensionError("softmax_rows: limit " + std::to_string(limits[i]) + " out of range for " +
                                 a.value().shape_str());
        }
    }
    TensorData out = a.value();
    for (int i = 0; i < m; ++i) kern::softmax_row(out.data.data() + static_cast<size_t>(i) * n, limits[i], n);
    Tensor res = t.record(std::move(out), {a.node()}, nullptr);
    if (res.requires_grad()) {
        Node* self = res.node().get();
        Node* an = a.node().get();
        auto lim = std::move(limits);
        self->backward = [self, an, lim, m, n]() {
            an->ensure_grad();
            for (int i = 0; i < m; ++i) {
                const float* s = self->value.data.data() + static_cast<size_t>(i) * n;
                const float* dy = self->grad.data() + static_cast<size_t>(i) * n;
                float* dx = an->grad.data() + static_cast<size_t>(i) * n;
                double dot = 0.0;
                for (int j = 0; j < lim[i]; ++j) dot += static_cast<double>(dy[j]) * s[j];
                const float d = static_cast<float>(dot);
                for (int j = 0; j < lim[i]; ++j) dx[j] += s[j] * (dy[j] - d);
            }
        };
    }
    return res;
}

Tensor layer_norm(Tape& t, const Tensor& x, const Tensor& gain, const Tensor& bias, float eps) {
    check_2d(x, "layer_norm");
    const int m = x.shape()[0], n = x.shape()[1];
    if (static_cast<int>(gain.value().numel()) != n || static_cast<int>(bias.value().numel()) != n) {
        throw DimensionError("layer_norm: gain/bias width mismatch with " + x.value().shape_str());
    }
    TensorData out({m, n});
    std::vector<float> means(m), rstds(m);
    for (int i = 0; i < m; ++i) {
        kern::layer_norm_row(x.value().data.data() + static_cast<size_t>(i) * n, gain.value().data.data(),
                             bias.value().data.data(), out.data.data() + static_cast<size_t>(i) * n, n, eps,
                             &means[i], &rstds[i]);
    }
    Tensor res = t.record(std::move(out), {x.node(), gain.node(), bias.node()}, nullptr);
    if (res.requires_grad()) {
        Node* self = res.node().get();
        Node* xn = x.node().get();
        Node* gn = gain.node().get();
        Node* bn = bias.node().get();
        self->backward = [self, xn, gn, bn, means, rstds, m, n]() {
            std::vector<float> dx_scratch, dg_scratch, db_scratch;
            float* dx = nullptr;
            if (xn->requires_grad) {
                xn->ensure_grad();
                dx = xn->grad.data();
            } else {
                dx_scratch.assign(xn->value.numel(), 0.0f);
                dx = dx_scratch.data();
            }
            float* dgain = nullptr;
            if (gn->requires_grad) {
                gn->ensure_grad();
                dgain = gn->grad.data();
            } else {
                dg_scratch.assign(n, 0.0f);
                dgain = dg_scratch.data();
            }
            float* dbias = nullptr;
            if (bn->requires_grad) {
                bn->ensure_grad();
                dbias = bn->grad.data();
            } else {
                db_scratch.assign(n, 0.0f);
                dbias = db_scratch.data();
            }
            for (int i = 0; i < m; ++i) {
                kern::layer_norm_row_backward(xn->value.data.data() + static_cast<size_t>(i) * n,
                                              gn->value.data.data(),
                                              self->grad.data() + static_cast<size_t>(i) * n, means[i], rstds[i],
                                              dx + static_cast<size_t>(i) * n, dgain, dbias, n);
            }
        };
    }
    return res;
}

Tensor embedding_rows(Tape& t, const Tensor& emb, const std::vector<int>& ids) {
    check_2d(emb, "embedding_rows");
    const int vocab = emb.shape()[0], d = emb.shape()[1];
    const int m = static_cast<int>(ids.size());
    TensorData out({m, d});
    for (int i = 0; i < m; ++i) {
        const int id = ids[i];
        if (id < 0 || id >= vocab) {
            throw DimensionError("embedding_rows: id " + std::to_string(id) + " out of range for " +
                                 emb.value().shape_str());
        }
        std::memcpy(out.data.data() + static_cast<size_t>(i) * d,
                    emb.value().data.data() + static_cast<size_t>(id) * d, sizeof(float) * d);
    }
    Tensor res = t.record(std::move(out), {emb.node()}, nullptr);
    if (res.requires_grad()) {
        Node* self = res.node().get();
        Node* en = emb.node().get();
        auto ids_copy = ids;
        self->backward = [self, en, ids_copy, d]() {
            en->ensure_grad();
            for (size_t i = 0; i < ids_copy.size(); ++i) {
                const float* src = self->grad.data() + i * d;
                float* dst = en->grad.data() + static_cast<size_t>(ids_copy[i]) * d;
                for (int j = 0; j < d; ++j) dst[j] += src[j];
            }
        };
    }
    return res;
}

Tensor slice_rows(Tape& t, const Tensor& a, int row0, int nrows) {
    check_2d(a, "slice_rows");
    const int m = a.shape()[0], n = a.shape()[1];
    if (row0 < 0 || nrows < 1 || row0 + nrows > m) {
        throw DimensionError("slice_rows: range [" + std::to_string(row0) + ", " + std::to_string(row0 + nrows) +
                             ") out of bounds for " + a.value().shape_str());
    }
    TensorData out({nrows, n});
    std::memcpy(out.data.data(), a.value().data.data() + static_cast<size_t>(row0) * n,
                sizeof(float) * static_cast<size_t>(nrows) * n);
    Tensor res = t.record(std::move(out), {a.node()}, nullptr);
    if (res.requires_grad()) {
        Node* self = res.node().get();
        Node* an = a.node().get();
        self->backward = [self, an, row0, n]() {
            an->ensure_grad();
            float* dst = an->grad.data() + static_cast<size_t>(row0) * n;
            for (size_t i = 0; i < self->grad.size(); ++i) dst[i] += self->grad[i];
        };
    }
    return res;
}

Tensor slice_cols(Tape& t, const Tensor& a, int col0, int ncols) {
    check_2d(a, "slice_cols");
    const int m = a.shape()[0], n = a.shape()[1];
    if (col0 < 0 || ncols < 1 || col0 + ncols > n) {
        throw DimensionError("slice_cols: range [" + std::to_string(col0) + ", " + std::to_string(col0 + ncols) +
                             ") out of bounds for " + a.value().shape_str());
    }
    TensorData out({m, ncols});
    for (int i = 0; i < m; ++i) {
        std::memcpy(out.data.data() + static_cast<size_t>(i) * ncols,
                    a.value().data.data() + static_cast<size_t>(i) * n + col0, sizeof(float) * ncols);
    }
    Tensor res = t.record(std::move(out), {a.node()}, nullptr);
    if (res.requires_grad()) {
        Node* self = res.node().get();
        Node* an = a.node().get();
        self->backward = [self, an, col0, ncols, m, n]() {
            an->ensure_grad();
            for (int i = 0; i < m; ++i) {
                const float* src = self->grad.data() + static_cast<size_t>(i) * ncols;
                float* dst = an->grad.data() + static_cast<size_t>(i) * n + col0;
                for (int j = 0; j < ncols; ++j) dst[j] += src[j];
            }
        };
    }
    return res;
}

Tensor concat_rows(Tape& t, const std::vector<Tensor>& parts) {
    if (parts.empty()) throw DimensionError("concat_rows: no parts");
    const int n = parts[0].shape().size() == 2 ? parts[0].shape()[1] : -1;
    int total = 0;
    std::vector<NodePtr> parents;
    for (const auto& p : parts) {
        check_2d(p, "concat_rows");
        if (p.shape()[1] != n) {
            throw DimensionError("concat_rows: column mismatch, " + parts[0].value().shape_str() + " vs " +
                                 p.value().shape_str());
        }
        total += p.shape()[0];
        parents.push_back(p.node());
    }
    TensorData out({total, n});
    size_t off = 0;
    for (const auto& p : parts) {
        std::memcpy(out.data.data() + off, p.value().data.data(), sizeof(float) * p.value().numel());
        off += p.value().numel();
    }
    Tensor res = t.record(std::move(out), parents, nullptr);
    if (res.requires_grad()) {
        Node* self = res.node().get();
        std::vector<Node*> raw;
        for (const auto& p : parts) raw.push_back(p.node().get());
        self->backward = [self, raw]() {
            size_t off = 0;
            for (Node* p : raw) {
                const size_t cnt = p->value.numel();
                if (p->requires_grad) {
                    p->ensure_grad();
                    for (size_t i = 0; i < cnt; ++i) p->grad[i] += self->grad[off + i];
                }
                off += cnt;
            }
        };
    }
    return res;
}

Tensor concat_cols(Tape& t, const std::vector<Tensor>& parts) {
    if (parts.empty()) throw DimensionError("concat_cols: no parts");
    const int m = parts[0].shape().size() == 2 ? parts[0].shape()[0] : -1;
    int total = 0;
    std::vector<NodePtr> parents;
    for (const auto& p : parts) {
        check_2d(p, "concat_cols");
        if (p.shape()[0] != m) {
            throw DimensionError("concat_cols: row mismatch, " + parts[0].value().shape_str() + " vs " +
                                 p.value().shape_str());
        }
        total += p.shape()[1];
        parents.push_back(p.node());
    }
    TensorData out({m, total});
    int coff = 0;
    for (const auto& p : parts) {
        const int pn = p.shape()[1];
        for (int i = 0; i < m; ++i) {
            std::memcpy(out.data.data() + static_cast<size_t>(i) * total + coff,
                        p.value().data.data() + static_cast<size_t>(i) * pn, sizeof(float) * pn);
        }
        coff += pn;
    }
    Tensor res = t.record(std::move(out), parents, nullptr);
    if (res.requires_grad()) {
        Node* self = res.node().get();
        std::vector<Node*> raw;
        for (const auto& p : parts) raw.push_back(p.node().get());
        self->backward = [self, raw, m, total]() {
            int coff = 0;
            for (Node* p : raw) {
                const int pn = p->value.shape[1];
                if (p->requires_grad) {
                    p->ensure_grad();
                    for (int i = 0; i < m; ++i) {
                        const float* src = self->grad.data() + static_cast<size_t>(i) * total + coff;
                        float* dst = p->grad.data() + static_cast<size_t>(i) * pn;
                        for (int j = 0; j < pn; ++j) dst[j] += src[j];
                    }
                }
                coff += pn;
            }
        };
    }
    return res;
}

Tensor sum(Tape& t, const Tensor& a) {
    double acc = 0.0;
    for (float v : a.value().data) acc += v;
    TensorData out = TensorData::scalar(static_cast<float>(acc));
    Tensor res = t.record(std::move(out), {a.node()}, nullptr);
    if (res.requires_grad()) {
        Node* self = res.node().get();
        Node* an = a.node().get();
        self->backward = [self, an]() {
            an->ensure_grad();
            const float g = self->grad[0];
            for (float& d : an->grad) d += g;
        };
    }
    return res;
}

Tensor softmax_cross_entropy(Tape& t, const Tensor& logits, const std::vector<int>& targets,
                             const std::vector<bool>& mask) {
    check_2d(logits, "softmax_cross_entropy");
    const int n = logits.shape()[0], vocab = logits.shape()[1];
    if (static_cast<int>(targets.size()) != n || static_cast<int>(mask.size()) != n) {
        throw DimensionError("softmax_cross_entropy: targets/mask length mismatch with " +
                             logits.value().shape_str());
    }
    int active = 0;
    for (int i = 0; i < n; ++i) {
        if (!mask[i]) continue;
        ++active;
        if (targets[i] < 0 || targets[i] >= vocab) {
            throw DimensionError("softmax_cross_entropy: target " + std::to_string(targets[i]) +
                                 " out of range for vocab " + std::to_string(vocab));
        }
    }
    if (active == 0) throw ValidationError("softmax_cross_entropy: degenerate loss, no position is masked in");

    // probs saved for backward
    auto probs = std::make_shared<std::vector<float>>(logits.value().data);
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        float* row = probs->data() + static_cast<size_t>(i) * vocab;
        kern::softmax_row(row, vocab, vocab);
        if (mask[i]) loss -= std::log(static_cast<double>(row[targets[i]]) + 1e-30);
    }
    loss /= active;
    Tensor res = t.record(TensorData::scalar(static_cast<float>(loss)), {logits.node()}, nullptr);
    if (res.requires_grad()) {
        Node* self = res.node().get();
        Node* ln = logits.node().get();
        auto tg = targets;
        auto mk = mask;
        self->backward = [self, ln, probs, tg, mk, n, vocab, active]() {
            ln->ensure_grad();
            const float g = self->grad[0] / static_cast<float>(active);
            for (int i = 0; i < n; ++i) {
                if (!mk[i]) continue;
                const float* p = probs->data() + static_cast<size_t>(i) * vocab;
                float* d = ln->grad.data() + static_cast<size_t>(i) * vocab;
                for (int j = 0; j < vocab; ++j) d[j] += g * p[j];
                d[tg[i]] -= g;
            }
        };
    }
    return res;
}

}  // namespace hybridlm::ad
