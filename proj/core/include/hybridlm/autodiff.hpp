#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "hybridlm/tensor.hpp"

namespace hybridlm::ad {

class Tape;

// One value in the compute graph. Parameters are long-lived nodes owned by a
// model; op outputs are owned by the tape of the step that created them.
struct Node {
    TensorData value;
    std::vector<float> grad;  // allocated iff requires_grad
    bool requires_grad = false;
    std::function<void()> backward;           // empty for leaves
    std::vector<std::shared_ptr<Node>> parents;  // pins upstream lifetime

    void ensure_grad() {
        if (grad.size() != value.numel()) grad.assign(value.numel(), 0.0f);
    }
    void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0f); }
};

using NodePtr = std::shared_ptr<Node>;

// Lightweight handle used by all op builders.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(NodePtr n) : node_(std::move(n)) {}

    const TensorData& value() const { return node_->value; }
    TensorData& mutable_value() { return node_->value; }
    const std::vector<int>& shape() const { return node_->value.shape; }
    const std::vector<float>& grad() const { return node_->grad; }
    bool requires_grad() const { return node_ && node_->requires_grad; }
    bool valid() const { return node_ != nullptr; }
    NodePtr node() const { return node_; }

    static Tensor leaf(TensorData v, bool requires_grad);

private:
    NodePtr node_;
};

// Ordered record of op outputs; creation order is the topological order, so
// backward() is a reverse sweep. backward() accumulates: calling it twice
// without resetting gradients doubles them.
class Tape {
public:
    Tensor record(TensorData value, std::vector<NodePtr> parents, std::function<void()> backward_fn);

    void backward(const Tensor& root);

    // drop recorded op outputs (leaves owned elsewhere survive)
    void reset() { nodes_.clear(); }
    size_t size() const { return nodes_.size(); }

private:
    std::vector<NodePtr> nodes_;
};

// ---- ops -------------------------------------------------------------
// All ops validate shapes and name both offending shapes in errors.

Tensor matmul(Tape& t, const Tensor& a, const Tensor& b);
// a [m x k] times b[n x k] transposed -> [m x n]
Tensor matmul_nt(Tape& t, const Tensor& a, const Tensor& b);
Tensor add(Tape& t, const Tensor& a, const Tensor& b);
// [m x n] + [n] broadcast over rows
Tensor add_rowvec(Tape& t, const Tensor& a, const Tensor& v);
Tensor mul(Tape& t, const Tensor& a, const Tensor& b);
Tensor scale(Tape& t, const Tensor& a, float s);
Tensor gelu(Tape& t, const Tensor& a);
// per-row softmax over columns [0, limits[i]); zero beyond
Tensor softmax_rows(Tape& t, const Tensor& a, std::vector<int> limits);
Tensor layer_norm(Tape& t, const Tensor& x, const Tensor& gain, const Tensor& bias, float eps = 1e-5f);
// gather rows of emb by token id; backward scatter-adds
Tensor embedding_rows(Tape& t, const Tensor& emb, const std::vector<int>& ids);
Tensor slice_rows(Tape& t, const Tensor& a, int row0, int nrows);
Tensor slice_cols(Tape& t, const Tensor& a, int col0, int ncols);
Tensor concat_rows(Tape& t, const std::vector<Tensor>& parts);
Tensor concat_cols(Tape& t, const std::vector<Tensor>& parts);
Tensor sum(Tape& t, const Tensor& a);

// Mean negative log-probability over positions where mask is true.
// logits [n x V], targets in [0, V). Throws on an all-false mask.
Tensor softmax_cross_entropy(Tape& t, const Tensor& logits, const std::vector<int>& targets,
                             const std::vector<bool>& mask);

}  // namespace hybridlm::ad
