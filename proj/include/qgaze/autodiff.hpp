// autodiff.hpp
// Minimal reverse-mode automatic differentiation on a tape of vector-valued
// nodes. Covers exactly the primitives the discriminator networks need:
// matrix-vector product, add, elementwise sigmoid/tanh/log, 1-x, clamp,
// hadamard product, concatenation and (inverted) dropout.
//
// Nodes are appended in evaluation order, so creation order is a
// topological order and the reverse sweep walks nodes back to front.
// Values, adjoints and dropout masks live in flat arenas that reset()
// reuses, keeping per-sample tapes allocation-free in steady state.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "qgaze/errors.hpp"
#include "qgaze/rng.hpp"

namespace qgaze {

class Tape {
public:
    using NodeId = std::uint32_t;
    static constexpr NodeId npos = static_cast<NodeId>(-1);

    NodeId input(std::span<const double> v) {
        NodeId id = new_node(Op::Input, npos, npos, v.size());
        copy_in(id, v);
        return id;
    }

    NodeId zeros(std::size_t len) {
        NodeId id = new_node(Op::Input, npos, npos, len);
        return id; // arena slots are value-initialized to 0
    }

    // A leaf that maps onto params[offset, offset + len); backward()
    // accumulates its adjoint into the flat gradient at the same offset.
    NodeId param(std::span<const double> params, std::size_t offset, std::size_t len) {
        if (offset + len > params.size()) {
            throw config_error("tape param slice out of range");
        }
        NodeId id = new_node(Op::Param, npos, npos, len);
        nodes_[id].param_offset = offset;
        copy_in(id, params.subspan(offset, len));
        return id;
    }

    // out = W x with W stored row-major as a length rows*cols node.
    NodeId matvec(NodeId w, std::size_t rows, std::size_t cols, NodeId x) {
        check(w);
        check(x);
        if (nodes_[w].len != rows * cols || nodes_[x].len != cols) {
            throw config_error("matvec dimension mismatch");
        }
        NodeId id = new_node(Op::MatVec, w, x, rows);
        nodes_[id].rows = static_cast<std::uint32_t>(rows);
        nodes_[id].cols = static_cast<std::uint32_t>(cols);
        const double* wp = val_ptr(w);
        const double* xp = val_ptr(x);
        double* out = val_ptr(id);
        for (std::size_t r = 0; r < rows; ++r) {
            double acc = 0.0;
            const double* wrow = wp + r * cols;
            for (std::size_t c = 0; c < cols; ++c) acc += wrow[c] * xp[c];
            out[r] = acc;
        }
        return id;
    }

    NodeId add(NodeId a, NodeId b) {
        check_same(a, b);
        NodeId id = new_node(Op::Add, a, b, nodes_[a].len);
        const double* ap = val_ptr(a);
        const double* bp = val_ptr(b);
        double* out = val_ptr(id);
        for (std::size_t i = 0; i < nodes_[id].len; ++i) out[i] = ap[i] + bp[i];
        return id;
    }

    NodeId hadamard(NodeId a, NodeId b) {
        check_same(a, b);
        NodeId id = new_node(Op::Hadamard, a, b, nodes_[a].len);
        const double* ap = val_ptr(a);
        const double* bp = val_ptr(b);
        double* out = val_ptr(id);
        for (std::size_t i = 0; i < nodes_[id].len; ++i) out[i] = ap[i] * bp[i];
        return id;
    }

    NodeId concat(NodeId a, NodeId b) {
        check(a);
        check(b);
        NodeId id = new_node(Op::Concat, a, b, nodes_[a].len + nodes_[b].len);
        double* out = val_ptr(id);
        const double* ap = val_ptr(a);
        const double* bp = val_ptr(b);
        for (std::size_t i = 0; i < nodes_[a].len; ++i) out[i] = ap[i];
        for (std::size_t i = 0; i < nodes_[b].len; ++i) out[nodes_[a].len + i] = bp[i];
        return id;
    }

    NodeId sigmoid(NodeId a) {
        return unary(Op::Sigmoid, a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    }

    NodeId tanh(NodeId a) {
        return unary(Op::Tanh, a, [](double x) { return std::tanh(x); });
    }

    NodeId log(NodeId a) {
        return unary(Op::Log, a, [](double x) { return std::log(x); });
    }

    NodeId one_minus(NodeId a) {
        return unary(Op::OneMinus, a, [](double x) { return 1.0 - x; });
    }

    NodeId clamp(NodeId a, double lo, double hi) {
        check(a);
        NodeId id = new_node(Op::Clamp, a, npos, nodes_[a].len);
        nodes_[id].lo = lo;
        nodes_[id].hi = hi;
        const double* ap = val_ptr(a);
        double* out = val_ptr(id);
        for (std::size_t i = 0; i < nodes_[id].len; ++i) {
            out[i] = ap[i] < lo ? lo : (ap[i] > hi ? hi : ap[i]);
        }
        return id;
    }

    // Inverted dropout: keeps each entry with probability 1-rate and
    // scales survivors by 1/(1-rate). rate = 0 is the identity.
    NodeId dropout(NodeId a, double rate, Rng& rng) {
        check(a);
        if (!(rate >= 0.0 && rate < 1.0)) {
            throw config_error("dropout rate must be in [0, 1)");
        }
        NodeId id = new_node(Op::Dropout, a, npos, nodes_[a].len);
        nodes_[id].aux_off = static_cast<std::uint32_t>(aux_.size());
        const double keep_scale = 1.0 / (1.0 - rate);
        const double* ap = val_ptr(a);
        double* out = val_ptr(id);
        for (std::size_t i = 0; i < nodes_[id].len; ++i) {
            const double mask = (rate > 0.0 && rng.uniform() < rate) ? 0.0 : keep_scale;
            aux_.push_back(mask);
            out[i] = ap[i] * mask;
        }
        return id;
    }

    std::span<const double> value(NodeId id) const {
        return {values_.data() + nodes_[id].val_off, nodes_[id].len};
    }

    double scalar(NodeId id) const {
        if (nodes_[id].len != 1) {
            throw config_error("scalar() on a non-scalar node");
        }
        return values_[nodes_[id].val_off];
    }

    void set_output(NodeId id) {
        check(id);
        output_ = id;
    }
    NodeId output_node() const { return output_; }
    std::size_t node_count() const { return nodes_.size(); }
    bool consumed() const { return consumed_; }

    // Reverse sweep from the designated output seeded with seed_adjoint.
    // Returns d(output)/d(params) as a flat array of param_size entries.
    // A tape can only be swept once; reset() rearms it.
    std::vector<double> backward(double seed_adjoint, std::size_t param_size) {
        if (consumed_) {
            throw state_error("tape already consumed by a previous backward sweep");
        }
        if (output_ == npos) {
            throw state_error("tape has no output node");
        }
        if (nodes_[output_].len != 1) {
            throw config_error("backward requires a scalar output node");
        }
        consumed_ = true;
        adjoints_.assign(values_.size(), 0.0);
        adjoints_[nodes_[output_].val_off] = seed_adjoint;

        std::vector<double> grads(param_size, 0.0);
        for (std::size_t k = nodes_.size(); k-- > 0;) {
            const Node& node = nodes_[k];
            const double* out_adj = adjoints_.data() + node.val_off;
            switch (node.op) {
            case Op::Input:
                break;
            case Op::Param:
                for (std::size_t i = 0; i < node.len; ++i) {
                    grads[node.param_offset + i] += out_adj[i];
                }
                break;
            case Op::MatVec: {
                const double* wp = values_.data() + nodes_[node.a].val_off;
                const double* xp = values_.data() + nodes_[node.b].val_off;
                double* wa = adjoints_.data() + nodes_[node.a].val_off;
                double* xa = adjoints_.data() + nodes_[node.b].val_off;
                for (std::size_t r = 0; r < node.rows; ++r) {
                    const double g = out_adj[r];
                    if (g == 0.0) continue;
                    const double* wrow = wp + r * node.cols;
                    double* warow = wa + r * node.cols;
                    for (std::size_t c = 0; c < node.cols; ++c) {
                        warow[c] += g * xp[c];
                        xa[c] += g * wrow[c];
                    }
                }
                break;
            }
            case Op::Add: {
                double* aa = adjoints_.data() + nodes_[node.a].val_off;
                double* ba = adjoints_.data() + nodes_[node.b].val_off;
                for (std::size_t i = 0; i < node.len; ++i) {
                    aa[i] += out_adj[i];
                    ba[i] += out_adj[i];
                }
                break;
            }
            case Op::Hadamard: {
                const double* ap = values_.data() + nodes_[node.a].val_off;
                const double* bp = values_.data() + nodes_[node.b].val_off;
                double* aa = adjoints_.data() + nodes_[node.a].val_off;
                double* ba = adjoints_.data() + nodes_[node.b].val_off;
                for (std::size_t i = 0; i < node.len; ++i) {
                    aa[i] += out_adj[i] * bp[i];
                    ba[i] += out_adj[i] * ap[i];
                }
                break;
            }
            case Op::Concat: {
                double* aa = adjoints_.data() + nodes_[node.a].val_off;
                double* ba = adjoints_.data() + nodes_[node.b].val_off;
                const std::size_t alen = nodes_[node.a].len;
                for (std::size_t i = 0; i < alen; ++i) aa[i] += out_adj[i];
                for (std::size_t i = 0; i < nodes_[node.b].len; ++i) ba[i] += out_adj[alen + i];
                break;
            }
            case Op::Sigmoid: {
                const double* out = values_.data() + node.val_off;
                double* aa = adjoints_.data() + nodes_[node.a].val_off;
                for (std::size_t i = 0; i < node.len; ++i) {
                    aa[i] += out_adj[i] * out[i] * (1.0 - out[i]);
                }
                break;
            }
            case Op::Tanh: {
                const double* out = values_.data() + node.val_off;
                double* aa = adjoints_.data() + nodes_[node.a].val_off;
                for (std::size_t i = 0; i < node.len; ++i) {
                    aa[i] += out_adj[i] * (1.0 - out[i] * out[i]);
                }
                break;
            }
            case Op::Log: {
                const double* in = values_.data() + nodes_[node.a].val_off;
                double* aa = adjoints_.data() + nodes_[node.a].val_off;
                for (std::size_t i = 0; i < node.len; ++i) {
                    aa[i] += out_adj[i] / in[i];
                }
                break;
            }
            case Op::OneMinus: {
                double* aa = adjoints_.data() + nodes_[node.a].val_off;
                for (std::size_t i = 0; i < node.len; ++i) aa[i] -= out_adj[i];
                break;
            }
            case Op::Clamp: {
                const double* in = values_.data() + nodes_[node.a].val_off;
                double* aa = adjoints_.data() + nodes_[node.a].val_off;
                for (std::size_t i = 0; i < node.len; ++i) {
                    if (in[i] >= node.lo && in[i] <= node.hi) aa[i] += out_adj[i];
                }
                break;
            }
            case Op::Dropout: {
                const double* mask = aux_.data() + node.aux_off;
                double* aa = adjoints_.data() + nodes_[node.a].val_off;
                for (std::size_t i = 0; i < node.len; ++i) aa[i] += out_adj[i] * mask[i];
                break;
            }
            }
        }
        return grads;
    }

    // Adjoint of any node, valid after backward(). Used for input
    // gradients (gradient penalty).
    std::span<const double> adjoint(NodeId id) const {
        if (!consumed_) {
            throw state_error("adjoints are only available after backward()");
        }
        return {adjoints_.data() + nodes_[id].val_off, nodes_[id].len};
    }

    void reset() {
        nodes_.clear();
        values_.clear();
        adjoints_.clear();
        aux_.clear();
        output_ = npos;
        consumed_ = false;
    }

private:
    enum class Op : std::uint8_t {
        Input, Param, MatVec, Add, Hadamard, Concat,
        Sigmoid, Tanh, Log, OneMinus, Clamp, Dropout
    };

    struct Node {
        Op op;
        NodeId a = npos, b = npos;
        std::uint32_t val_off = 0;
        std::uint32_t len = 0;
        std::uint32_t rows = 0, cols = 0;
        std::uint32_t aux_off = 0;
        std::size_t param_offset = 0;
        double lo = 0.0, hi = 0.0;
    };

    NodeId new_node(Op op, NodeId a, NodeId b, std::size_t len) {
        Node node;
        node.op = op;
        node.a = a;
        node.b = b;
        node.val_off = static_cast<std::uint32_t>(values_.size());
        node.len = static_cast<std::uint32_t>(len);
        values_.resize(values_.size() + len, 0.0);
        nodes_.push_back(node);
        return static_cast<NodeId>(nodes_.size() - 1);
    }

    template <class F>
    NodeId unary(Op op, NodeId a, F f) {
        check(a);
        NodeId id = new_node(op, a, npos, nodes_[a].len);
        const double* ap = val_ptr(a);
        double* out = val_ptr(id);
        for (std::size_t i = 0; i < nodes_[id].len; ++i) out[i] = f(ap[i]);
        return id;
    }

    void copy_in(NodeId id, std::span<const double> v) {
        double* out = val_ptr(id);
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
    }

    void check(NodeId id) const {
        if (id >= nodes_.size()) {
            throw config_error("tape node id out of range");
        }
    }

    void check_same(NodeId a, NodeId b) const {
        check(a);
        check(b);
        if (nodes_[a].len != nodes_[b].len) {
            throw config_error("tape operands have different lengths");
        }
    }

    double* val_ptr(NodeId id) { return values_.data() + nodes_[id].val_off; }
    const double* val_ptr(NodeId id) const { return values_.data() + nodes_[id].val_off; }

    std::vector<Node> nodes_;
    std::vector<double> values_;
    std::vector<double> adjoints_;
    std::vector<double> aux_;
    NodeId output_ = npos;
    bool consumed_ = false;
};

} // namespace qgaze
