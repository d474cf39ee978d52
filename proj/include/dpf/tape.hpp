// Reverse-mode differentiation over a flat tape of matrix primitives.
// The model is a fixed feed-forward pipeline, so a replayable tape is the
// whole contract: record forward ops, traverse once in reverse.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dpf/matrix.hpp"
#include "dpf/params.hpp"

namespace dpf {

enum class Act { Relu, Tanh, Softplus };

class Tape {
public:
    // Leaf carrying a value we may want gradients for (inputs, constants fed
    // to differentiable positions).
    int leaf(Matrix v);
    // Leaf that never needs a gradient (noise draws, fixed data).
    int constant(Matrix v);
    // Leaf bound to a ParamStore entry; backward() accumulates into its grad.
    int param(ParamStore& ps, const std::string& name);

    int matmul(int a, int b);
    int add(int a, int b);
    int sub(int a, int b);
    int mul(int a, int b);          // elementwise
    int scale(int a, double s);
    int shift(int a, double s);     // a + s
    int activation(int a, Act kind);
    int exp_(int a);
    int clamp(int a, double lo, double hi);  // pass-through grad inside range
    int add_row(int a, int r);      // a[n x c] + broadcast r[1 x c]
    int mul_row(int a, int r);      // a[n x c] * broadcast r[1 x c]
    int tile_rows(int a, int n);    // repeat a[1 x c] n times
    int row_sum(int a);             // n x c -> n x 1
    int col_sum(int a);             // n x c -> 1 x c
    int sum(int a);                 // n x c -> 1 x 1
    int gather_cols(int a, std::vector<int> idx);
    // Place columns of a and b into a (n x total) output: a's columns go to
    // idx_a, b's to idx_b. Together they must cover 0..total-1.
    int combine_cols(int a, std::vector<int> idx_a, int b, std::vector<int> idx_b,
                     int total);
    int colwise_max(int a);         // n x c -> 1 x c, first maximal row wins

    const Matrix& value(int id) const { return nodes_[id].value; }
    const Matrix& grad(int id) const { return nodes_[id].grad; }

    // Seeds d(out)/d(out) = 1 (out must be 1x1) and runs all adjoints, then
    // flushes parameter-leaf gradients into their ParamStore entries.
    void backward(int out);

    size_t size() const { return nodes_.size(); }
    int clamp_events() const { return clamp_events_; }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        std::function<void(Tape&, const Node&)> back;  // null for leaves
        ParamStore::Entry* param = nullptr;
    };

    int push(Matrix v, std::function<void(Tape&, const Node&)> back);
    Matrix& grad_ref(int id) { return nodes_[id].grad; }

    std::vector<Node> nodes_;
    int clamp_events_ = 0;
};

}  // namespace dpf
