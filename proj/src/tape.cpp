#include "dpf/tape.hpp"

#include <algorithm>
#include <cmath>

namespace dpf {

int Tape::push(Matrix v, std::function<void(Tape&, const Node&)> back) {
    Node n;
    n.value = std::move(v);
    n.grad = Matrix(n.value.rows, n.value.cols);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

int Tape::leaf(Matrix v) { return push(std::move(v), nullptr); }
int Tape::constant(Matrix v) { return push(std::move(v), nullptr); }

int Tape::param(ParamStore& ps, const std::string& name) {
    auto& e = ps.get(name);
    int id = push(e.value, nullptr);
    nodes_[id].param = &e;
    return id;
}

int Tape::matmul(int a, int b) {
    Matrix v = dpf::matmul(value(a), value(b));
    return push(std::move(v), [a, b](Tape& t, const Node& n) {
        // dA += G * B^T ; dB += A^T * G
        Matrix da = matmul_nt(n.grad, t.value(b));
        Matrix db = matmul_tn(t.value(a), n.grad);
        Matrix& ga = t.grad_ref(a);
        for (size_t i = 0; i < ga.size(); ++i) ga.data[i] += da.data[i];
        Matrix& gb = t.grad_ref(b);
        for (size_t i = 0; i < gb.size(); ++i) gb.data[i] += db.data[i];
    });
}

int Tape::add(int a, int b) {
    check_same_shape(value(a), value(b), "add");
    Matrix v = value(a);
    const Matrix& vb = value(b);
    for (size_t i = 0; i < v.size(); ++i) v.data[i] += vb.data[i];
    return push(std::move(v), [a, b](Tape& t, const Node& n) {
        Matrix& ga = t.grad_ref(a);
        Matrix& gb = t.grad_ref(b);
        for (size_t i = 0; i < n.grad.size(); ++i) {
            ga.data[i] += n.grad.data[i];
            gb.data[i] += n.grad.data[i];
        }
    });
}

int Tape::sub(int a, int b) {
    check_same_shape(value(a), value(b), "sub");
    Matrix v = value(a);
    const Matrix& vb = value(b);
    for (size_t i = 0; i < v.size(); ++i) v.data[i] -= vb.data[i];
    return push(std::move(v), [a, b](Tape& t, const Node& n) {
        Matrix& ga = t.grad_ref(a);
        Matrix& gb = t.grad_ref(b);
        for (size_t i = 0; i < n.grad.size(); ++i) {
            ga.data[i] += n.grad.data[i];
            gb.data[i] -= n.grad.data[i];
        }
    });
}

int Tape::mul(int a, int b) {
    check_same_shape(value(a), value(b), "mul");
    Matrix v = value(a);
    const Matrix& vb = value(b);
    for (size_t i = 0; i < v.size(); ++i) v.data[i] *= vb.data[i];
    return push(std::move(v), [a, b](Tape& t, const Node& n) {
        const Matrix& va = t.value(a);
        const Matrix& vb2 = t.value(b);
        Matrix& ga = t.grad_ref(a);
        Matrix& gb = t.grad_ref(b);
        for (size_t i = 0; i < n.grad.size(); ++i) {
            ga.data[i] += n.grad.data[i] * vb2.data[i];
            gb.data[i] += n.grad.data[i] * va.data[i];
        }
    });
}

int Tape::scale(int a, double s) {
    Matrix v = value(a);
    for (double& x : v.data) x *= s;
    return push(std::move(v), [a, s](Tape& t, const Node& n) {
        Matrix& ga = t.grad_ref(a);
        for (size_t i = 0; i < n.grad.size(); ++i) ga.data[i] += s * n.grad.data[i];
    });
}

int Tape::shift(int a, double s) {
    Matrix v = value(a);
    for (double& x : v.data) x += s;
    return push(std::move(v), [a](Tape& t, const Node& n) {
        Matrix& ga = t.grad_ref(a);
        for (size_t i = 0; i < n.grad.size(); ++i) ga.data[i] += n.grad.data[i];
    });
}

int Tape::activation(int a, Act kind) {
    Matrix v = value(a);
    switch (kind) {
        case Act::Relu:
            for (double& x : v.data) x = x > 0.0 ? x : 0.0;
            break;
        case Act::Tanh:
            for (double& x : v.data) x = std::tanh(x);
            break;
        case Act::Softplus:
            // log(1 + e^x), overflow-safe
            for (double& x : v.data)
                x = x > 30.0 ? x : std::log1p(std::exp(x));
            break;
    }
    return push(std::move(v), [a, kind](Tape& t, const Node& n) {
        const Matrix& va = t.value(a);
        Matrix& ga = t.grad_ref(a);
        for (size_t i = 0; i < n.grad.size(); ++i) {
            double d = 0.0;
            switch (kind) {
                case Act::Relu:
                    d = va.data[i] > 0.0 ? 1.0 : 0.0;
                    break;
                case Act::Tanh: {
                    const double y = n.value.data[i];
                    d = 1.0 - y * y;
                    break;
                }
                case Act::Softplus:
                    d = 1.0 / (1.0 + std::exp(-va.data[i]));
                    break;
            }
            ga.data[i] += d * n.grad.data[i];
        }
    });
}

int Tape::exp_(int a) {
    Matrix v = value(a);
    for (double& x : v.data) x = std::exp(x);
    return push(std::move(v), [a](Tape& t, const Node& n) {
        Matrix& ga = t.grad_ref(a);
        for (size_t i = 0; i < n.grad.size(); ++i)
            ga.data[i] += n.value.data[i] * n.grad.data[i];
    });
}

int Tape::clamp(int a, double lo, double hi) {
    Matrix v = value(a);
    for (double& x : v.data) {
        if (x < lo) {
            x = lo;
            ++clamp_events_;
        } else if (x > hi) {
            x = hi;
            ++clamp_events_;
        }
    }
    return push(std::move(v), [a, lo, hi](Tape& t, const Node& n) {
        const Matrix& va = t.value(a);
        Matrix& ga = t.grad_ref(a);
        for (size_t i = 0; i < n.grad.size(); ++i)
            if (va.data[i] >= lo && va.data[i] <= hi) ga.data[i] += n.grad.data[i];
    });
}

int Tape::add_row(int a, int r) {
    const Matrix& va = value(a);
    const Matrix& vr = value(r);
    if (vr.rows != 1 || vr.cols != va.cols)
        throw DimensionError("add_row: " + va.shape_str() + " + " + vr.shape_str());
    Matrix v = va;
    for (int i = 0; i < v.rows; ++i)
        for (int j = 0; j < v.cols; ++j) v.at(i, j) += vr.at(0, j);
    return push(std::move(v), [a, r](Tape& t, const Node& n) {
        Matrix& ga = t.grad_ref(a);
        Matrix& gr = t.grad_ref(r);
        for (int i = 0; i < n.grad.rows; ++i)
            for (int j = 0; j < n.grad.cols; ++j) {
                ga.at(i, j) += n.grad.at(i, j);
                gr.at(0, j) += n.grad.at(i, j);
            }
    });
}

int Tape::mul_row(int a, int r) {
    const Matrix& va = value(a);
    const Matrix& vr = value(r);
    if (vr.rows != 1 || vr.cols != va.cols)
        throw DimensionError("mul_row: " + va.shape_str() + " * " + vr.shape_str());
    Matrix v = va;
    for (int i = 0; i < v.rows; ++i)
        for (int j = 0; j < v.cols; ++j) v.at(i, j) *= vr.at(0, j);
    return push(std::move(v), [a, r](Tape& t, const Node& n) {
        const Matrix& va2 = t.value(a);
        const Matrix& vr2 = t.value(r);
        Matrix& ga = t.grad_ref(a);
        Matrix& gr = t.grad_ref(r);
        for (int i = 0; i < n.grad.rows; ++i)
            for (int j = 0; j < n.grad.cols; ++j) {
                ga.at(i, j) += n.grad.at(i, j) * vr2.at(0, j);
                gr.at(0, j) += n.grad.at(i, j) * va2.at(i, j);
            }
    });
}

int Tape::tile_rows(int a, int n) {
    const Matrix& va = value(a);
    if (va.rows != 1) throw DimensionError("tile_rows: expected 1 x c, got " + va.shape_str());
    Matrix v(n, va.cols);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < va.cols; ++j) v.at(i, j) = va.at(0, j);
    return push(std::move(v), [a](Tape& t, const Node& nd) {
        Matrix& ga = t.grad_ref(a);
        for (int i = 0; i < nd.grad.rows; ++i)
            for (int j = 0; j < nd.grad.cols; ++j) ga.at(0, j) += nd.grad.at(i, j);
    });
}

int Tape::row_sum(int a) {
    const Matrix& va = value(a);
    Matrix v(va.rows, 1);
    for (int i = 0; i < va.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < va.cols; ++j) s += va.at(i, j);
        v.at(i, 0) = s;
    }
    return push(std::move(v), [a](Tape& t, const Node& n) {
        Matrix& ga = t.grad_ref(a);
        for (int i = 0; i < ga.rows; ++i)
            for (int j = 0; j < ga.cols; ++j) ga.at(i, j) += n.grad.at(i, 0);
    });
}

int Tape::col_sum(int a) {
    const Matrix& va = value(a);
    Matrix v(1, va.cols);
    for (int i = 0; i < va.rows; ++i)
        for (int j = 0; j < va.cols; ++j) v.at(0, j) += va.at(i, j);
    return push(std::move(v), [a](Tape& t, const Node& n) {
        Matrix& ga = t.grad_ref(a);
        for (int i = 0; i < ga.rows; ++i)
            for (int j = 0; j < ga.cols; ++j) ga.at(i, j) += n.grad.at(0, j);
    });
}

int Tape::sum(int a) {
    const Matrix& va = value(a);
    double s = 0.0;
    for (double x : va.data) s += x;
    Matrix v(1, 1);
    v.at(0, 0) = s;
    return push(std::move(v), [a](Tape& t, const Node& n) {
        Matrix& ga = t.grad_ref(a);
        const double g = n.grad.at(0, 0);
        for (double& x : ga.data) x += g;
    });
}

int Tape::gather_cols(int a, std::vector<int> idx) {
    const Matrix& va = value(a);
    Matrix v(va.rows, static_cast<int>(idx.size()));
    for (int i = 0; i < va.rows; ++i)
        for (size_t j = 0; j < idx.size(); ++j) v.at(i, static_cast<int>(j)) = va.at(i, idx[j]);
    return push(std::move(v), [a, idx = std::move(idx)](Tape& t, const Node& n) {
        Matrix& ga = t.grad_ref(a);
        for (int i = 0; i < n.grad.rows; ++i)
            for (size_t j = 0; j < idx.size(); ++j)
                ga.at(i, idx[j]) += n.grad.at(i, static_cast<int>(j));
    });
}

int Tape::combine_cols(int a, std::vector<int> idx_a, int b, std::vector<int> idx_b,
                       int total) {
    const Matrix& va = value(a);
    const Matrix& vb = value(b);
    if (va.rows != vb.rows)
        throw DimensionError("combine_cols: " + va.shape_str() + " / " + vb.shape_str());
    Matrix v(va.rows, total);
    for (int i = 0; i < va.rows; ++i) {
        for (size_t j = 0; j < idx_a.size(); ++j) v.at(i, idx_a[j]) = va.at(i, static_cast<int>(j));
        for (size_t j = 0; j < idx_b.size(); ++j) v.at(i, idx_b[j]) = vb.at(i, static_cast<int>(j));
    }
    return push(std::move(v), [a, b, ia = std::move(idx_a), ib = std::move(idx_b)](
                                  Tape& t, const Node& n) {
        Matrix& ga = t.grad_ref(a);
        Matrix& gb = t.grad_ref(b);
        for (int i = 0; i < n.grad.rows; ++i) {
            for (size_t j = 0; j < ia.size(); ++j)
                ga.at(i, static_cast<int>(j)) += n.grad.at(i, ia[j]);
            for (size_t j = 0; j < ib.size(); ++j)
                gb.at(i, static_cast<int>(j)) += n.grad.at(i, ib[j]);
        }
    });
}

int Tape::colwise_max(int a) {
    const Matrix& va = value(a);
    Matrix v(1, va.cols);
    std::vector<int> argmax(va.cols, 0);
    for (int j = 0; j < va.cols; ++j) {
        double best = va.at(0, j);
        for (int i = 1; i < va.rows; ++i)
            if (va.at(i, j) > best) {  // strict: first maximal row wins
                best = va.at(i, j);
                argmax[j] = i;
            }
        v.at(0, j) = best;
    }
    return push(std::move(v), [a, argmax = std::move(argmax)](Tape& t, const Node& n) {
        Matrix& ga = t.grad_ref(a);
        for (int j = 0; j < n.grad.cols; ++j) ga.at(argmax[j], j) += n.grad.at(0, j);
    });
}

void Tape::backward(int out) {
    if (value(out).rows != 1 || value(out).cols != 1)
        throw DimensionError("backward: seed must be 1x1, got " + value(out).shape_str());
    nodes_[out].grad.at(0, 0) = 1.0;
    for (int id = out; id >= 0; --id) {
        const Node& n = nodes_[id];
        if (n.back) n.back(*this, n);
    }
    for (auto& n : nodes_) {
        if (!n.param) continue;
        for (size_t i = 0; i < n.grad.size(); ++i) n.param->grad.data[i] += n.grad.data[i];
    }
}

}  // namespace dpf
