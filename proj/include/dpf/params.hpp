// Named learnable matrices with paired gradient accumulators.
#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "dpf/matrix.hpp"

namespace dpf {

struct ParamStore {
    struct Entry {
        Matrix value;
        Matrix grad;
    };

    // Ordered map keeps iteration (and therefore checkpoints and optimizer
    // traversal) deterministic.
    std::map<std::string, Entry> entries;

    Matrix& add(const std::string& name, Matrix init) {
        auto [it, fresh] = entries.emplace(name, Entry{});
        if (!fresh) throw std::runtime_error("duplicate parameter: " + name);
        it->second.value = std::move(init);
        it->second.grad = Matrix(it->second.value.rows, it->second.value.cols);
        return it->second.value;
    }

    Entry& get(const std::string& name) {
        auto it = entries.find(name);
        if (it == entries.end()) throw std::runtime_error("unknown parameter: " + name);
        return it->second;
    }

    void zero_grads() {
        for (auto& [name, e] : entries) e.grad.fill(0.0);
    }

    size_t total_entries() const {
        size_t n = 0;
        for (const auto& [name, e] : entries) n += e.value.size();
        return n;
    }
};

}  // namespace dpf
