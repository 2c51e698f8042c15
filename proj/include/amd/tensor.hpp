#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

namespace amd {

// Dense row-major tensor of doubles.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;

    static Tensor zeros(std::vector<int> shape) {
        Tensor t;
        size_t n = 1;
        for (int d : shape) n *= static_cast<size_t>(d);
        t.shape = std::move(shape);
        t.data.assign(n, 0.0);
        return t;
    }

    size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }
    int dim(size_t i) const { return shape[i]; }

    double& operator[](size_t i) { return data[i]; }
    double operator[](size_t i) const { return data[i]; }
};

}  // namespace amd
