#pragma once

#include <map>
#include <span>
#include <string>

#include "sstd/tensor.hpp"

namespace sstd {

/// Named parameter collection. Biases are stored as (1, C, 1, 1) tensors so
/// every parameter shares one container, one persistence format and one
/// optimizer path. Iteration order is the (deterministic) name order.
template <typename T>
struct ModelParamsT {
    std::map<std::string, TensorT<T>> tensors;

    bool has(const std::string& name) const { return tensors.count(name) != 0; }

    TensorT<T>& at(const std::string& name) {
        auto it = tensors.find(name);
        require(it != tensors.end(), "missing parameter tensor '" + name + "'");
        return it->second;
    }

    const TensorT<T>& at(const std::string& name) const {
        auto it = tensors.find(name);
        require(it != tensors.end(), "missing parameter tensor '" + name + "'");
        return it->second;
    }

    TensorT<T>& add(const std::string& name, TensorT<T> t) {
        require(!has(name), "duplicate parameter tensor '" + name + "'");
        auto [it, ok] = tensors.emplace(name, std::move(t));
        it->second.ensure_grad();
        return it->second;
    }

    std::span<const T> bias(const std::string& name) const {
        const TensorT<T>& t = at(name);
        return {t.data.data(), t.data.size()};
    }

    std::span<T> bias_grad(const std::string& name) {
        TensorT<T>& t = at(name);
        return {t.grad.data(), t.grad.size()};
    }

    void zero_grads() {
        for (auto& [name, t] : tensors) t.zero_grad();
    }

    template <typename U>
    ModelParamsT<U> cast() const {
        ModelParamsT<U> out;
        for (const auto& [name, t] : tensors) out.add(name, t.template cast<U>());
        return out;
    }
};

using ModelParams = ModelParamsT<float>;

} // namespace sstd
