#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "graphtcn/tensor.hpp"

namespace gtcn {

/// Named learnable tensors of a model, in registration order.
///
/// Order is part of the checkpoint format, so registration must be deterministic.
class ParameterStore {
   public:
    /// Registers a new leaf parameter; the tensor is marked requires_grad.
    Tensor& add(const std::string& name, Tensor value);

    bool contains(const std::string& name) const { return index_.count(name) != 0; }
    const Tensor& get(const std::string& name) const;
    Tensor& get(const std::string& name);

    std::size_t size() const { return entries_.size(); }
    std::size_t total_values() const;

    struct Entry {
        std::string name;
        Tensor value;
    };
    auto begin() { return entries_.begin(); }
    auto end() { return entries_.end(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

    void zero_grad();
    /// Independent copy of every value (no shared storage, no gradients).
    ParameterStore deep_copy() const;
    /// True when both stores have the same names, shapes, and bit-identical values.
    bool bitwise_equal(const ParameterStore& other) const;

   private:
    std::vector<Entry> entries_;
    std::map<std::string, std::size_t> index_;
};

}  // namespace gtcn
