#include "graphtcn/params.hpp"

#include <cstring>

#include "graphtcn/errors.hpp"

namespace gtcn {

Tensor& ParameterStore::add(const std::string& name, Tensor value) {
    if (contains(name)) throw ContractError("duplicate parameter name: " + name);
    value.set_requires_grad(true);
    index_[name] = entries_.size();
    entries_.push_back({name, std::move(value)});
    return entries_.back().value;
}

const Tensor& ParameterStore::get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ContractError("unknown parameter: " + name);
    return entries_[it->second].value;
}

Tensor& ParameterStore::get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ContractError("unknown parameter: " + name);
    return entries_[it->second].value;
}

std::size_t ParameterStore::total_values() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
}

void ParameterStore::zero_grad() {
    for (auto& e : entries_) e.value.zero_grad();
}

ParameterStore ParameterStore::deep_copy() const {
    ParameterStore out;
    for (const auto& e : entries_) out.add(e.name, e.value.detach());
    return out;
}

bool ParameterStore::bitwise_equal(const ParameterStore& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& a = entries_[i];
        const auto& b = other.entries_[i];
        if (a.name != b.name || a.value.shape() != b.value.shape()) return false;
        if (std::memcmp(a.value.data().data(), b.value.data().data(), a.value.size() * sizeof(double)) != 0)
            return false;
    }
    return true;
}

}  // namespace gtcn
