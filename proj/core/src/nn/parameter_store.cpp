#include "xrn/nn/parameter_store.hpp"

#include "xrn/error.hpp"

namespace xrn::nn {

template <typename T>
void ParameterStore<T>::add(std::string name, BasicVar<T> var) {
  if (index_.count(name) || name.empty()) throw ConfigError("parameter name '" + name + "' is empty or already registered");
  if (!var.defined() || !var.is_leaf()) throw ConfigError("parameter '" + name + "' must be a leaf variable");
  index_.emplace(name, entries_.size());
  entries_.push_back({std::move(name), std::move(var)});
}

template <typename T>
void ParameterStore<T>::add_buffer(std::string prefix, std::shared_ptr<BatchNormStats<T>> stats) {
  for (const auto& b : buffers_) {
    if (b.name == prefix) throw ConfigError("buffer '" + prefix + "' already registered");
  }
  buffers_.push_back({std::move(prefix), std::move(stats)});
}

template <typename T>
void ParameterStore<T>::replace(const std::string& name, BasicVar<T> var) {
  auto& slot = at(name);
  if (!var.defined() || !var.is_leaf()) throw ConfigError("replacement for '" + name + "' must be a leaf variable");
  slot = std::move(var);
  if (is_frozen(name)) slot.set_requires_grad(false);
}

template <typename T>
BasicVar<T>& ParameterStore<T>::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("no parameter named '" + name + "'");
  return entries_[it->second].var;
}

template <typename T>
const BasicVar<T>& ParameterStore<T>::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("no parameter named '" + name + "'");
  return entries_[it->second].var;
}

template <typename T>
std::size_t ParameterStore<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.var.value().size();
  return n;
}

template <typename T>
void ParameterStore<T>::freeze(const std::string& name) {
  at(name).set_requires_grad(false);
  frozen_.insert(name);
}

template <typename T>
void ParameterStore<T>::unfreeze(const std::string& name) {
  at(name).set_requires_grad(true);
  frozen_.erase(name);
}

template <typename T>
void ParameterStore<T>::zero_grad() {
  for (auto& e : entries_) e.var.zero_grad();
}

template class ParameterStore<float>;
template class ParameterStore<double>;

}  // namespace xrn::nn
