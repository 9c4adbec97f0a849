#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "xrn/autodiff.hpp"
#include "xrn/ops.hpp"

namespace xrn::nn {

/// Trainable tensors keyed by hierarchical name in registration order, plus
/// the batch-norm running statistics that travel with them in checkpoints.
template <typename T>
class ParameterStore {
 public:
  struct Entry {
    std::string name;
    BasicVar<T> var;
  };
  struct Buffer {
    std::string name;  // owning layer prefix, e.g. stage1.block0.bn1
    std::shared_ptr<BatchNormStats<T>> stats;
  };

  void add(std::string name, BasicVar<T> var);
  void add_buffer(std::string prefix, std::shared_ptr<BatchNormStats<T>> stats);
  /// Swaps the tensor behind an existing name (head replacement).
  void replace(const std::string& name, BasicVar<T> var);

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  BasicVar<T>& at(const std::string& name);
  const BasicVar<T>& at(const std::string& name) const;

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  const std::vector<Buffer>& buffers() const noexcept { return buffers_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t scalar_count() const;

  void freeze(const std::string& name);
  void unfreeze(const std::string& name);
  bool is_frozen(const std::string& name) const { return frozen_.count(name) != 0; }
  const std::set<std::string>& frozen() const noexcept { return frozen_; }

  void zero_grad();

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
  std::vector<Buffer> buffers_;
  std::set<std::string> frozen_;
};

}  // namespace xrn::nn
