#pragma once

#include <string>
#include <vector>

#include "adrisk/rng.hpp"
#include "adrisk/tape.hpp"
#include "adrisk/tensor.hpp"

namespace adrisk::ad {

// Ordered, named collection of parameter tensors. The order is the
// checkpoint layout and the alignment contract for optimizer state.
struct ParamStore {
  std::vector<std::string> names;
  std::vector<Tensor> values;

  int add(std::string name, Tensor t);
  int index_of(const std::string& name) const;  // -1 when absent
  std::size_t count() const { return values.size(); }
  std::int64_t scalar_count() const;
};

// Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
Tensor uniform_init(int rows, int cols, int fan_in, rng::Engine& eng);

// Records every stored tensor as a tape leaf, in store order, so graph
// builders can reference parameters by store index.
std::vector<Tape::Id> attach_params(Tape& tape, const ParamStore& store);

}  // namespace adrisk::ad
