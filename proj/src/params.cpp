#include "adrisk/params.hpp"

#include <cmath>

#include "adrisk/errors.hpp"

namespace adrisk::ad {

int ParamStore::add(std::string name, Tensor t) {
  if (index_of(name) >= 0) throw ConfigError("duplicate parameter name '" + name + "'");
  names.push_back(std::move(name));
  values.push_back(std::move(t));
  return static_cast<int>(values.size()) - 1;
}

int ParamStore::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  return -1;
}

std::int64_t ParamStore::scalar_count() const {
  std::int64_t n = 0;
  for (const Tensor& t : values) n += t.numel();
  return n;
}

std::vector<Tape::Id> attach_params(Tape& tape, const ParamStore& store) {
  std::vector<Tape::Id> ids;
  ids.reserve(store.count());
  for (const Tensor& t : store.values) ids.push_back(tape.param(t));
  return ids;
}

Tensor uniform_init(int rows, int cols, int fan_in, rng::Engine& eng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor t = Tensor::zeros(rows, cols);
  for (double& v : t.data) v = rng::uniform(eng, -bound, bound);
  return t;
}

}  // namespace adrisk::ad
