#include "adrisk/adam.hpp"

#include <cmath>

#include "adrisk/errors.hpp"

namespace adrisk::ad {

AdamState AdamState::init(const ParamStore& params, AdamConfig cfg) {
  AdamState st;
  st.cfg = cfg;
  st.m.reserve(params.count());
  st.v.reserve(params.count());
  for (const Tensor& t : params.values) {
    st.m.push_back(Tensor::zeros(t.rows(), t.cols()));
    st.v.push_back(Tensor::zeros(t.rows(), t.cols()));
  }
  return st;
}

void adam_step(ParamStore& params, const std::vector<Tensor>& grads, AdamState& state) {
  if (grads.size() != params.count() || state.m.size() != params.count()) {
    throw DimensionError("adam_step: gradient/state count does not match parameter store");
  }
  state.step += 1;
  const AdamConfig& c = state.cfg;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.count(); ++k) {
    Tensor& p = params.values[k];
    const Tensor& g = grads[k];
    if (!p.same_shape(g)) {
      throw DimensionError("adam_step: gradient shape " + g.shape_str() +
                           " does not match parameter '" + params.names[k] + "' " +
                           p.shape_str());
    }
    Tensor& m = state.m[k];
    Tensor& v = state.v[k];
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      double gi = g.data[i];
      if (std::isnan(gi)) {
        throw NumericError("adam_step: NaN gradient for parameter '" + params.names[k] + "'");
      }
      gi += c.weight_decay * p.data[i];
      m.data[i] = c.beta1 * m.data[i] + (1.0 - c.beta1) * gi;
      v.data[i] = c.beta2 * v.data[i] + (1.0 - c.beta2) * gi * gi;
      const double mhat = m.data[i] / bc1;
      const double vhat = v.data[i] / bc2;
      p.data[i] -= c.lr * mhat / (std::sqrt(vhat) + c.epsilon);
    }
  }
}

}  // namespace adrisk::ad
