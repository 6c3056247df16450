#include "adrisk/tape.hpp"

#include <Eigen/Core>

#include <cmath>
#include <string>

namespace adrisk::ad {

namespace {

constexpr double kBceEps = 1e-7;

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

ConstMap as_map(const Tensor& t) { return ConstMap(t.data.data(), t.rows(), t.cols()); }
MutMap as_map(Tensor& t) { return MutMap(t.data.data(), t.rows(), t.cols()); }

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(what) + ": shapes " + a.shape_str() + " and " +
                         b.shape_str() + " do not match");
  }
}

}  // namespace

Act act_from_name(std::string_view name) {
  if (name == "sigmoid") return Act::Sigmoid;
  if (name == "tanh") return Act::Tanh;
  if (name == "relu") return Act::Relu;
  if (name == "exp") return Act::Exp;
  if (name == "neg-relu-exp") return Act::NegReluExp;
  throw ConfigError("unknown elementwise map kind '" + std::string(name) + "'");
}

Tape::Id Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size()) - 1;
}

Tape::Id Tape::constant(Tensor v) {
  Node n{Op::Constant, {}, std::move(v)};
  n.needs_grad = false;
  return push(std::move(n));
}

Tape::Id Tape::param(Tensor v) {
  Node n{Op::Param, {}, std::move(v)};
  n.needs_grad = true;
  return push(std::move(n));
}

Tape::Id Tape::matmul(Id a, Id b) {
  const Tensor& A = nodes_[a].val;
  const Tensor& B = nodes_[b].val;
  if (A.cols() != B.rows()) {
    throw DimensionError("matmul: inner extents disagree, shapes " + A.shape_str() +
                         " and " + B.shape_str());
  }
  Tensor out = Tensor::zeros(A.rows(), B.cols());
  as_map(out).noalias() = as_map(A) * as_map(B);
  Node n{Op::MatMul, {a, b}, std::move(out)};
  n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
  return push(std::move(n));
}

Tape::Id Tape::add(Id a, Id b) {
  const Tensor& A = nodes_[a].val;
  const Tensor& B = nodes_[b].val;
  require_same_shape(A, B, "add");
  Tensor out = A;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += B.data[i];
  Node n{Op::Add, {a, b}, std::move(out)};
  n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
  return push(std::move(n));
}

Tape::Id Tape::sub(Id a, Id b) {
  const Tensor& A = nodes_[a].val;
  const Tensor& B = nodes_[b].val;
  require_same_shape(A, B, "sub");
  Tensor out = A;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= B.data[i];
  Node n{Op::Sub, {a, b}, std::move(out)};
  n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
  return push(std::move(n));
}

Tape::Id Tape::mul(Id a, Id b) {
  const Tensor& A = nodes_[a].val;
  const Tensor& B = nodes_[b].val;
  require_same_shape(A, B, "mul");
  Tensor out = A;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= B.data[i];
  Node n{Op::Mul, {a, b}, std::move(out)};
  n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
  return push(std::move(n));
}

Tape::Id Tape::add_rowvec(Id x, Id bias) {
  const Tensor& X = nodes_[x].val;
  const Tensor& B = nodes_[bias].val;
  if (B.rows() != 1 || B.cols() != X.cols()) {
    throw DimensionError("add_rowvec: bias " + B.shape_str() + " does not broadcast over " +
                         X.shape_str());
  }
  Tensor out = X;
  const int c = X.cols();
  for (int r = 0; r < X.rows(); ++r) {
    for (int j = 0; j < c; ++j) out.at(r, j) += B.data[j];
  }
  Node n{Op::AddRowVec, {x, bias}, std::move(out)};
  n.needs_grad = nodes_[x].needs_grad || nodes_[bias].needs_grad;
  return push(std::move(n));
}

Tape::Id Tape::map(Id x, Act kind) {
  const Tensor& X = nodes_[x].val;
  Tensor out = X;
  switch (kind) {
    case Act::Sigmoid:
      for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
      break;
    case Act::Tanh:
      for (double& v : out.data) v = std::tanh(v);
      break;
    case Act::Relu:
      for (double& v : out.data) v = v > 0.0 ? v : 0.0;
      break;
    case Act::Exp:
      for (double& v : out.data) v = std::exp(v);
      break;
    case Act::NegReluExp:
      for (double& v : out.data) v = std::exp(-(v > 0.0 ? v : 0.0));
      break;
  }
  Node n{Op::Map, {x}, std::move(out)};
  n.act = kind;
  n.needs_grad = nodes_[x].needs_grad;
  return push(std::move(n));
}

Tape::Id Tape::scale(Id x, double c) {
  Tensor out = nodes_[x].val;
  for (double& v : out.data) v *= c;
  Node n{Op::Scale, {x}, std::move(out)};
  n.c = c;
  n.needs_grad = nodes_[x].needs_grad;
  return push(std::move(n));
}

Tape::Id Tape::sum(Id x) {
  double s = 0.0;
  for (double v : nodes_[x].val.data) s += v;
  Node n{Op::Sum, {x}, Tensor::scalar(s)};
  n.needs_grad = nodes_[x].needs_grad;
  return push(std::move(n));
}

Tape::Id Tape::concat_cols(std::span<const Id> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const int rows = nodes_[parts[0]].val.rows();
  int cols = 0;
  bool needs = false;
  for (Id p : parts) {
    const Tensor& t = nodes_[p].val;
    if (t.rows() != rows) {
      throw DimensionError("concat_cols: row counts disagree, " +
                           nodes_[parts[0]].val.shape_str() + " vs " + t.shape_str());
    }
    cols += t.cols();
    needs = needs || nodes_[p].needs_grad;
  }
  Tensor out = Tensor::zeros(rows, cols);
  int off = 0;
  for (Id p : parts) {
    const Tensor& t = nodes_[p].val;
    for (int r = 0; r < rows; ++r) {
      for (int j = 0; j < t.cols(); ++j) out.at(r, off + j) = t.at(r, j);
    }
    off += t.cols();
  }
  Node n{Op::ConcatCols, std::vector<Id>(parts.begin(), parts.end()), std::move(out)};
  n.needs_grad = needs;
  return push(std::move(n));
}

Tape::Id Tape::concat_rows(std::span<const Id> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const int cols = nodes_[parts[0]].val.cols();
  int rows = 0;
  bool needs = false;
  for (Id p : parts) {
    const Tensor& t = nodes_[p].val;
    if (t.cols() != cols) {
      throw DimensionError("concat_rows: column counts disagree, " +
                           nodes_[parts[0]].val.shape_str() + " vs " + t.shape_str());
    }
    rows += t.rows();
    needs = needs || nodes_[p].needs_grad;
  }
  Tensor out = Tensor::zeros(rows, cols);
  int off = 0;
  for (Id p : parts) {
    const Tensor& t = nodes_[p].val;
    std::copy(t.data.begin(), t.data.end(), out.data.begin() + static_cast<std::size_t>(off) * cols);
    off += t.rows();
  }
  Node n{Op::ConcatRows, std::vector<Id>(parts.begin(), parts.end()), std::move(out)};
  n.needs_grad = needs;
  return push(std::move(n));
}

Tape::Id Tape::slice_cols(Id x, int c0, int c1) {
  const Tensor& X = nodes_[x].val;
  if (c0 < 0 || c1 > X.cols() || c0 >= c1) {
    throw DimensionError("slice_cols: bounds [" + std::to_string(c0) + "," +
                         std::to_string(c1) + ") invalid for " + X.shape_str());
  }
  Tensor out = Tensor::zeros(X.rows(), c1 - c0);
  for (int r = 0; r < X.rows(); ++r) {
    for (int j = c0; j < c1; ++j) out.at(r, j - c0) = X.at(r, j);
  }
  Node n{Op::SliceCols, {x}, std::move(out)};
  n.c0 = c0;
  n.c1 = c1;
  n.needs_grad = nodes_[x].needs_grad;
  return push(std::move(n));
}

Tape::Id Tape::gather_rows(std::span<const Id> steps, std::vector<int> src_step) {
  if (steps.empty()) throw DimensionError("gather_rows: no inputs");
  const Tensor& first = nodes_[steps[0]].val;
  const int rows = first.rows();
  const int cols = first.cols();
  if (static_cast<int>(src_step.size()) != rows) {
    throw DimensionError("gather_rows: need one source step per row");
  }
  bool needs = false;
  for (Id s : steps) {
    require_same_shape(nodes_[s].val, first, "gather_rows");
    needs = needs || nodes_[s].needs_grad;
  }
  Tensor out = Tensor::zeros(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const int t = src_step[r];
    if (t < 0 || t >= static_cast<int>(steps.size())) {
      throw DimensionError("gather_rows: source step out of range");
    }
    const Tensor& src = nodes_[steps[t]].val;
    for (int j = 0; j < cols; ++j) out.at(r, j) = src.at(r, j);
  }
  Node n{Op::GatherRows, std::vector<Id>(steps.begin(), steps.end()), std::move(out)};
  n.gather = std::move(src_step);
  n.needs_grad = needs;
  return push(std::move(n));
}

Tape::Id Tape::bce_masked(Id p, Id y, Id mask) {
  const Tensor& P = nodes_[p].val;
  const Tensor& Y = nodes_[y].val;
  const Tensor& M = nodes_[mask].val;
  require_same_shape(P, Y, "bce_masked(p,y)");
  require_same_shape(P, M, "bce_masked(p,mask)");
  double total = 0.0;
  double count = 0.0;
  for (std::size_t i = 0; i < P.data.size(); ++i) {
    if (M.data[i] == 0.0) continue;
    const double pc = std::min(std::max(P.data[i], kBceEps), 1.0 - kBceEps);
    total += -(Y.data[i] * std::log(pc) + (1.0 - Y.data[i]) * std::log(1.0 - pc));
    count += 1.0;
  }
  Node n{Op::BceMasked, {p, y, mask}, Tensor::scalar(count > 0.0 ? total / count : 0.0)};
  n.c = count;
  n.needs_grad = nodes_[p].needs_grad;
  return push(std::move(n));
}

Tape::Id Tape::mse_masked(Id a, Id b, Id mask) {
  const Tensor& A = nodes_[a].val;
  const Tensor& B = nodes_[b].val;
  const Tensor& M = nodes_[mask].val;
  require_same_shape(A, B, "mse_masked(a,b)");
  require_same_shape(A, M, "mse_masked(a,mask)");
  double total = 0.0;
  double count = 0.0;
  for (std::size_t i = 0; i < A.data.size(); ++i) {
    if (M.data[i] == 0.0) continue;
    const double d = A.data[i] - B.data[i];
    total += d * d;
    count += 1.0;
  }
  Node n{Op::MseMasked, {a, b, mask}, Tensor::scalar(count > 0.0 ? total / count : 0.0)};
  n.c = count;
  n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
  return push(std::move(n));
}

Tape::Id Tape::dropout(Id x, double rate, bool train, rng::Engine& eng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ConfigError("dropout rate must lie in [0,1), got " + std::to_string(rate));
  }
  if (!train || rate == 0.0) return x;
  const Tensor& X = nodes_[x].val;
  const double keep_scale = 1.0 / (1.0 - rate);
  Tensor mask = Tensor::zeros(X.rows(), X.cols());
  for (double& v : mask.data) v = rng::uniform01(eng) < rate ? 0.0 : keep_scale;
  Tensor out = X;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= mask.data[i];
  Node n{Op::Dropout, {x}, std::move(out)};
  n.c = rate;
  n.aux = std::move(mask);
  n.needs_grad = nodes_[x].needs_grad;
  return push(std::move(n));
}

Tensor& Tape::grad_buf(Id id) {
  Tensor& g = grads_[id];
  if (g.data.empty()) g = Tensor::zeros(nodes_[id].val.rows(), nodes_[id].val.cols());
  return g;
}

bool Tape::has_grad(Id id) const {
  return id >= 0 && id < static_cast<Id>(grads_.size()) && !grads_[id].data.empty();
}

const Tensor& Tape::grad(Id id) {
  if (grads_.size() != nodes_.size()) grads_.resize(nodes_.size());
  return grad_buf(id);
}

void Tape::backward(Id root) {
  const Tensor& r = nodes_[root].val;
  if (r.numel() != 1) {
    throw UsageError("backward root must be scalar, got shape " + r.shape_str());
  }
  grads_.assign(nodes_.size(), Tensor{});
  grad_buf(root).data[0] = 1.0;
  for (Id i = root; i >= 0; --i) {
    if (!nodes_[i].needs_grad || grads_[i].data.empty()) continue;
    backprop_node(i);
  }
}

void Tape::backprop_node(Id id) {
  const Node& n = nodes_[id];
  const Tensor& g = grads_[id];
  switch (n.op) {
    case Op::Constant:
    case Op::Param:
      break;
    case Op::MatMul: {
      const Tensor& A = nodes_[n.in[0]].val;
      const Tensor& B = nodes_[n.in[1]].val;
      if (nodes_[n.in[0]].needs_grad) {
        as_map(grad_buf(n.in[0])).noalias() += as_map(g) * as_map(B).transpose();
      }
      if (nodes_[n.in[1]].needs_grad) {
        as_map(grad_buf(n.in[1])).noalias() += as_map(A).transpose() * as_map(g);
      }
      break;
    }
    case Op::Add:
      for (int k = 0; k < 2; ++k) {
        if (!nodes_[n.in[k]].needs_grad) continue;
        Tensor& gi = grad_buf(n.in[k]);
        for (std::size_t i = 0; i < g.data.size(); ++i) gi.data[i] += g.data[i];
      }
      break;
    case Op::Sub: {
      if (nodes_[n.in[0]].needs_grad) {
        Tensor& ga = grad_buf(n.in[0]);
        for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i];
      }
      if (nodes_[n.in[1]].needs_grad) {
        Tensor& gb = grad_buf(n.in[1]);
        for (std::size_t i = 0; i < g.data.size(); ++i) gb.data[i] -= g.data[i];
      }
      break;
    }
    case Op::Mul: {
      const Tensor& A = nodes_[n.in[0]].val;
      const Tensor& B = nodes_[n.in[1]].val;
      if (nodes_[n.in[0]].needs_grad) {
        Tensor& ga = grad_buf(n.in[0]);
        for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i] * B.data[i];
      }
      if (nodes_[n.in[1]].needs_grad) {
        Tensor& gb = grad_buf(n.in[1]);
        for (std::size_t i = 0; i < g.data.size(); ++i) gb.data[i] += g.data[i] * A.data[i];
      }
      break;
    }
    case Op::AddRowVec: {
      if (nodes_[n.in[0]].needs_grad) {
        Tensor& gx = grad_buf(n.in[0]);
        for (std::size_t i = 0; i < g.data.size(); ++i) gx.data[i] += g.data[i];
      }
      if (nodes_[n.in[1]].needs_grad) {
        Tensor& gb = grad_buf(n.in[1]);
        const int c = g.cols();
        for (int r = 0; r < g.rows(); ++r) {
          for (int j = 0; j < c; ++j) gb.data[j] += g.at(r, j);
        }
      }
      break;
    }
    case Op::Map: {
      if (!nodes_[n.in[0]].needs_grad) break;
      const Tensor& X = nodes_[n.in[0]].val;
      const Tensor& Y = n.val;
      Tensor& gx = grad_buf(n.in[0]);
      switch (n.act) {
        case Act::Sigmoid:
          for (std::size_t i = 0; i < g.data.size(); ++i) {
            gx.data[i] += g.data[i] * Y.data[i] * (1.0 - Y.data[i]);
          }
          break;
        case Act::Tanh:
          for (std::size_t i = 0; i < g.data.size(); ++i) {
            gx.data[i] += g.data[i] * (1.0 - Y.data[i] * Y.data[i]);
          }
          break;
        case Act::Relu:
          for (std::size_t i = 0; i < g.data.size(); ++i) {
            if (X.data[i] > 0.0) gx.data[i] += g.data[i];
          }
          break;
        case Act::Exp:
          for (std::size_t i = 0; i < g.data.size(); ++i) gx.data[i] += g.data[i] * Y.data[i];
          break;
        case Act::NegReluExp:
          for (std::size_t i = 0; i < g.data.size(); ++i) {
            if (X.data[i] > 0.0) gx.data[i] -= g.data[i] * Y.data[i];
          }
          break;
      }
      break;
    }
    case Op::Scale: {
      if (!nodes_[n.in[0]].needs_grad) break;
      Tensor& gx = grad_buf(n.in[0]);
      for (std::size_t i = 0; i < g.data.size(); ++i) gx.data[i] += g.data[i] * n.c;
      break;
    }
    case Op::Sum: {
      if (!nodes_[n.in[0]].needs_grad) break;
      Tensor& gx = grad_buf(n.in[0]);
      const double gs = g.data[0];
      for (double& v : gx.data) v += gs;
      break;
    }
    case Op::ConcatCols: {
      int off = 0;
      for (Id p : n.in) {
        const Tensor& t = nodes_[p].val;
        if (nodes_[p].needs_grad) {
          Tensor& gp = grad_buf(p);
          for (int r = 0; r < t.rows(); ++r) {
            for (int j = 0; j < t.cols(); ++j) gp.at(r, j) += g.at(r, off + j);
          }
        }
        off += t.cols();
      }
      break;
    }
    case Op::ConcatRows: {
      int off = 0;
      for (Id p : n.in) {
        const Tensor& t = nodes_[p].val;
        if (nodes_[p].needs_grad) {
          Tensor& gp = grad_buf(p);
          const std::size_t base = static_cast<std::size_t>(off) * t.cols();
          for (std::size_t i = 0; i < t.data.size(); ++i) gp.data[i] += g.data[base + i];
        }
        off += t.rows();
      }
      break;
    }
    case Op::SliceCols: {
      if (!nodes_[n.in[0]].needs_grad) break;
      Tensor& gx = grad_buf(n.in[0]);
      for (int r = 0; r < g.rows(); ++r) {
        for (int j = 0; j < g.cols(); ++j) gx.at(r, n.c0 + j) += g.at(r, j);
      }
      break;
    }
    case Op::GatherRows: {
      for (int r = 0; r < g.rows(); ++r) {
        const Id src = n.in[n.gather[r]];
        if (!nodes_[src].needs_grad) continue;
        Tensor& gs = grad_buf(src);
        for (int j = 0; j < g.cols(); ++j) gs.at(r, j) += g.at(r, j);
      }
      break;
    }
    case Op::BceMasked: {
      if (!nodes_[n.in[0]].needs_grad || n.c == 0.0) break;
      const Tensor& P = nodes_[n.in[0]].val;
      const Tensor& Y = nodes_[n.in[1]].val;
      const Tensor& M = nodes_[n.in[2]].val;
      Tensor& gp = grad_buf(n.in[0]);
      const double gs = g.data[0] / n.c;
      for (std::size_t i = 0; i < P.data.size(); ++i) {
        if (M.data[i] == 0.0) continue;
        const double p = P.data[i];
        if (p < kBceEps || p > 1.0 - kBceEps) continue;  // clamp is flat
        gp.data[i] += gs * (-Y.data[i] / p + (1.0 - Y.data[i]) / (1.0 - p));
      }
      break;
    }
    case Op::MseMasked: {
      if (n.c == 0.0) break;
      const Tensor& A = nodes_[n.in[0]].val;
      const Tensor& B = nodes_[n.in[1]].val;
      const Tensor& M = nodes_[n.in[2]].val;
      const double gs = 2.0 * g.data[0] / n.c;
      Tensor* ga = nodes_[n.in[0]].needs_grad ? &grad_buf(n.in[0]) : nullptr;
      Tensor* gb = nodes_[n.in[1]].needs_grad ? &grad_buf(n.in[1]) : nullptr;
      for (std::size_t i = 0; i < A.data.size(); ++i) {
        if (M.data[i] == 0.0) continue;
        const double d = gs * (A.data[i] - B.data[i]);
        if (ga) ga->data[i] += d;
        if (gb) gb->data[i] -= d;
      }
      break;
    }
    case Op::Dropout: {
      if (!nodes_[n.in[0]].needs_grad) break;
      Tensor& gx = grad_buf(n.in[0]);
      for (std::size_t i = 0; i < g.data.size(); ++i) gx.data[i] += g.data[i] * n.aux.data[i];
      break;
    }
  }
}

}  // namespace adrisk::ad
