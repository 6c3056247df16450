#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "adrisk/rng.hpp"
#include "adrisk/tensor.hpp"

namespace adrisk::ad {

enum class Act { Sigmoid, Tanh, Relu, Exp, NegReluExp };

// Maps the textual kind names (sigmoid|tanh|relu|exp|neg-relu-exp).
Act act_from_name(std::string_view name);

// Recorded computation graph for reverse-mode differentiation. Nodes are
// appended in execution order, so every node's inputs precede it and one
// reverse sweep visits each node exactly once. A tape is built per forward
// pass and is single-threaded by construction; the Tensors it returns are
// plain values and safe to share.
class Tape {
 public:
  using Id = int;

  Id constant(Tensor v);          // no gradient
  Id param(Tensor v);             // leaf that accumulates a gradient

  Id matmul(Id a, Id b);
  Id add(Id a, Id b);             // elementwise, same shape
  Id sub(Id a, Id b);
  Id mul(Id a, Id b);
  Id add_rowvec(Id x, Id bias);   // bias {1,c} broadcast over rows
  Id map(Id x, Act kind);
  Id scale(Id x, double c);
  Id sum(Id x);                   // {1,1}
  Id concat_cols(std::span<const Id> parts);
  Id concat_rows(std::span<const Id> parts);
  Id slice_cols(Id x, int c0, int c1);
  // Row s of the output is row s of steps[src_step[s]]. Used to realign
  // time-reversed per-timestep tensors inside a padded batch.
  Id gather_rows(std::span<const Id> steps, std::vector<int> src_step);

  // Mean over mask==1 entries of -[y ln p + (1-y) ln(1-p)], with p clamped
  // to [1e-7, 1-1e-7]; 0 when the mask is empty.
  Id bce_masked(Id p, Id y, Id mask);
  // Mean over mask==1 entries of (a-b)^2; 0 when the mask is empty. Both
  // operands may carry gradients.
  Id mse_masked(Id a, Id b, Id mask);

  // Train mode zeroes entries with probability rate and rescales survivors
  // by 1/(1-rate); eval mode and rate 0 are the identity.
  Id dropout(Id x, double rate, bool train, rng::Engine& eng);

  Id affine(Id x, Id w, Id b) { return add_rowvec(matmul(x, w), b); }

  // Gradient of a scalar root with respect to every recorded node.
  // Accumulators are reset on entry.
  void backward(Id root);

  const Tensor& value(Id id) const { return nodes_[id].val; }
  const Tensor& grad(Id id);
  bool has_grad(Id id) const;
  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Op {
    Constant, Param, MatMul, Add, Sub, Mul, AddRowVec, Map, Scale, Sum,
    ConcatCols, ConcatRows, SliceCols, GatherRows, BceMasked, MseMasked,
    Dropout,
  };

  struct Node {
    Op op;
    std::vector<Id> in;
    Tensor val;
    bool needs_grad = false;
    Act act = Act::Sigmoid;
    double c = 0.0;            // scale factor, dropout rate, or mask count
    int c0 = 0, c1 = 0;        // column slice bounds
    std::vector<int> gather;   // per-row source step
    Tensor aux;                // dropout keep/scale mask
  };

  Id push(Node n);
  Tensor& grad_buf(Id id);
  void backprop_node(Id id);
  const Node& node(Id id) const { return nodes_[id]; }

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
};

}  // namespace adrisk::ad
