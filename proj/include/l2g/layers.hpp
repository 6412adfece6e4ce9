#pragma once

#include <string>
#include <vector>

#include "l2g/diffcore.hpp"
#include "l2g/random.hpp"

namespace l2g {

/// Fully connected layer: x W + b, W is in x out.
struct Dense {
  int weight = -1;
  int bias = -1;
};

/// Weights uniform in (-s, s) with s = sqrt(6 / (fan_in + fan_out)); biases zero.
Dense make_dense(diff::ParameterSet& params, const std::string& name, diff::Index fan_in,
                 diff::Index fan_out, Rng& rng);

diff::Var apply(diff::Tape& tape, const diff::ParameterSet& params, const Dense& layer, diff::Var x);

/// Stack of dense layers with ReLU between them (and after the last one when
/// final_relu is set).
struct Mlp {
  std::vector<Dense> layers;
  bool final_relu = false;
};

Mlp make_mlp(diff::ParameterSet& params, const std::string& name, diff::Index fan_in,
             const std::vector<diff::Index>& widths, Rng& rng, bool final_relu);

diff::Var apply(diff::Tape& tape, const diff::ParameterSet& params, const Mlp& mlp, diff::Var x);

/// Sets the weights and bias of a layer to zero.
void zero_layer(diff::ParameterSet& params, const Dense& layer);

}  // namespace l2g
