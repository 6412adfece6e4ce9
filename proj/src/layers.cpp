#include "l2g/layers.hpp"

#include <cmath>

namespace l2g {

using diff::Index;
using diff::Matrix;
using diff::Var;

Dense make_dense(diff::ParameterSet& params, const std::string& name, Index fan_in, Index fan_out,
                 Rng& rng) {
  const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix w(fan_in, fan_out);
  for (Index c = 0; c < fan_out; ++c) {
    for (Index r = 0; r < fan_in; ++r) w(r, c) = rng.uniform(-s, s);
  }
  Dense d;
  d.weight = params.add(name + ".weight", std::move(w));
  d.bias = params.add(name + ".bias", Matrix::Zero(1, fan_out));
  return d;
}

Var apply(diff::Tape& tape, const diff::ParameterSet& params, const Dense& layer, Var x) {
  return diff::add_rowwise(diff::matmul(x, tape.param(params, layer.weight)),
                           tape.param(params, layer.bias));
}

Mlp make_mlp(diff::ParameterSet& params, const std::string& name, Index fan_in,
             const std::vector<Index>& widths, Rng& rng, bool final_relu) {
  Mlp mlp;
  mlp.final_relu = final_relu;
  Index in = fan_in;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    mlp.layers.push_back(make_dense(params, name + "." + std::to_string(i), in, widths[i], rng));
    in = widths[i];
  }
  return mlp;
}

Var apply(diff::Tape& tape, const diff::ParameterSet& params, const Mlp& mlp, Var x) {
  for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
    x = apply(tape, params, mlp.layers[i], x);
    if (i + 1 < mlp.layers.size() || mlp.final_relu) x = diff::relu(x);
  }
  return x;
}

void zero_layer(diff::ParameterSet& params, const Dense& layer) {
  params[layer.weight].value.setZero();
  params[layer.bias].value.setZero();
}

}  // namespace l2g
