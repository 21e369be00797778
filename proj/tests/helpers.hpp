#pragma once

#include <memory>
#include <string>

#include "nnop/operator.hpp"

namespace nnop::testing {

inline OperatorConfig make_config(const std::string& activation, const std::string& measure, int n, int d,
                                  QuadraturePlan plan = {}) {
  OperatorConfig cfg;
  cfg.n = n;
  cfg.d = d;
  cfg.kernel = std::make_shared<Kernel>(parse_activation(activation));
  cfg.measure = std::make_shared<Measure>(parse_measure(measure, d));
  cfg.plan = plan;
  return cfg;
}

} // namespace nnop::testing
