#pragma once

#include <json.hpp>

#include "fairicd/tensor.hpp"

namespace fairicd {

// Shared tensor <-> JSON plumbing for checkpoints. Values round-trip exactly
// (shortest-representation doubles).
nlohmann::ordered_json tensor_to_json(const Tensor& t);
Tensor tensor_from_json(const nlohmann::json& j);

}  // namespace fairicd
