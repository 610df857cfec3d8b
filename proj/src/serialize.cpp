#include "fairicd/serialize.hpp"

#include <vector>

#include "fairicd/errors.hpp"

namespace fairicd {

nlohmann::ordered_json tensor_to_json(const Tensor& t) {
  nlohmann::ordered_json j;
  j["rows"] = t.rows();
  j["cols"] = t.cols();
  j["data"] = t.raw();
  return j;
}

Tensor tensor_from_json(const nlohmann::json& j) {
  Tensor t(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != t.size()) throw DataError("tensor data length mismatch");
  t.raw() = data;
  return t;
}

}  // namespace fairicd
