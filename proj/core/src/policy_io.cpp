#include <json.hpp>

#include "multistop/policy.hpp"

namespace multistop {

using nlohmann::json;

namespace {

json rows_json(const std::vector<Vector>& rows) {
  json out = json::array();
  for (const auto& r : rows) out.push_back(std::vector<double>(r.data(), r.data() + r.size()));
  return out;
}

std::vector<Vector> rows_of(const json& j, int rows, int dim, const char* name) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows) {
    throw ValidationError(std::string(name) + ": expected " + std::to_string(rows) + " rows");
  }
  std::vector<Vector> out;
  for (const auto& r : j) {
    if (!r.is_array() || static_cast<int>(r.size()) != dim) {
      throw ValidationError(std::string(name) + ": each row needs " + std::to_string(dim) + " entries");
    }
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v[i] = r[static_cast<std::size_t>(i)].get<double>();
    out.push_back(std::move(v));
  }
  return out;
}

json parse_doc(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid policy JSON: ") + e.what());
  }
}

}  // namespace

std::string threshold_to_json(const ThresholdParams& params) {
  json doc;
  doc["kind"] = "linear_threshold";
  doc["theta"] = rows_json(params.theta);
  if (!params.phi.empty()) doc["phi"] = rows_json(params.phi);
  return doc.dump(2);
}

std::string softmax_to_json(const SoftmaxParams& params) {
  json doc;
  doc["kind"] = "softmax";
  json theta = json::array();
  for (const auto& pair : params.theta) theta.push_back(rows_json({pair[0], pair[1]}));
  doc["theta"] = theta;
  return doc.dump(2);
}

ThresholdParams threshold_from_json(const std::string& text, int states, int stops) {
  const json doc = parse_doc(text);
  try {
    ThresholdParams p;
    if (doc.contains("phi")) p.phi = rows_of(doc["phi"], stops, states - 1, "phi");
    if (doc.contains("theta")) {
      p.theta = rows_of(doc["theta"], stops, states - 1, "theta");
    } else if (!p.phi.empty()) {
      p = theta_from_phi(p.phi);
    } else {
      throw ValidationError("threshold policy needs 'theta' or 'phi'");
    }
    return p;
  } catch (const json::exception& e) {
    throw ParseError(std::string("threshold policy: ") + e.what());
  }
}

SoftmaxParams softmax_from_json(const std::string& text, int states, int stops) {
  const json doc = parse_doc(text);
  try {
    const auto& theta = doc.at("theta");
    if (!theta.is_array() || static_cast<int>(theta.size()) != stops) {
      throw ValidationError("softmax theta: expected one entry per stop index");
    }
    SoftmaxParams p;
    for (const auto& pair : theta) {
      auto rows = rows_of(pair, 2, states - 1, "softmax theta");
      p.theta.push_back({rows[0], rows[1]});
    }
    return p;
  } catch (const json::exception& e) {
    throw ParseError(std::string("softmax policy: ") + e.what());
  }
}

}  // namespace multistop
