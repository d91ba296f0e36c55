#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace schemadoc {

using ordered_json = nlohmann::ordered_json;

// Validator for the schema dialect used to constrain analyzer responses.
// Supported keywords: type (string or list), properties, required,
// additionalProperties (boolean), items (single schema), enum,
// minimum/maximum, minLength/maxLength, minItems/maxItems.
namespace jsonschema {

inline bool type_matches(const std::string &type, const ordered_json &value) {
  if (type == "object") return value.is_object();
  if (type == "array") return value.is_array();
  if (type == "string") return value.is_string();
  if (type == "integer") return value.is_number_integer() || value.is_number_unsigned();
  if (type == "number") return value.is_number();
  if (type == "boolean") return value.is_boolean();
  if (type == "null") return value.is_null();
  return false;
}

inline void validate_node(const ordered_json &schema, const ordered_json &value,
                          const std::string &path, std::vector<std::string> &errors) {
  if (!schema.is_object()) return;

  if (schema.contains("type")) {
    const auto &t = schema.at("type");
    bool ok = false;
    std::string wanted;
    if (t.is_string()) {
      wanted = t.get<std::string>();
      ok = type_matches(wanted, value);
    } else if (t.is_array()) {
      for (const auto &alt : t) {
        if (alt.is_string() && type_matches(alt.get<std::string>(), value)) ok = true;
        wanted += (wanted.empty() ? "" : "|") + alt.get<std::string>();
      }
    }
    if (!ok) {
      errors.push_back(path + ": expected " + wanted + ", got " +
                       std::string(value.type_name()));
      return;  // further keyword checks would only cascade
    }
  }

  if (schema.contains("enum")) {
    bool found = false;
    for (const auto &allowed : schema.at("enum"))
      if (allowed == value) found = true;
    if (!found) errors.push_back(path + ": value not in enum");
  }

  if (value.is_number() && schema.contains("minimum") &&
      value.get<double>() < schema.at("minimum").get<double>())
    errors.push_back(path + ": below minimum");
  if (value.is_number() && schema.contains("maximum") &&
      value.get<double>() > schema.at("maximum").get<double>())
    errors.push_back(path + ": above maximum");

  if (value.is_string()) {
    const auto len = value.get<std::string>().size();
    if (schema.contains("minLength") && len < schema.at("minLength").get<size_t>())
      errors.push_back(path + ": shorter than minLength");
    if (schema.contains("maxLength") && len > schema.at("maxLength").get<size_t>())
      errors.push_back(path + ": longer than maxLength");
  }

  if (value.is_array()) {
    if (schema.contains("minItems") && value.size() < schema.at("minItems").get<size_t>())
      errors.push_back(path + ": fewer than minItems elements");
    if (schema.contains("maxItems") && value.size() > schema.at("maxItems").get<size_t>())
      errors.push_back(path + ": more than maxItems elements");
    if (schema.contains("items")) {
      size_t i = 0;
      for (const auto &element : value) {
        validate_node(schema.at("items"), element, path + "[" + std::to_string(i) + "]",
                      errors);
        ++i;
      }
    }
  }

  if (value.is_object()) {
    if (schema.contains("required"))
      for (const auto &name : schema.at("required"))
        if (!value.contains(name.get<std::string>()))
          errors.push_back(path + ": missing required property '" +
                           name.get<std::string>() + "'");
    const bool closed = schema.contains("additionalProperties") &&
                        schema.at("additionalProperties").is_boolean() &&
                        !schema.at("additionalProperties").get<bool>();
    for (auto it = value.begin(); it != value.end(); ++it) {
      const bool declared =
          schema.contains("properties") && schema.at("properties").contains(it.key());
      if (declared)
        validate_node(schema.at("properties").at(it.key()), it.value(),
                      path + "." + it.key(), errors);
      else if (closed)
        errors.push_back(path + ": unexpected property '" + it.key() + "'");
    }
  }
}

}  // namespace jsonschema

inline std::vector<std::string> validate_json(const ordered_json &schema,
                                              const ordered_json &value) {
  std::vector<std::string> errors;
  jsonschema::validate_node(schema, value, "$", errors);
  return errors;
}

}  // namespace schemadoc
