#pragma once

// Validator for the JSON Schema subset used under schemas/: type, enum,
// required, properties, additionalProperties (bool), items, minimum, maximum.

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace testing {

inline nlohmann::json load_schema(const std::string& name) {
    std::ifstream in(std::filesystem::path(KGRAG_SCHEMA_DIR) / (name + ".schema.json"));
    return nlohmann::json::parse(in);
}

inline bool type_matches(const nlohmann::json& v, const std::string& t) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "boolean") return v.is_boolean();
    if (t == "null") return v.is_null();
    if (t == "integer") return v.is_number_integer();
    if (t == "number") return v.is_number();
    return false;
}

inline void validate_into(const nlohmann::json& v, const nlohmann::json& schema, const std::string& at,
                          std::vector<std::string>& errors) {
    if (schema.contains("type")) {
        std::vector<std::string> types;
        if (schema["type"].is_array()) {
            for (const auto& t : schema["type"]) types.push_back(t);
        } else {
            types.push_back(schema["type"]);
        }
        bool ok = false;
        for (const auto& t : types) ok = ok || type_matches(v, t);
        if (!ok) {
            errors.push_back(at + ": wrong type " + v.type_name());
            return;
        }
    }
    if (schema.contains("enum")) {
        bool found = false;
        for (const auto& e : schema["enum"]) found = found || e == v;
        if (!found) errors.push_back(at + ": value " + v.dump() + " not in enum");
    }
    if (v.is_number()) {
        if (schema.contains("minimum") && v.get<double>() < schema["minimum"].get<double>()) {
            errors.push_back(at + ": below minimum");
        }
        if (schema.contains("maximum") && v.get<double>() > schema["maximum"].get<double>()) {
            errors.push_back(at + ": above maximum");
        }
    }
    if (v.is_object()) {
        for (const auto& r : schema.value("required", nlohmann::json::array())) {
            if (!v.contains(r.get<std::string>())) errors.push_back(at + ": missing " + r.get<std::string>());
        }
        const auto props = schema.value("properties", nlohmann::json::object());
        for (const auto& [k, sub] : v.items()) {
            if (props.contains(k)) {
                validate_into(sub, props[k], at + "." + k, errors);
            } else if (schema.contains("additionalProperties") && schema["additionalProperties"] == false) {
                errors.push_back(at + ": unexpected property " + k);
            }
        }
    }
    if (v.is_array() && schema.contains("items")) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            validate_into(v[i], schema["items"], at + "[" + std::to_string(i) + "]", errors);
        }
    }
}

inline std::vector<std::string> schema_errors(const nlohmann::json& v, const std::string& schema_name) {
    std::vector<std::string> errors;
    validate_into(v, load_schema(schema_name), "$", errors);
    return errors;
}

}  // namespace testing
