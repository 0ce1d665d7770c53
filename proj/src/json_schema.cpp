#include "deltaspec/json_schema.hpp"

namespace deltaspec {

namespace {

bool matches_type(const json& v, const std::string& type)
{
    if (type == "string") return v.is_string();
    if (type == "array") return v.is_array();
    if (type == "object") return v.is_object();
    if (type == "boolean") return v.is_boolean();
    if (type == "null") return v.is_null();
    if (type == "number") return v.is_number();
    if (type == "integer") {
        if (v.is_number_integer()) return true;
        return v.is_number_float() && v.get<double>() == static_cast<double>(static_cast<long long>(v.get<double>()));
    }
    return false;
}

void validate(const json& v, const json& schema, const std::string& ptr, std::vector<std::string>& errors)
{
    if (!schema.is_object()) {
        return;
    }
    if (auto it = schema.find("type"); it != schema.end()) {
        bool ok = false;
        if (it->is_string()) {
            ok = matches_type(v, it->get<std::string>());
        } else if (it->is_array()) {
            for (const auto& t : *it) {
                ok = ok || (t.is_string() && matches_type(v, t.get<std::string>()));
            }
        }
        if (!ok) {
            errors.push_back(ptr + ": expected type " + it->dump());
            return;
        }
    }
    if (auto it = schema.find("enum"); it != schema.end() && it->is_array()) {
        bool found = false;
        for (const auto& e : *it) {
            found = found || e == v;
        }
        if (!found) {
            errors.push_back(ptr + ": value " + v.dump() + " not in enum " + it->dump());
        }
    }
    if (v.is_string()) {
        if (auto it = schema.find("minLength"); it != schema.end()) {
            if (v.get<std::string>().size() < it->get<std::size_t>()) {
                errors.push_back(ptr + ": string shorter than " + it->dump());
            }
        }
    }
    if (v.is_number()) {
        const double x = v.get<double>();
        if (auto it = schema.find("minimum"); it != schema.end() && x < it->get<double>()) {
            errors.push_back(ptr + ": below minimum " + it->dump());
        }
        if (auto it = schema.find("maximum"); it != schema.end() && x > it->get<double>()) {
            errors.push_back(ptr + ": above maximum " + it->dump());
        }
    }
    if (v.is_array()) {
        if (auto it = schema.find("minItems"); it != schema.end() && v.size() < it->get<std::size_t>()) {
            errors.push_back(ptr + ": fewer than " + it->dump() + " items");
        }
        if (auto it = schema.find("maxItems"); it != schema.end() && v.size() > it->get<std::size_t>()) {
            errors.push_back(ptr + ": more than " + it->dump() + " items");
        }
        if (auto it = schema.find("items"); it != schema.end()) {
            for (std::size_t i = 0; i < v.size(); ++i) {
                validate(v[i], *it, ptr + "/" + std::to_string(i), errors);
            }
        }
    }
    if (v.is_object()) {
        if (auto it = schema.find("required"); it != schema.end() && it->is_array()) {
            for (const auto& key : *it) {
                if (!v.contains(key.get<std::string>())) {
                    errors.push_back(ptr + ": missing required property \"" + key.get<std::string>() + "\"");
                }
            }
        }
        const auto props = schema.find("properties");
        if (props != schema.end() && props->is_object()) {
            for (const auto& [key, sub] : props->items()) {
                if (auto vit = v.find(key); vit != v.end()) {
                    validate(*vit, sub, ptr + "/" + key, errors);
                }
            }
        }
        if (auto it = schema.find("additionalProperties"); it != schema.end() && it->is_boolean() && !it->get<bool>()) {
            for (const auto& [key, _] : v.items()) {
                if (props == schema.end() || !props->contains(key)) {
                    errors.push_back(ptr + ": unexpected property \"" + key + "\"");
                }
            }
        }
    }
}

}  // namespace

std::vector<std::string> validate_schema(const json& instance, const json& schema)
{
    std::vector<std::string> errors;
    validate(instance, schema, "", errors);
    return errors;
}

}  // namespace deltaspec
