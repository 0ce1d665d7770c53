#pragma once

#include <string>
#include <vector>

#include "deltaspec/util.hpp"

namespace deltaspec {

// Validator for the subset of JSON Schema the pipeline uses for model-output
// contracts and report files: type (single or list), properties, required,
// additionalProperties (boolean), items, enum, minItems, maxItems, minLength,
// minimum, maximum. Unknown keywords are ignored.
//
// Returns one message per violation, each prefixed with a JSON pointer.
std::vector<std::string> validate_schema(const json& instance, const json& schema);

inline bool conforms(const json& instance, const json& schema)
{
    return validate_schema(instance, schema).empty();
}

}  // namespace deltaspec
