#include <gtest/gtest.h>

#include "deltaspec/json_schema.hpp"

using namespace deltaspec;

TEST(JsonSchema, TypeRequiredAndAdditional)
{
    const json schema = {{"type", "object"},
                         {"required", {"a"}},
                         {"additionalProperties", false},
                         {"properties", {{"a", {{"type", "integer"}, {"minimum", 0}}}, {"b", {{"type", {"string", "null"}}}}}}};
    EXPECT_TRUE(conforms(json{{"a", 3}}, schema));
    EXPECT_TRUE(conforms(json{{"a", 3}, {"b", nullptr}}, schema));
    EXPECT_FALSE(conforms(json{{"b", "x"}}, schema));
    EXPECT_FALSE(conforms(json{{"a", -1}}, schema));
    EXPECT_FALSE(conforms(json{{"a", 1}, {"c", 1}}, schema));
    EXPECT_FALSE(conforms(json{{"a", "1"}}, schema));
}

TEST(JsonSchema, ArraysEnumsAndStrings)
{
    const json schema = {{"type", "array"},
                         {"minItems", 1},
                         {"maxItems", 2},
                         {"items", {{"enum", {"x", "y"}}}}};
    EXPECT_TRUE(conforms(json{"x", "y"}, schema));
    EXPECT_FALSE(conforms(json::array(), schema));
    EXPECT_FALSE(conforms(json{"x", "y", "x"}, schema));
    EXPECT_FALSE(conforms(json{"z"}, schema));
    EXPECT_FALSE(conforms(json("a"), json{{"minLength", 2}}));
}

TEST(JsonSchema, MessagesCarryPointers)
{
    const json schema = {{"type", "object"}, {"properties", {{"xs", {{"type", "array"}, {"items", {{"type", "number"}}}}}}}};
    const auto errs = validate_schema(json{{"xs", {1, "two"}}}, schema);
    ASSERT_EQ(errs.size(), 1u);
    EXPECT_NE(errs[0].find("/xs/1"), std::string::npos) << errs[0];
}
