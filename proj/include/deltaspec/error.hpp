#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace deltaspec {

enum class errc {
    malformed_document,
    io_error,
    empty_index,
    invalid_config,
    span_mismatch,
    unknown_function,
    schema_violation,
    gateway_error,
    empty_graph,
    cycle_detected,
    missing_delta,
    invalid_record,
    empty_store,
    empty_response,
    shape_mismatch,
    provider_error,
    contract_violation,
    empty_eval,
    invalid_inputs,
    serialization_error,
    missing_artifact,
    precondition,
};

constexpr std::string_view to_string(errc code) noexcept
{
    switch (code) {
    case errc::malformed_document: return "MalformedDocument";
    case errc::io_error: return "IoError";
    case errc::empty_index: return "EmptyIndex";
    case errc::invalid_config: return "InvalidConfig";
    case errc::span_mismatch: return "SpanMismatch";
    case errc::unknown_function: return "UnknownFunction";
    case errc::schema_violation: return "SchemaViolation";
    case errc::gateway_error: return "GatewayError";
    case errc::empty_graph: return "EmptyGraph";
    case errc::cycle_detected: return "CycleDetected";
    case errc::missing_delta: return "MissingDelta";
    case errc::invalid_record: return "InvalidRecord";
    case errc::empty_store: return "EmptyStore";
    case errc::empty_response: return "EmptyResponse";
    case errc::shape_mismatch: return "ShapeMismatch";
    case errc::provider_error: return "ProviderError";
    case errc::contract_violation: return "ContractViolation";
    case errc::empty_eval: return "EmptyEval";
    case errc::invalid_inputs: return "InvalidInputs";
    case errc::serialization_error: return "SerializationError";
    case errc::missing_artifact: return "MissingArtifact";
    case errc::precondition: return "PreconditionViolation";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class error : public std::runtime_error {
public:
    error(errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

}  // namespace deltaspec
