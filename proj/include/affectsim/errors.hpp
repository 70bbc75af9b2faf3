#pragma once

#include <stdexcept>
#include <string>

namespace affectsim {

// Thrown for malformed or missing configuration (profiles, templates, checkpoints).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Slot or intent not present in the domain schema.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input failed validation; `field` names the offending field when one applies.
class ValidationError : public std::runtime_error {
public:
    ValidationError(const std::string& message, std::string field = {})
        : std::runtime_error(message), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

// Operation invoked in a state where it is not allowed.
class UsageError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class NotFoundError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConflictError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace affectsim
