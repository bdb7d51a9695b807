#pragma once

#include <stdexcept>
#include <string>

namespace aggrecon {

// Base of every error thrown by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class schema_error : public error {
public:
    using error::error;
};

class invalid_argument_error : public error {
public:
    using error::error;
};

class io_error : public error {
public:
    using error::error;
};

class unsupported_error : public error {
public:
    using error::error;
};

// Wraps an error with the pipeline stage that raised it ("reconstruct", "train", ...).
class stage_error : public error {
public:
    stage_error(std::string stage, const std::string& what)
        : error("[" + stage + "] " + what), stage_(std::move(stage)) {}

    [[nodiscard]] const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

} // namespace aggrecon
