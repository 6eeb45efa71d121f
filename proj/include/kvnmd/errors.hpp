#pragma once

#include <stdexcept>
#include <string>

namespace kvnmd {

// Raised when a requested computation exceeds a configured size budget, as
// opposed to being malformed.  Callers that want to distinguish "too big"
// from "invalid" can catch this separately.
struct budget_error : std::runtime_error {
    explicit budget_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace kvnmd
