#pragma once

#include <stdexcept>
#include <string>

namespace articraft {

// Kernel-level failure with a stable machine-readable code. The asset
// language and validation layers catch these and turn them into diagnostics
// or findings; codes are part of the observable contract.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const { return code_; }

private:
    std::string code_;
};

}  // namespace articraft
