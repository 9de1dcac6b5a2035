// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace rastp {

/// Base exception for every recoverable failure in the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) {
        throw Error(message);
    }
}

}  // namespace rastp
