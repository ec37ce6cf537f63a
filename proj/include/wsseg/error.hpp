// Copyright 2026 The wsseg authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace wsseg {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed on-disk data: manifest, archive, checkpoint, image file.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration or argument value.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A pipeline step was invoked before the artifacts it needs exist.
class PrerequisiteError : public Error {
public:
    using Error::Error;
};

/// Filesystem-level failure (unreadable / unwritable path).
class IoError : public Error {
public:
    using Error::Error;
};

namespace detail {
[[noreturn]] inline void check_failed(const char* expr, const std::string& msg) {
    throw Error(msg.empty() ? std::string("check failed: ") + expr : msg);
}
}  // namespace detail

#define WSSEG_CHECK(cond, msg)                             \
    do {                                                   \
        if (!(cond)) ::wsseg::detail::check_failed(#cond, (msg)); \
    } while (0)

}  // namespace wsseg
