// Copyright 2026 the f0spoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef F0SPOOF_ERRORS_HPP
#define F0SPOOF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace f0spoof {

// Exit-code contract: 0 success, 1 data error, 2 config error, 3 numeric abort.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionError : DataError {
  explicit DimensionError(const std::string& msg) : DataError(msg) {}
};

}  // namespace f0spoof

#endif  // F0SPOOF_ERRORS_HPP
