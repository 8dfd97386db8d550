/*
 * Copyright 2026 The ITD Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace itd {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated (bad shape, bad weights, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A numerical routine failed to reach a valid answer.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Wire-level failure: bad frame, unknown tag, version mismatch.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace itd
