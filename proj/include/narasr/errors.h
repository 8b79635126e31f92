// narasr/errors.h

// Copyright 2026  The nar-asr Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef NARASR_ERRORS_H_
#define NARASR_ERRORS_H_

#include <stdexcept>
#include <string>

namespace narasr {

// Root of every error thrown by the library. The CLI maps NumericFault to
// exit code 3 and everything else to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error { using Error::Error; };
class IndexError : public Error { using Error::Error; };
class ContractError : public Error { using Error::Error; };
class LengthError : public Error { using Error::Error; };
class InputError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class PolicyError : public Error { using Error::Error; };
class SpecError : public Error { using Error::Error; };
class CheckpointError : public Error { using Error::Error; };

// NaN or Inf produced by a forward or backward computation.
class NumericFault : public Error { using Error::Error; };

}  // namespace narasr

#endif  // NARASR_ERRORS_H_
