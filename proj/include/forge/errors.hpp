// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace forge {

/// Bad configuration, manifest, or other user-supplied input. Exit code 2 at the CLI.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Network failure that survived the retry schedule. Exit code 3 at the CLI.
class TransportError : public std::runtime_error {
 public:
  TransportError(const std::string& what, int last_status)
      : std::runtime_error(what), last_status_(last_status) {}
  /// Last HTTP status observed, or 0 when the connection never completed.
  int last_status() const { return last_status_; }

 private:
  int last_status_ = 0;
};

/// Non-transient HTTP response (4xx other than 429) that retrying cannot fix.
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(const std::string& what, int status)
      : std::runtime_error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_ = 0;
};

}  // namespace forge
