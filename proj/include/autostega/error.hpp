#pragma once

#include <stdexcept>
#include <string>

namespace autostega {

// Error categories map 1:1 onto CLI exit codes.
enum class ErrorKind {
  Config = 2,     // bad parameters, missing files, schema violations
  Data = 3,       // desynchronization, corrupt or truncated inputs
  Transport = 4,  // remote endpoint failures
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const { return kind_; }
  int exit_code() const { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

inline Error config_error(std::string msg) { return Error(ErrorKind::Config, std::move(msg)); }
inline Error data_error(std::string msg) { return Error(ErrorKind::Data, std::move(msg)); }
inline Error transport_error(std::string msg) { return Error(ErrorKind::Transport, std::move(msg)); }

}  // namespace autostega
