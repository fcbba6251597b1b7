#ifndef IRAE_ERROR_HPP
#define IRAE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace irae {

/// Broad failure category, used by the command line tool to pick an exit code.
enum class ErrorKind {
  data,       // malformed record, unknown key, bad value inside an input file
  input,      // missing or unreadable input
  config,     // configuration failed validation
  invariant,  // internal consistency check failed
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error data_error(const std::string& what) { return Error(ErrorKind::data, what); }
inline Error input_error(const std::string& what) { return Error(ErrorKind::input, what); }
inline Error config_error(const std::string& what) { return Error(ErrorKind::config, what); }
inline Error invariant_error(const std::string& what) { return Error(ErrorKind::invariant, what); }

}  // namespace irae

#endif
