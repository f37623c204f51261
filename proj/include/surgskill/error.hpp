#pragma once

#include <stdexcept>
#include <string>

namespace surgskill {

enum class ErrorKind {
  MalformedRow,
  NonMonotonicTime,
  NonUniformSampling,
  TooShort,
  BadWindow,
  EmptyInput,
  BinningMismatch,
  InsufficientSubjects,
  RankDeficient,
  DegenerateCluster,
  WrongModeCount,
  SingularScatter,
  InsufficientClasses,
  UnstableGains,
  Divergence,
  BadConfig,
  Io,
};

const char* to_string(ErrorKind k);

class AnalysisError : public std::runtime_error {
 public:
  AnalysisError(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace surgskill
