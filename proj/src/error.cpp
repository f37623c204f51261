#include "surgskill/error.hpp"

namespace surgskill {

const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorKind::NonUniformSampling: return "NonUniformSampling";
    case ErrorKind::TooShort: return "TooShort";
    case ErrorKind::BadWindow: return "BadWindow";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::BinningMismatch: return "BinningMismatch";
    case ErrorKind::InsufficientSubjects: return "InsufficientSubjects";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::DegenerateCluster: return "DegenerateCluster";
    case ErrorKind::WrongModeCount: return "WrongModeCount";
    case ErrorKind::SingularScatter: return "SingularScatter";
    case ErrorKind::InsufficientClasses: return "InsufficientClasses";
    case ErrorKind::UnstableGains: return "UnstableGains";
    case ErrorKind::Divergence: return "Divergence";
    case ErrorKind::BadConfig: return "BadConfig";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace surgskill
