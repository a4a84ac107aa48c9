#pragma once

#include <stdexcept>
#include <string>

namespace hcsaddle {

enum class ErrorCode {
  kInvalidMesh,
  kLayout,
  kParameter,
  kDimension,
  kBreakdown,
  kMaxIterations,
  kContract,
  kFactorization,
  kVerification,
  kIo,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hcsaddle
