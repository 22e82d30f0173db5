#ifndef REGRASP_ERROR_HPP
#define REGRASP_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace regrasp
{

enum class ErrorCode
{
  EmptyInput,
  EmptyCloud,
  NoCorrespondences,
  RefinementRejected,
  NonFinite,
  InsufficientTrainingData,
  DimensionMismatch,
  InvalidArgument,
  NoHandoverFound,
  NoViewPoseFound,
  Io,
  Config,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable failure code. Pipeline stages catch
/// it and tag the report with the stage that raised it.
class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
  {
  }

  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

}  // namespace regrasp

#endif  // REGRASP_ERROR_HPP
