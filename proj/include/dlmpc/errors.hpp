#pragma once

#include <stdexcept>
#include <string>

namespace dlmpc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

#define DLMPC_DEFINE_ERROR(Name)                 \
  class Name : public Error                      \
  {                                              \
  public:                                        \
    using Error::Error;                          \
  }

DLMPC_DEFINE_ERROR(DynamicsMismatch);
DLMPC_DEFINE_ERROR(IndexOutOfRange);
DLMPC_DEFINE_ERROR(EmptyDataset);
DLMPC_DEFINE_ERROR(SynthesisExhausted);
DLMPC_DEFINE_ERROR(NotInSafeSet);
DLMPC_DEFINE_ERROR(LengthMismatch);
DLMPC_DEFINE_ERROR(AllPruned);
DLMPC_DEFINE_ERROR(NoFeasibleCandidate);
DLMPC_DEFINE_ERROR(NoPreviousSolution);
DLMPC_DEFINE_ERROR(ScenarioInfeasible);
DLMPC_DEFINE_ERROR(ConfigError);
DLMPC_DEFINE_ERROR(MissingArtifact);

#undef DLMPC_DEFINE_ERROR

}  // namespace dlmpc
