#pragma once

#include <stdexcept>
#include <string>

namespace ncnd {

struct NcndError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// No routing exists under the stated capacities (or instance is disconnected).
struct InfeasibleError : NcndError {
    using NcndError::NcndError;
};

/// A flow handed to an operation violates conservation or acyclicity.
struct MalformedFlowError : NcndError {
    using NcndError::NcndError;
};

/// A solution handed to a lift violates the reduced-instance structure.
struct MalformedSolutionError : NcndError {
    using NcndError::NcndError;
};

/// An oracle ran out of its enumeration budget.
struct ExhaustedError : NcndError {
    using NcndError::NcndError;
};

/// A clustering iteration made no progress.
struct PhaseStallError : NcndError {
    using NcndError::NcndError;
};

/// The outer MCNC loop exceeded its iteration cap.
struct OuterStallError : NcndError {
    using NcndError::NcndError;
};

/// The sampled pairs cannot carry the demands of a component (w.h.p. branch).
struct SparsifierFailure : NcndError {
    using NcndError::NcndError;
};

/// A bipartition was requested where no crossing demand exists.
struct DegenerateError : NcndError {
    using NcndError::NcndError;
};

}  // namespace ncnd
