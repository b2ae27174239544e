#pragma once

#include <stdexcept>
#include <string>

namespace cesim {

/// Base class for every error raised by the library.
class SimError : public std::runtime_error {
public:
    explicit SimError(const std::string& what) : std::runtime_error(what) {}
};

// Asset algebra
struct DomainError : SimError { using SimError::SimError; };
struct SpecMismatch : SimError { using SimError::SimError; };
struct InsufficientCapacity : SimError { using SimError::SimError; };
struct OverRelease : SimError { using SimError::SimError; };

// Environment graphs
struct DuplicateId : SimError { using SimError::SimError; };
struct UnknownEndpoint : SimError { using SimError::SimError; };
struct BrokenPath : SimError { using SimError::SimError; };
struct UnknownNode : SimError { using SimError::SimError; };
struct InvalidParams : SimError { using SimError::SimError; };

// Simulation graph
struct CycleError : SimError { using SimError::SimError; };
struct OrphanEvent : SimError { using SimError::SimError; };
struct MultiParentCallback : SimError { using SimError::SimError; };
struct UnknownTrigger : SimError { using SimError::SimError; };
struct NotManual : SimError { using SimError::SimError; };

// Emulation
struct AlreadyDeployed : SimError { using SimError::SimError; };
struct NotDeployed : SimError { using SimError::SimError; };
struct NoRoute : SimError { using SimError::SimError; };
struct DstUnavailable : SimError { using SimError::SimError; };

// IO / configuration
struct IoError : SimError { using SimError::SimError; };
struct ParseError : SimError { using SimError::SimError; };

} // namespace cesim
