#pragma once

#include <stdexcept>
#include <string>

namespace platoon {

// Error taxonomy. Every failure mode callers are expected to handle gets its
// own type so the CLI can map input problems to exit code 2 and infeasible
// planning problems to exit code 3.

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input data (bad JSON, schema violations,
// assignments referencing unknown nodes, non-monotone altitude offsets).
struct ParseError : Error {
    using Error::Error;
};

// Query outside the defined domain of an object (position past the end of a
// route, negative time gap, speed outside the admissible interval).
struct RangeError : Error {
    using Error::Error;
};

// Route nodes that are not connected by segments in the network.
struct ConnectivityError : Error {
    using Error::Error;
};

// Violated operating constraint (power demand above the rated maximum,
// inconsistent boundary velocities).
struct ConstraintError : Error {
    using Error::Error;
};

// A passage log does not cover the queried position yet.
struct InsufficientHistoryError : Error {
    using Error::Error;
};

// Trajectory records do not share a common distance window.
struct WindowError : Error {
    using Error::Error;
};

// No feasible solution exists for a planning problem. Carries a description
// of the explored bracket so callers can see how the search failed.
struct InfeasibleError : Error {
    using Error::Error;
};

// Inter-vehicle spacing collapsed during closed-loop simulation.
struct SafetyViolationError : Error {
    using Error::Error;
};

// Two vehicles on constant-speed plans never meet (equal speeds or the
// faster one already ahead).
struct NoMergeError : Error {
    using Error::Error;
};

}  // namespace platoon
