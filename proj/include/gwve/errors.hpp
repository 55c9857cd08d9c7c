#pragma once

#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gwve {

// Shortest round-trip decimal form; "inf", "-inf" and "nan" for non-finite values.
inline std::string fmt_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

enum class errc {
    invalid_argument,
    parse_error,
    non_integrable,
    invariant_violation,
    truncation_loss,
    beta_atom_forbidden,
    tail_not_closed,
    mesh_mismatch,
    hypothesis_violated,
    probe_point_on_atom,
    non_positive_input,
    unknown_kind,
    unclassifiable,
    no_convergence,
    all_paths_overflowed,
    possible_bottleneck,
};

inline const char* to_string(errc c) noexcept {
    switch (c) {
    case errc::invalid_argument: return "InvalidArgument";
    case errc::parse_error: return "ParseError";
    case errc::non_integrable: return "NonIntegrable";
    case errc::invariant_violation: return "InvariantViolation";
    case errc::truncation_loss: return "TruncationLoss";
    case errc::beta_atom_forbidden: return "BetaAtomForbidden";
    case errc::tail_not_closed: return "TailNotClosed";
    case errc::mesh_mismatch: return "MeshMismatch";
    case errc::hypothesis_violated: return "HypothesisViolated";
    case errc::probe_point_on_atom: return "ProbePointOnAtom";
    case errc::non_positive_input: return "NonPositiveInput";
    case errc::unknown_kind: return "UnknownKind";
    case errc::unclassifiable: return "Unclassifiable";
    case errc::no_convergence: return "NoConvergence";
    case errc::all_paths_overflowed: return "AllPathsOverflowed";
    case errc::possible_bottleneck: return "PossibleBottleneck";
    }
    return "Unknown";
}

// Process exit status used by the command line front end.
inline int exit_code(errc c) noexcept {
    switch (c) {
    case errc::no_convergence:
    case errc::all_paths_overflowed:
        return 3;
    case errc::possible_bottleneck:
        return 4;
    default:
        return 2;
    }
}

class error : public std::runtime_error {
public:
    error(errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

    errc code() const noexcept { return code_; }
    // message without the code prefix
    const std::string& detail() const noexcept { return detail_; }

private:
    errc code_;
    std::string detail_;
};

inline void require(bool ok, errc code, const std::string& what) {
    if (!ok) throw error(code, what);
}

} // namespace gwve
