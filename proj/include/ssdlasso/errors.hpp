#pragma once
// Error type shared by the library. Every failure carries a kind so the CLI
// can map it onto an exit code without string matching.

#include <stdexcept>
#include <string>
#include <string_view>

namespace ssdlasso {

enum class ErrorKind {
    NotPsd,
    DimensionMismatch,
    InvalidArgument,
    DegenerateSupport,
    SingularCA,
    ZeroUe2,
    EmptySupportSet,
    NonPositiveStep,
    TooManySigns,
    InvalidC,
    DegenerateK,
    OddN,
    ColumnBudget,
    TooManyBlocks,
    InfeasibleConstraints,
    EmptyPool,
    NonFinite,
    Parse,
    Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool ok, ErrorKind kind, const std::string& what) {
    if (!ok) fail(kind, what);
}

}  // namespace ssdlasso
