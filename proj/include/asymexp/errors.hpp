#pragma once

#include <stdexcept>
#include <string>

namespace asymexp {

// Base error for everything raised by the library. `code()` is a stable
// machine-readable identifier; the CLI maps codes to exit codes.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string& what) : Error("InvalidArgument", what) {}
};

struct InvalidMetric : Error {
    explicit InvalidMetric(const std::string& what) : Error("InvalidMetric", what) {}
};

struct InvalidEdge : Error {
    explicit InvalidEdge(const std::string& what) : Error("InvalidEdge", what) {}
};

struct DisconnectedGraph : Error {
    explicit DisconnectedGraph(const std::string& what) : Error("DisconnectedGraph", what) {}
};

struct OutOfRange : Error {
    explicit OutOfRange(const std::string& what) : Error("OutOfRange", what) {}
};

struct NoAdjacency : Error {
    explicit NoAdjacency(const std::string& what) : Error("NoAdjacency", what) {}
};

struct GenerationFailed : Error {
    explicit GenerationFailed(const std::string& what) : Error("GenerationFailed", what) {}
};

struct ExactTooLarge : Error {
    explicit ExactTooLarge(const std::string& what) : Error("ExactTooLarge", what) {}
};

struct NoSpectralGap : Error {
    explicit NoSpectralGap(const std::string& what) : Error("NoSpectralGap", what) {}
};

struct DensityViolated : Error {
    explicit DensityViolated(const std::string& what) : Error("DensityViolated", what) {}
};

struct InvalidMap : Error {
    explicit InvalidMap(const std::string& what) : Error("InvalidMap", what) {}
};

struct FormatError : Error {
    explicit FormatError(const std::string& what) : Error("FormatError", what) {}
};

}  // namespace asymexp
