#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace mcf {

// Base of every structured error raised by the library. kind() is the stable
// identifier printed in CLI diagnostics.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class DegenerateMetric : public Error {
public:
    DegenerateMetric(std::size_t node, double det_g)
        : Error("DegenerateMetric", "det g = " + std::to_string(det_g) + " at node " +
                                        std::to_string(node)),
          node(node), det_g(det_g) {}
    std::size_t node;
    double det_g;
};

class NonFinite : public Error {
public:
    explicit NonFinite(std::size_t node)
        : Error("NonFinite", "non-finite coordinate at node " + std::to_string(node)),
          node(node) {}
    std::size_t node;
};

class InsufficientData : public Error {
public:
    explicit InsufficientData(const std::string& what) : Error("InsufficientData", what) {}
};

// Raised with the first time at which a recorded state stops being a graph.
class GraphLost : public Error {
public:
    explicit GraphLost(double t)
        : Error("GraphLost", "graph condition *omega1 > 0 lost at t = " + std::to_string(t)),
          t(t) {}
    double t;
};

class UnwrapAmbiguity : public Error {
public:
    UnwrapAmbiguity(std::size_t node, std::size_t neighbor, double jump)
        : Error("UnwrapAmbiguity", "phase jump " + std::to_string(jump) + " between nodes " +
                                       std::to_string(node) + " and " +
                                       std::to_string(neighbor)),
          node(node), neighbor(neighbor), jump(jump) {}
    std::size_t node;
    std::size_t neighbor;
    double jump;
};

class KBelowMu : public Error {
public:
    KBelowMu(double t, double min_mu, double k)
        : Error("KBelowMu", "min mu = " + std::to_string(min_mu) + " <= k = " +
                                std::to_string(k) + " at t = " + std::to_string(t)),
          t(t) {}
    double t;
};

class TimeOrder : public Error {
public:
    TimeOrder(double t, double t0)
        : Error("TimeOrder", "evaluation time " + std::to_string(t) +
                                 " is not before t0 = " + std::to_string(t0)) {}
};

class AmbientUnsupported : public Error {
public:
    explicit AmbientUnsupported(const std::string& what) : Error("AmbientUnsupported", what) {}
};

class RadiusTooSmall : public Error {
public:
    RadiusTooSmall(double r, double min_r)
        : Error("RadiusTooSmall", "radius " + std::to_string(r) + " must exceed " +
                                      std::to_string(min_r)) {}
};

class MarginViolated : public Error {
public:
    MarginViolated(std::size_t node, double value, double margin)
        : Error("MarginViolated", "graph margin " + std::to_string(value) + " < " +
                                      std::to_string(margin) + " at node " +
                                      std::to_string(node)),
          node(node) {}
    std::size_t node;
};

class PhaseMarginViolated : public Error {
public:
    PhaseMarginViolated(std::size_t node, double cos_theta)
        : Error("PhaseMarginViolated", "cos(theta) = " + std::to_string(cos_theta) +
                                           " <= 0 at node " + std::to_string(node)),
          node(node) {}
    std::size_t node;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& message)
        : Error("ParseError", "line " + std::to_string(line) + ": " + message), line(line) {}
    std::size_t line;
};

class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& constraint)
        : Error("ValidationError", field + ": " + constraint), field(std::move(field)) {}
    std::string field;
};

class VersionMismatch : public Error {
public:
    VersionMismatch(long found, long expected)
        : Error("VersionMismatch", "format_version " + std::to_string(found) +
                                       " (expected " + std::to_string(expected) + ")") {}
};

}  // namespace mcf
