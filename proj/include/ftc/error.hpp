#pragma once

#include <stdexcept>
#include <string>

namespace ftc {

// Error categories map onto CLI exit codes (see tools/).
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// Simulation left the finite regime (integration blow-up, controller divergence).
struct divergence_error : std::runtime_error {
    explicit divergence_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ftc
