#ifndef NLSIP_ERROR_HPP
#define NLSIP_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace nlsip {

/// Failure categories raised by the library. Every operation documents which
/// of these it can produce.
enum class errc {
    parameter,
    resolution,
    consistency,
    domain,
    singular_functional,
    no_convergence,
    convergence,
    numerical,
    stability,
    truncation,
    insufficient_data,
    precondition,
    not_applicable,
    regrid,
    generation,
    stagnation,
    config
};

inline std::string_view to_string(errc code) {
    switch (code) {
        case errc::parameter: return "parameter";
        case errc::resolution: return "resolution";
        case errc::consistency: return "consistency";
        case errc::domain: return "domain";
        case errc::singular_functional: return "singular-functional";
        case errc::no_convergence: return "no-convergence";
        case errc::convergence: return "convergence";
        case errc::numerical: return "numerical";
        case errc::stability: return "stability";
        case errc::truncation: return "truncation";
        case errc::insufficient_data: return "insufficient-data";
        case errc::precondition: return "precondition";
        case errc::not_applicable: return "not-applicable";
        case errc::regrid: return "regrid";
        case errc::generation: return "generation";
        case errc::stagnation: return "stagnation";
        case errc::config: return "config";
    }
    return "unknown";
}

class error : public std::runtime_error {
public:
    error(errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + " error: " + what), code_(code), detail_(what) {}

    errc code() const noexcept { return code_; }
    /// Message without the category prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    errc code_;
    std::string detail_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) {
    throw error(code, what);
}

inline void require(bool condition, errc code, const std::string& what) {
    if (!condition) {
        fail(code, what);
    }
}

} // namespace nlsip

#endif
