#pragma once

#include <stdexcept>
#include <string>

namespace locband {

enum class Errc {
    unsupported_moment,
    invalid_kernel,
    invalid_tolerance,
    invalid_interval,
    invalid_bandwidth,
    empty_bandwidth_grid,
    invalid_constants,
    invalid_mesh,
    invalid_probability,
    invalid_exponent,
    unbounded_constant,
    construction_overlap,
    corrupt_density,
    oracle_unavailable,
    divergence_infinite,
    insufficient_data,
    off_mesh,
    cross_sample_contamination,
    out_of_domain,
    invalid_configuration,
    unknown_density,
    parse_error,
};

inline const char* errc_name(Errc e)
{
    switch (e) {
    case Errc::unsupported_moment: return "unsupported-moment";
    case Errc::invalid_kernel: return "invalid-kernel";
    case Errc::invalid_tolerance: return "invalid-tolerance";
    case Errc::invalid_interval: return "invalid-interval";
    case Errc::invalid_bandwidth: return "invalid-bandwidth";
    case Errc::empty_bandwidth_grid: return "empty-bandwidth-grid";
    case Errc::invalid_constants: return "invalid-constants";
    case Errc::invalid_mesh: return "invalid-mesh";
    case Errc::invalid_probability: return "invalid-probability";
    case Errc::invalid_exponent: return "invalid-exponent";
    case Errc::unbounded_constant: return "unbounded-constant";
    case Errc::construction_overlap: return "construction-overlap";
    case Errc::corrupt_density: return "corrupt-density";
    case Errc::oracle_unavailable: return "oracle-unavailable";
    case Errc::divergence_infinite: return "divergence-infinite";
    case Errc::insufficient_data: return "insufficient-data";
    case Errc::off_mesh: return "off-mesh";
    case Errc::cross_sample_contamination: return "cross-sample-contamination";
    case Errc::out_of_domain: return "out-of-domain";
    case Errc::invalid_configuration: return "invalid-configuration";
    case Errc::unknown_density: return "unknown-density";
    case Errc::parse_error: return "parse-error";
    }
    return "unknown";
}

//! Exception carrying a machine-readable error kind.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code)
    {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace locband
