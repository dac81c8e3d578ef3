#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cgmrac {

enum class Errc {
    InvalidArgument,
    NotHurwitz,
    SingularSystem,
    NoStabilizingSolution,
    OutOfRange,
    SingularDcGain,
    UnstableAugmentedLoop,
    SingularTransform,
    CompanionFormViolation,
    DegenerateInput,
    ZeroRate,
    EmptyTrace,
    ConfigError,
};

[[nodiscard]] constexpr std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::InvalidArgument: return "InvalidArgument";
        case Errc::NotHurwitz: return "NotHurwitz";
        case Errc::SingularSystem: return "SingularSystem";
        case Errc::NoStabilizingSolution: return "NoStabilizingSolution";
        case Errc::OutOfRange: return "OutOfRange";
        case Errc::SingularDcGain: return "SingularDcGain";
        case Errc::UnstableAugmentedLoop: return "UnstableAugmentedLoop";
        case Errc::SingularTransform: return "SingularTransform";
        case Errc::CompanionFormViolation: return "CompanionFormViolation";
        case Errc::DegenerateInput: return "DegenerateInput";
        case Errc::ZeroRate: return "ZeroRate";
        case Errc::EmptyTrace: return "EmptyTrace";
        case Errc::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    [[nodiscard]] Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace cgmrac
