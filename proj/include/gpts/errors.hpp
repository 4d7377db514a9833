#ifndef GPTS_ERRORS_HPP
#define GPTS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace gpts {

/// Broad failure categories. The CLI maps each one to a distinct exit code.
enum class ErrorCategory {
    parameter = 2,
    input = 3,
    unsupported_kernel = 4,
    degenerate = 5,
    exhausted_tree = 6,
    size = 7,
    regime = 8,
    environment = 9,
    property_failure = 10,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    [[nodiscard]] ErrorCategory category() const noexcept { return category_; }
    [[nodiscard]] int exit_code() const noexcept { return static_cast<int>(category_); }

private:
    ErrorCategory category_;
};

#define GPTS_DEFINE_ERROR(Name, Category)                                             \
    class Name : public Error {                                                       \
    public:                                                                           \
        explicit Name(const std::string& what) : Error(ErrorCategory::Category, what) {} \
    }

GPTS_DEFINE_ERROR(ParameterError, parameter);
GPTS_DEFINE_ERROR(InputError, input);
GPTS_DEFINE_ERROR(UnsupportedKernelError, unsupported_kernel);
GPTS_DEFINE_ERROR(DegenerateError, degenerate);
GPTS_DEFINE_ERROR(ExhaustedTreeError, exhausted_tree);
GPTS_DEFINE_ERROR(SizeError, size);
GPTS_DEFINE_ERROR(RegimeError, regime);
GPTS_DEFINE_ERROR(EnvironmentError, environment);
GPTS_DEFINE_ERROR(PropertyFailure, property_failure);

#undef GPTS_DEFINE_ERROR

inline const char* category_name(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::parameter: return "parameter";
        case ErrorCategory::input: return "input";
        case ErrorCategory::unsupported_kernel: return "unsupported-kernel";
        case ErrorCategory::degenerate: return "degenerate";
        case ErrorCategory::exhausted_tree: return "exhausted-tree";
        case ErrorCategory::size: return "size";
        case ErrorCategory::regime: return "regime";
        case ErrorCategory::environment: return "environment";
        case ErrorCategory::property_failure: return "property-failure";
    }
    return "unknown";
}

}  // namespace gpts

#endif  // GPTS_ERRORS_HPP
