#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace seqal {

// Every error the library raises derives from Error. The category drives the
// CLI exit code: configuration problems exit 2, data validation problems 3,
// everything else 1.
class Error : public std::runtime_error {
public:
    enum class Category { runtime, config, data };

    explicit Error(const std::string& what, Category category = Category::runtime)
        : std::runtime_error(what), category_(category) {}

    Category category() const noexcept { return category_; }

private:
    Category category_;
};

#define SEQAL_DEFINE_ERROR(Name, Cat)                                  \
    class Name : public Error {                                        \
    public:                                                            \
        explicit Name(const std::string& what)                         \
            : Error(#Name ": " + what, Category::Cat) {}               \
    };

SEQAL_DEFINE_ERROR(NameFormatError, data)
SEQAL_DEFINE_ERROR(ManifestError, data)
SEQAL_DEFINE_ERROR(ContinuityError, data)
SEQAL_DEFINE_ERROR(IoError, runtime)
SEQAL_DEFINE_ERROR(GenError, config)
SEQAL_DEFINE_ERROR(ShapeError, data)
SEQAL_DEFINE_ERROR(MissingRasterError, data)
SEQAL_DEFINE_ERROR(FeatureError, runtime)
SEQAL_DEFINE_ERROR(TraceError, data)
SEQAL_DEFINE_ERROR(DomainError, runtime)
SEQAL_DEFINE_ERROR(EmptyScoreError, runtime)
SEQAL_DEFINE_ERROR(PoolExhaustedError, runtime)
SEQAL_DEFINE_ERROR(MissingScoresError, runtime)
SEQAL_DEFINE_ERROR(UnexpectedScoresError, runtime)
SEQAL_DEFINE_ERROR(EmptyTestError, data)
SEQAL_DEFINE_ERROR(EmptyCurveError, runtime)
SEQAL_DEFINE_ERROR(ModeError, config)
SEQAL_DEFINE_ERROR(ConfigError, config)
SEQAL_DEFINE_ERROR(RunFileError, data)

#undef SEQAL_DEFINE_ERROR

class LineFormatError : public Error {
public:
    LineFormatError(const std::string& what, std::size_t line)
        : Error("LineFormatError: line " + std::to_string(line) + ": " + what, Category::data),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace seqal
