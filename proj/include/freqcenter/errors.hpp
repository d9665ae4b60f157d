#pragma once

#include <stdexcept>
#include <string>

namespace freqcenter {

/// Base for every error raised by the library. The kind maps onto the CLI exit
/// codes (usage = 1, io = 2, numeric = 3).
class Error : public std::runtime_error {
public:
    enum class Kind { usage, io, numeric };

    Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

    int exit_code() const noexcept {
        switch (kind_) {
            case Kind::usage: return 1;
            case Kind::io: return 2;
            case Kind::numeric: return 3;
        }
        return 1;
    }

private:
    Kind kind_;
};

struct UsageError : Error {
    explicit UsageError(const std::string& what) : Error(Kind::usage, what) {}
};

struct IoError : Error {
    explicit IoError(const std::string& what) : Error(Kind::io, what) {}
};

struct NumericError : Error {
    explicit NumericError(const std::string& what) : Error(Kind::numeric, what) {}
};

}  // namespace freqcenter
