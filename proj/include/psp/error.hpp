#pragma once

#include <stdexcept>
#include <string>

namespace psp {

struct SourceLoc {
    int line = 0;
    int col = 0;
    bool valid() const { return line > 0; }
};

// All pipeline failures funnel through this type so the CLI can map them
// to diagnostics and exit codes uniformly.
class Error : public std::runtime_error {
public:
    enum class Kind { Lex, Parse, Validate, Unroll, Inference, Io };

    Error(Kind kind, std::string message, SourceLoc loc = {})
        : std::runtime_error(format(kind, message, loc)),
          kind_(kind), loc_(loc), message_(std::move(message)) {}

    Kind kind() const { return kind_; }
    SourceLoc loc() const { return loc_; }
    const std::string& message() const { return message_; }

    static const char* kind_name(Kind k) {
        switch (k) {
            case Kind::Lex: return "lex error";
            case Kind::Parse: return "parse error";
            case Kind::Validate: return "validation error";
            case Kind::Unroll: return "unroll error";
            case Kind::Inference: return "inference error";
            case Kind::Io: return "io error";
        }
        return "error";
    }

private:
    static std::string format(Kind kind, const std::string& message, SourceLoc loc) {
        std::string out = kind_name(kind);
        if (loc.valid()) {
            out += " at " + std::to_string(loc.line) + ":" + std::to_string(loc.col);
        }
        out += ": ";
        out += message;
        return out;
    }

    Kind kind_;
    SourceLoc loc_;
    std::string message_;
};

[[noreturn]] inline void fail(Error::Kind kind, std::string message, SourceLoc loc = {}) {
    throw Error(kind, std::move(message), loc);
}

} // namespace psp
