#pragma once

#include <stdexcept>
#include <string>

namespace fedrelax {

// Error categories carried by every exception thrown from this library.
// The CLI maps them onto process exit codes; tests match on them.
enum class errc {
    usage,               // bad command line
    config,              // malformed experiment config
    parameter,           // invalid argument value
    unsupported_spec,    // operation requires a different model class
    size_cap,            // problem exceeds a documented size limit
    parse,               // malformed data file content
    io,                  // missing/unreadable/unwritable file
    validation,          // data invariant violated
    dimension_mismatch,  // feature dimensions disagree
    invalid_node,        // node id out of range
    protocol,            // message referencing a non-edge
    degenerate_fit,      // fit has no usable samples
    numerical,           // non-finite value or failed solve
};

class error : public std::runtime_error {
public:
    error(errc kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    errc kind() const noexcept { return kind_; }

private:
    errc kind_;
};

}  // namespace fedrelax
