#pragma once

#include <stdexcept>
#include <string>

namespace pcrm {

/// Base class of every error raised by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class dimension_mismatch : public error {
public:
    using error::error;
};

/// b is not in the range of A (beyond the consistency tolerance).
class inconsistent_system : public error {
public:
    using error::error;
};

/// The stacked system of all blocks has no solution.
class empty_intersection : public error {
public:
    using error::error;
};

/// Circumcenter Gram system is not consistent; inputs were not produced by reflections.
class degenerate_system : public error {
public:
    using error::error;
};

class invalid_weights : public error {
public:
    using error::error;
};

class invalid_coherence : public error {
public:
    using error::error;
};

class missing_reference : public error {
public:
    using error::error;
};

class numerical_breakdown : public error {
public:
    using error::error;
};

class insufficient_data : public error {
public:
    using error::error;
};

namespace detail {

inline void require_dims(bool ok, const std::string& where, const std::string& what)
{
    if (!ok)
        throw dimension_mismatch(where + ": " + what);
}

} // namespace detail
} // namespace pcrm
