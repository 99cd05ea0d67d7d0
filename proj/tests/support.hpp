#pragma once

#include <doctest.h>

#include "kinverify/error.hpp"

namespace support {

/// Runs `fn` and returns the category of the kinverify::Error it throws.
template <class F>
kinverify::ErrorCode error_of(F&& fn) {
    try {
        fn();
    } catch (const kinverify::Error& e) {
        return e.code();
    }
    FAIL("expected a kinverify::Error");
    return kinverify::ErrorCode::io;
}

}  // namespace support
