#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace firesight {

enum class Errc {
    SizeMismatch,
    ZeroDimension,
    WrongFormat,
    PathNotFound,
    MalformedFrameFile,
    MalformedScript,
    NotSynthetic,
    BackendFailure,
    BoxOutOfBounds,
    MalformedMask,
    BadRange,
    InvalidDepth,
    OutOfImage,
    NonPositiveZ,
    IntrinsicsMismatch,
    StorageFailure,
    NotFound,
    EncodeFailure,
    InvalidConfig,
    InvalidArgument,
    BindFailure,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
    throw Error(code, what);
}

}  // namespace firesight
