// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fusecast {

enum class ErrorCode {
    CapacityExceeded,
    DanglingControlGroup,
    DuplicateChannel,
    BadDimensions,
    InvalidChannelId,
    InvalidTickRate,
    DimensionsTooSmall,
    UndecodableRegion,
    FileUnreadable,
    SinkClosed,
    UnknownChannel,
    InvalidLayout,
    MalformedCommand,
    Unauthorized,
    AckTimeout,
    EncodeFailure,
    DecodeFailure,
    BindFailure,
    ConnectFailure,
    SetupFailure,
    EmptySeries,
    IoError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace fusecast
