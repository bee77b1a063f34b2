// SPDX-License-Identifier: Apache-2.0
#include "fusecast/error.hpp"

namespace fusecast {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::CapacityExceeded: return "CapacityExceeded";
    case ErrorCode::DanglingControlGroup: return "DanglingControlGroup";
    case ErrorCode::DuplicateChannel: return "DuplicateChannel";
    case ErrorCode::BadDimensions: return "BadDimensions";
    case ErrorCode::InvalidChannelId: return "InvalidChannelId";
    case ErrorCode::InvalidTickRate: return "InvalidTickRate";
    case ErrorCode::DimensionsTooSmall: return "DimensionsTooSmall";
    case ErrorCode::UndecodableRegion: return "UndecodableRegion";
    case ErrorCode::FileUnreadable: return "FileUnreadable";
    case ErrorCode::SinkClosed: return "SinkClosed";
    case ErrorCode::UnknownChannel: return "UnknownChannel";
    case ErrorCode::InvalidLayout: return "InvalidLayout";
    case ErrorCode::MalformedCommand: return "MalformedCommand";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::AckTimeout: return "AckTimeout";
    case ErrorCode::EncodeFailure: return "EncodeFailure";
    case ErrorCode::DecodeFailure: return "DecodeFailure";
    case ErrorCode::BindFailure: return "BindFailure";
    case ErrorCode::ConnectFailure: return "ConnectFailure";
    case ErrorCode::SetupFailure: return "SetupFailure";
    case ErrorCode::EmptySeries: return "EmptySeries";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

} // namespace fusecast
