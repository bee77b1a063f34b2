// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fusecast/image.hpp"

namespace fusecast {

/// Throws Error(EncodeFailure).
std::vector<std::uint8_t> encode_jpeg(ImageView image, int quality);
/// Throws Error(DecodeFailure).
Image decode_jpeg(std::span<const std::uint8_t> data);

} // namespace fusecast
