/*
 * Copyright 2026 The specnorm authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SPECNORM_BUNDLE_HPP
#define SPECNORM_BUNDLE_HPP

#include <string>
#include <vector>

#include "specnorm/normalize.hpp"

namespace specnorm {

/* On-disk layer collection: a line-based manifest plus one raw binary
 * blob per layer (little-endian float32, channel-major then row-major).
 *
 *   specnorm-bundle 1
 *
 *   layer dw1
 *   kind depthwise
 *   dims 2
 *   channels 32
 *   kernel 3 3
 *   spatial 64 64
 *   stride 1 1
 *   activation-lip 1
 *   policy soft 5 3
 *   data dw1.bin 288
 *   bias dw1.bias.bin 32
 *   end
 *
 * Pointwise and dense layers declare `channels <out> <in>`; kernel and
 * stride lines apply to depthwise layers only, spatial is required for
 * depthwise and optional for pointwise. Blob paths are relative to the
 * manifest. Every declared element count must match both the declared
 * shape and the blob's byte length. */
struct KernelBundle {
    int version = 1;
    std::vector<LayerRecord> layers;
};

constexpr int kBundleFormatVersion = 1;

/* Parses the manifest and loads every referenced blob. Throws
 * bundle_parse_error for malformed manifests or unreadable blobs,
 * shape_mismatch for count mismatches, non_finite_entry for bad data. */
KernelBundle read_bundle(const std::string &manifest_path);

/* Writes the manifest and all blobs next to it. A read followed by an
 * untransformed write reproduces the payload blobs byte for byte. */
void write_bundle(const KernelBundle &bundle, const std::string &manifest_path);

std::vector<float> payload_as_floats(const LayerRecord &layer);

} // namespace specnorm

#endif
