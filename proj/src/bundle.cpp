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

#include "specnorm/bundle.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace specnorm {

namespace {

namespace fs = std::filesystem;

[[noreturn]] void parse_fail(std::size_t line, const std::string &message) {
    throw Error(ErrorCode::bundle_parse_error,
                "manifest line " + std::to_string(line) + ": " + message);
}

bool valid_name(const std::string &name) {
    if (name.empty())
        return false;
    for (char c : name)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' &&
            c != '-' && c != '.')
            return false;
    return true;
}

std::vector<std::string> split_fields(const std::string &line) {
    std::vector<std::string> fields;
    std::istringstream in(line);
    std::string field;
    while (in >> field)
        fields.push_back(field);
    return fields;
}

std::int64_t parse_count(const std::string &text, std::size_t line) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(text, &used);
        if (used != text.size() || v < 0)
            parse_fail(line, "expected a non-negative integer, got '" + text + "'");
        return v;
    } catch (const Error &) {
        throw;
    } catch (const std::exception &) {
        parse_fail(line, "expected an integer, got '" + text + "'");
    }
}

double parse_real(const std::string &text, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size())
            parse_fail(line, "expected a number, got '" + text + "'");
        return v;
    } catch (const Error &) {
        throw;
    } catch (const std::exception &) {
        parse_fail(line, "expected a number, got '" + text + "'");
    }
}

struct BlobRef {
    std::string path;
    std::int64_t count = 0;
};

struct RawLayer {
    std::string name;
    std::size_t line = 0;
    std::map<std::string, std::vector<std::string>> keys;
    std::map<std::string, std::size_t> key_lines;
};

std::vector<double> read_blob(const fs::path &path, std::int64_t count,
                              const std::string &layer) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::bundle_parse_error,
                    "layer '" + layer + "': cannot open blob " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    if (static_cast<std::int64_t>(bytes.size()) != count * 4)
        throw Error(ErrorCode::shape_mismatch,
                    "layer '" + layer + "': blob " + path.string() + " holds " +
                        std::to_string(bytes.size() / 4) +
                        " float32 values, manifest declares " +
                        std::to_string(count));
    std::vector<double> values(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) {
        const auto *b =
            reinterpret_cast<const unsigned char *>(bytes.data() + i * 4);
        const std::uint32_t word = static_cast<std::uint32_t>(b[0]) |
                                   (static_cast<std::uint32_t>(b[1]) << 8) |
                                   (static_cast<std::uint32_t>(b[2]) << 16) |
                                   (static_cast<std::uint32_t>(b[3]) << 24);
        values[static_cast<std::size_t>(i)] =
            static_cast<double>(std::bit_cast<float>(word));
    }
    return values;
}

void write_blob(const fs::path &path, const std::vector<float> &values) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorCode::io_error, "cannot write blob " + path.string());
    for (float v : values) {
        const std::uint32_t word = std::bit_cast<std::uint32_t>(v);
        const unsigned char b[4] = {
            static_cast<unsigned char>(word),
            static_cast<unsigned char>(word >> 8),
            static_cast<unsigned char>(word >> 16),
            static_cast<unsigned char>(word >> 24),
        };
        out.write(reinterpret_cast<const char *>(b), 4);
    }
    if (!out)
        throw Error(ErrorCode::io_error, "failed writing blob " + path.string());
}

const std::vector<std::string> &require_key(const RawLayer &raw,
                                            const std::string &key) {
    auto it = raw.keys.find(key);
    if (it == raw.keys.end())
        parse_fail(raw.line, "layer '" + raw.name + "' is missing '" + key + "'");
    return it->second;
}

void forbid_key(const RawLayer &raw, const std::string &key,
                const std::string &why) {
    auto it = raw.keys.find(key);
    if (it != raw.keys.end())
        parse_fail(raw.key_lines.at(key),
                   "'" + key + "' is not allowed for " + why);
}

Extents parse_extents(const RawLayer &raw, const std::string &key,
                      std::size_t expected) {
    const std::vector<std::string> &fields = require_key(raw, key);
    if (fields.size() != expected)
        parse_fail(raw.key_lines.at(key),
                   "'" + key + "' needs " + std::to_string(expected) +
                       " value(s)");
    Extents out;
    for (const std::string &f : fields)
        out.push_back(parse_count(f, raw.key_lines.at(key)));
    return out;
}

LayerRecord build_layer(const RawLayer &raw, const fs::path &base) {
    LayerRecord layer;
    layer.name = raw.name;

    const std::vector<std::string> &kind = require_key(raw, "kind");
    if (kind.size() != 1)
        parse_fail(raw.key_lines.at("kind"), "'kind' takes one value");
    if (kind[0] == "depthwise")
        layer.kind = LayerKind::depthwise;
    else if (kind[0] == "pointwise")
        layer.kind = LayerKind::pointwise;
    else if (kind[0] == "dense")
        layer.kind = LayerKind::dense;
    else
        parse_fail(raw.key_lines.at("kind"), "unknown kind '" + kind[0] + "'");

    if (auto it = raw.keys.find("activation-lip"); it != raw.keys.end()) {
        if (it->second.size() != 1)
            parse_fail(raw.key_lines.at("activation-lip"),
                       "'activation-lip' takes one value");
        layer.activation_lip =
            parse_real(it->second[0], raw.key_lines.at("activation-lip"));
        if (layer.activation_lip < 0.0)
            parse_fail(raw.key_lines.at("activation-lip"),
                       "'activation-lip' must be non-negative");
    }

    if (auto it = raw.keys.find("policy"); it != raw.keys.end()) {
        const std::size_t at = raw.key_lines.at("policy");
        const std::vector<std::string> &f = it->second;
        ScalingPolicy policy;
        if (f.size() == 2 && f[0] == "hard") {
            policy.kind = ScalingKind::hard;
        } else if (f.size() == 3 && f[0] == "soft") {
            policy.kind = ScalingKind::soft;
            policy.s = parse_real(f[2], at);
        } else {
            parse_fail(at, "'policy' is 'hard K' or 'soft K s'");
        }
        policy.K = parse_real(f[1], at);
        if (policy.K <= 0.0)
            parse_fail(at, "scaling constant K must be positive");
        layer.policy = policy;
    }

    const std::vector<std::string> &data = require_key(raw, "data");
    if (data.size() != 2)
        parse_fail(raw.key_lines.at("data"), "'data' is '<path> <count>'");
    BlobRef blob{data[0], parse_count(data[1], raw.key_lines.at("data"))};

    std::int64_t expected = 0;
    if (layer.kind == LayerKind::depthwise) {
        const Extents dims = parse_extents(raw, "dims", 1);
        const std::size_t d = static_cast<std::size_t>(dims[0]);
        if (d < 1 || d > 3)
            parse_fail(raw.key_lines.at("dims"), "'dims' must be 1, 2 or 3");
        const Extents channels = parse_extents(raw, "channels", 1);
        const Extents kernel = parse_extents(raw, "kernel", d);
        const Extents spatial = parse_extents(raw, "spatial", d);
        Extents stride(d, 1);
        if (raw.keys.count("stride"))
            stride = parse_extents(raw, "stride", d);

        expected = channels[0] * numel(kernel);
        if (blob.count != expected)
            throw Error(ErrorCode::shape_mismatch,
                        "layer '" + layer.name + "': declared shape needs " +
                            std::to_string(expected) + " values, manifest lists " +
                            std::to_string(blob.count));
        std::vector<double> values = read_blob(base / blob.path, blob.count,
                                               layer.name);

        std::vector<Tensor> filters;
        const std::int64_t per = numel(kernel);
        for (std::int64_t c = 0; c < channels[0]; ++c)
            filters.emplace_back(
                kernel, std::vector<double>(values.begin() + c * per,
                                            values.begin() + (c + 1) * per));
        FilterBank bank = FilterBank::validate(std::move(filters));

        FeatureGeometry geometry;
        geometry.spatial = spatial;
        geometry.pad = bank.pad();
        geometry.stride = stride;
        geometry.padding_mode = PaddingMode::zero;
        validate_geometry(geometry);
        for (std::size_t a = 0; a < d; ++a)
            if (kernel[a] > spatial[a])
                throw Error(ErrorCode::shape_mismatch,
                            "layer '" + layer.name +
                                "': kernel exceeds the spatial extents");
        layer.geometry = geometry;
        layer.payload = std::move(bank);
    } else {
        forbid_key(raw, "kernel", "pointwise/dense layers");
        const Extents channels = parse_extents(raw, "channels", 2);
        if (channels[0] < 1 || channels[1] < 1)
            parse_fail(raw.key_lines.at("channels"),
                       "channel counts must be positive");
        expected = channels[0] * channels[1];
        if (blob.count != expected)
            throw Error(ErrorCode::shape_mismatch,
                        "layer '" + layer.name + "': declared shape needs " +
                            std::to_string(expected) + " values, manifest lists " +
                            std::to_string(blob.count));
        std::vector<double> values = read_blob(base / blob.path, blob.count,
                                               layer.name);
        DenseMatrix m;
        m.rows = channels[0];
        m.cols = channels[1];
        m.values = std::move(values);

        if (layer.kind == LayerKind::pointwise) {
            forbid_key(raw, "stride", "pointwise layers");
            layer.payload = ConnectivityMatrix::validate(std::move(m));
            if (raw.keys.count("spatial")) {
                const Extents dims = parse_extents(raw, "dims", 1);
                const std::size_t d = static_cast<std::size_t>(dims[0]);
                if (d < 1 || d > 3)
                    parse_fail(raw.key_lines.at("dims"), "'dims' must be 1, 2 or 3");
                FeatureGeometry geometry;
                geometry.spatial = parse_extents(raw, "spatial", d);
                geometry.pad.assign(d, 0);
                geometry.stride.assign(d, 1);
                geometry.padding_mode = PaddingMode::zero;
                validate_geometry(geometry);
                layer.geometry = geometry;
            }
        } else {
            forbid_key(raw, "dims", "dense layers");
            forbid_key(raw, "spatial", "dense layers");
            forbid_key(raw, "stride", "dense layers");
            for (double v : m.values)
                if (!std::isfinite(v))
                    throw Error(ErrorCode::non_finite_entry,
                                "layer '" + layer.name +
                                    "': matrix entries must be finite");
            layer.payload = std::move(m);
        }
    }

    if (auto it = raw.keys.find("bias"); it != raw.keys.end()) {
        if (it->second.size() != 2)
            parse_fail(raw.key_lines.at("bias"), "'bias' is '<path> <count>'");
        const std::int64_t count =
            parse_count(it->second[1], raw.key_lines.at("bias"));
        const std::vector<double> values =
            read_blob(base / it->second[0], count, layer.name);
        layer.bias.assign(values.begin(), values.end());
    }
    return layer;
}

} // namespace

KernelBundle read_bundle(const std::string &manifest_path) {
    std::ifstream in(manifest_path);
    if (!in)
        throw Error(ErrorCode::bundle_parse_error,
                    "cannot open manifest " + manifest_path);
    const fs::path base = fs::path(manifest_path).parent_path();

    KernelBundle bundle;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    RawLayer current;
    bool in_layer = false;
    std::vector<RawLayer> raw_layers;

    static const std::vector<std::string> known_keys = {
        "kind",   "dims",   "channels",       "kernel", "spatial",
        "stride", "policy", "activation-lip", "data",   "bias"};

    while (std::getline(in, line)) {
        ++line_no;
        std::vector<std::string> fields = split_fields(line);
        if (fields.empty())
            continue;
        if (!have_header) {
            if (fields.size() != 2 || fields[0] != "specnorm-bundle")
                parse_fail(line_no, "expected header 'specnorm-bundle <version>'");
            const std::int64_t version = parse_count(fields[1], line_no);
            if (version != kBundleFormatVersion)
                parse_fail(line_no, "unsupported format version " + fields[1]);
            bundle.version = static_cast<int>(version);
            have_header = true;
            continue;
        }
        if (fields[0] == "layer") {
            if (in_layer)
                parse_fail(line_no, "nested 'layer' before 'end'");
            if (fields.size() != 2 || !valid_name(fields[1]))
                parse_fail(line_no, "'layer' needs one well-formed name");
            current = RawLayer{};
            current.name = fields[1];
            current.line = line_no;
            in_layer = true;
            continue;
        }
        if (fields[0] == "end") {
            if (!in_layer)
                parse_fail(line_no, "'end' outside a layer");
            raw_layers.push_back(std::move(current));
            in_layer = false;
            continue;
        }
        if (!in_layer)
            parse_fail(line_no, "unexpected line outside a layer");
        const std::string &key = fields[0];
        if (std::find(known_keys.begin(), known_keys.end(), key) ==
            known_keys.end())
            parse_fail(line_no, "unknown key '" + key + "'");
        if (current.keys.count(key))
            parse_fail(line_no, "duplicate key '" + key + "'");
        current.keys[key] =
            std::vector<std::string>(fields.begin() + 1, fields.end());
        current.key_lines[key] = line_no;
    }
    if (!have_header)
        throw Error(ErrorCode::bundle_parse_error,
                    "manifest " + manifest_path + " is empty");
    if (in_layer)
        parse_fail(line_no, "unterminated layer '" + current.name + "'");

    for (const RawLayer &raw : raw_layers)
        bundle.layers.push_back(build_layer(raw, base));
    return bundle;
}

std::vector<float> payload_as_floats(const LayerRecord &layer) {
    std::vector<float> out;
    if (layer.kind == LayerKind::depthwise) {
        const FilterBank &bank = layer.bank();
        out.reserve(static_cast<std::size_t>(bank.channels() *
                                             numel(bank.kernel_shape())));
        for (std::int64_t c = 0; c < bank.channels(); ++c)
            for (double v : bank.filter(c).values)
                out.push_back(static_cast<float>(v));
    } else if (layer.kind == LayerKind::pointwise) {
        for (double v : layer.connectivity().entries().values)
            out.push_back(static_cast<float>(v));
    } else {
        for (double v : layer.dense().values)
            out.push_back(static_cast<float>(v));
    }
    return out;
}

void write_bundle(const KernelBundle &bundle, const std::string &manifest_path) {
    const fs::path base = fs::path(manifest_path).parent_path();
    if (!base.empty())
        fs::create_directories(base);

    std::ostringstream manifest;
    manifest << "specnorm-bundle " << bundle.version << "\n";
    for (const LayerRecord &layer : bundle.layers) {
        if (!valid_name(layer.name))
            throw Error(ErrorCode::usage_error,
                        "layer name '" + layer.name + "' is not writable");
        manifest << "\nlayer " << layer.name << "\n";
        manifest << "kind " << to_string(layer.kind) << "\n";

        const std::vector<float> payload = payload_as_floats(layer);
        if (layer.kind == LayerKind::depthwise) {
            const FilterBank &bank = layer.bank();
            manifest << "dims " << bank.dims() << "\n";
            manifest << "channels " << bank.channels() << "\n";
            manifest << "kernel";
            for (std::int64_t e : bank.kernel_shape())
                manifest << " " << e;
            manifest << "\n";
            if (!layer.geometry)
                throw Error(ErrorCode::usage_error,
                            "depthwise layer '" + layer.name +
                                "' is missing its geometry");
            manifest << "spatial";
            for (std::int64_t e : layer.geometry->spatial)
                manifest << " " << e;
            manifest << "\n";
            manifest << "stride";
            for (std::int64_t e : layer.geometry->stride)
                manifest << " " << e;
            manifest << "\n";
        } else {
            const std::int64_t rows = layer.kind == LayerKind::pointwise
                                          ? layer.connectivity().rows()
                                          : layer.dense().rows;
            const std::int64_t cols = layer.kind == LayerKind::pointwise
                                          ? layer.connectivity().cols()
                                          : layer.dense().cols;
            manifest << "channels " << rows << " " << cols << "\n";
            if (layer.kind == LayerKind::pointwise && layer.geometry) {
                manifest << "dims " << layer.geometry->dims() << "\n";
                manifest << "spatial";
                for (std::int64_t e : layer.geometry->spatial)
                    manifest << " " << e;
                manifest << "\n";
            }
        }

        char buffer[64];
        std::snprintf(buffer, sizeof(buffer), "%.17g", layer.activation_lip);
        manifest << "activation-lip " << buffer << "\n";
        if (layer.policy) {
            std::snprintf(buffer, sizeof(buffer), "%.17g", layer.policy->K);
            if (layer.policy->kind == ScalingKind::hard) {
                manifest << "policy hard " << buffer << "\n";
            } else {
                manifest << "policy soft " << buffer;
                std::snprintf(buffer, sizeof(buffer), "%.17g", layer.policy->s);
                manifest << " " << buffer << "\n";
            }
        }

        const std::string blob_name = layer.name + ".bin";
        write_blob(base / blob_name, payload);
        manifest << "data " << blob_name << " " << payload.size() << "\n";
        if (!layer.bias.empty()) {
            const std::string bias_name = layer.name + ".bias.bin";
            write_blob(base / bias_name, layer.bias);
            manifest << "bias " << bias_name << " " << layer.bias.size() << "\n";
        }
        manifest << "end\n";
    }

    std::ofstream out(manifest_path, std::ios::trunc);
    if (!out)
        throw Error(ErrorCode::io_error, "cannot write manifest " + manifest_path);
    out << manifest.str();
    if (!out)
        throw Error(ErrorCode::io_error,
                    "failed writing manifest " + manifest_path);
}

} // namespace specnorm
