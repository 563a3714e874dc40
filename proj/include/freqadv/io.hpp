#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "freqadv/constraint.hpp"
#include "freqadv/model.hpp"
#include "freqadv/tensor.hpp"

namespace freqadv {

// Round-half-away-from-zero quantization of [0,1] values to 8-bit.
std::uint8_t quantize_8bit(double v);
std::vector<std::uint8_t> quantize_image(const Image& img);
Image dequantize_image(const std::vector<std::uint8_t>& bytes, int h, int w, int c);

// Binary PGM (P5) for single-channel data, PPM (P6) for 3-channel.
void write_pgm(const std::string& path, int width, int height,
               const std::vector<std::uint8_t>& gray);
void write_image_pnm(const std::string& path, const Image& img);
Image read_image_pnm(const std::string& path);

// Mask render: preserved cells white (255), masked black (0).
void write_mask_pgm(const std::string& path, const SpectrumMask& mask);

// Checkpoint container. Layout:
//   bytes 0..7   magic "FADVCKP1"
//   bytes 8..11  u32 little-endian JSON header length H
//   bytes 12..   H bytes of JSON: version, architecture, init seed,
//                metadata map, and the parameter count
//   then         parameter doubles, IEEE-754 binary64 little-endian,
//                per layer: weights then biases
void save_checkpoint(const std::string& path, const Model& model);
Model load_checkpoint(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// FNV-1a 64-bit over bytes, rendered as 16 hex digits; used for config and
// artifact provenance digests.
std::uint64_t fnv1a64(const std::string& data);
std::string hex_digest(std::uint64_t value);

}  // namespace freqadv
