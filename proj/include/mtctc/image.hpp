/* Copyright 2026 The mtctc Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mtctc {

// Row-major grayscale image, ink = 1.0, background = 0.0.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int h, int w) : height(h), width(w), pixels(size_t(h) * w, 0.0f) {}

  float& at(int r, int c) { return pixels[size_t(r) * width + c]; }
  float at(int r, int c) const { return pixels[size_t(r) * width + c]; }

  bool operator==(const Image&) const = default;
};

// 8-bit grayscale PNG. Pixels are quantized with round-to-nearest on write
// and scaled by 1/255 on read.
void WritePng(const Image& image, const std::filesystem::path& path);
Image ReadPng(const std::filesystem::path& path);

// Rounds every pixel to the nearest 1/255 step, i.e. what a PNG round trip
// would give back.
void QuantizeTo8Bit(Image& image);

std::string ReadFileBytes(const std::filesystem::path& path);
void WriteFileBytes(const std::filesystem::path& path, const std::string& bytes);
uint32_t Crc32(const std::string& bytes);

}  // namespace mtctc
