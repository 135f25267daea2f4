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

#include <array>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "mtctc/manifest.hpp"

namespace mtctc::cli {

// Runs one CLI invocation; `args` excludes the program name. Returns the
// process exit code. Verbs: gen-words, gen-data, train, eval, compare.
int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// `--writers` accepts counts ("100,10,10", consecutive ids) or explicit
// colon-separated id lists per split ("0-7:8,9:10,11").
std::array<std::vector<int>, kNumSplits> ParseWriterSpec(std::string_view text);

}  // namespace mtctc::cli
