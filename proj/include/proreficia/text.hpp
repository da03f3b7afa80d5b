// Copyright 2026 The ProReFiCIA Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared by the parsers and renderers.
namespace proreficia::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Splits on '\n' and strips a trailing '\r' from each line. A trailing
/// newline does not produce an empty last line.
std::vector<std::string_view> split_lines(std::string_view s);

/// Collapses every run of whitespace (including newlines) into one space
/// and trims the ends.
std::string flatten_line(std::string_view s);

/// Lowercased maximal runs of ASCII alphanumerics, in order of appearance.
std::vector<std::string> word_tokens(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Replaces every occurrence of `needle`.
std::string replace_all(std::string s, std::string_view needle, std::string_view value);

}  // namespace proreficia::text
