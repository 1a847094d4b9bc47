// Copyright 2026 The tas Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Little-endian binary helpers shared by the checkpoint and feature formats.

#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace tas::io {

void write_u32(std::ostream& out, std::uint32_t v);
void write_f64(std::ostream& out, double v);
void write_f64s(std::ostream& out, const std::vector<double>& v);

std::uint32_t read_u32(std::istream& in, const std::string& what);
double read_f64(std::istream& in, const std::string& what);
std::vector<double> read_f64s(std::istream& in, std::size_t count, const std::string& what);

void expect_magic(std::istream& in, std::string_view magic, const std::string& what);

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double v);

}  // namespace tas::io
