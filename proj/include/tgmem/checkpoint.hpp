#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tgmem/parameter.hpp"
#include "tgmem/tensor.hpp"

namespace tgmem {

// Checkpoint container format: for each tensor, a text header line
// "name,rows,cols\n" followed by rows*cols IEEE doubles in little-endian
// byte order. Round-trips are bit-exact. Names must not contain commas or
// newlines.
struct NamedTensor {
    std::string name;
    Tensor tensor;
};

void write_tensors(std::ostream& out, std::span<const NamedTensor> tensors);
std::vector<NamedTensor> read_tensors(std::istream& in);

void save_tensors(const std::string& path, std::span<const NamedTensor> tensors);
std::vector<NamedTensor> load_tensors(const std::string& path);

// Parameter convenience wrappers. Loading fills matching names and requires
// the file to contain exactly the parameter set (same names, same shapes).
void save_checkpoint(const std::string& path, std::span<Parameter* const> params);
void load_checkpoint(const std::string& path, std::span<Parameter* const> params);

}  // namespace tgmem
