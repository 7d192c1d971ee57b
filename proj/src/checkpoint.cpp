#include "tgmem/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "tgmem/errors.hpp"

namespace tgmem {

namespace {

void write_double_le(std::ostream& out, double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(bytes, 8);
}

double read_double_le(std::istream& in) {
    char bytes[8];
    in.read(bytes, 8);
    if (in.gcount() != 8) throw IoError("checkpoint: truncated payload");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
    }
    return std::bit_cast<double>(bits);
}

}  // namespace

void write_tensors(std::ostream& out, std::span<const NamedTensor> tensors) {
    for (const NamedTensor& nt : tensors) {
        if (nt.name.empty() || nt.name.find(',') != std::string::npos ||
            nt.name.find('\n') != std::string::npos) {
            throw ArgumentError("checkpoint: invalid tensor name '" + nt.name + "'");
        }
        out << nt.name << ',' << nt.tensor.rows() << ',' << nt.tensor.cols() << '\n';
        for (std::size_t i = 0; i < nt.tensor.size(); ++i) write_double_le(out, nt.tensor[i]);
    }
    if (!out) throw IoError("checkpoint: write failed");
}

std::vector<NamedTensor> read_tensors(std::istream& in) {
    std::vector<NamedTensor> result;
    std::string header;
    while (std::getline(in, header)) {
        std::size_t c2 = header.rfind(',');
        std::size_t c1 = c2 == std::string::npos ? std::string::npos : header.rfind(',', c2 - 1);
        if (c1 == std::string::npos || c1 == 0) {
            throw IoError("checkpoint: malformed header '" + header + "'");
        }
        std::string name = header.substr(0, c1);
        std::size_t rows = 0;
        std::size_t cols = 0;
        try {
            rows = std::stoull(header.substr(c1 + 1, c2 - c1 - 1));
            cols = std::stoull(header.substr(c2 + 1));
        } catch (const std::exception&) {
            throw IoError("checkpoint: malformed header '" + header + "'");
        }
        std::vector<double> data(rows * cols);
        for (double& v : data) v = read_double_le(in);
        result.push_back(NamedTensor{std::move(name), Tensor(rows, cols, std::move(data))});
    }
    return result;
}

void save_tensors(const std::string& path, std::span<const NamedTensor> tensors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("checkpoint: cannot open " + path + " for writing");
    write_tensors(out, tensors);
}

std::vector<NamedTensor> load_tensors(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("checkpoint: cannot open " + path);
    return read_tensors(in);
}

void save_checkpoint(const std::string& path, std::span<Parameter* const> params) {
    std::vector<NamedTensor> tensors;
    tensors.reserve(params.size());
    for (const Parameter* p : params) tensors.push_back(NamedTensor{p->name, p->value});
    save_tensors(path, tensors);
}

void load_checkpoint(const std::string& path, std::span<Parameter* const> params) {
    std::vector<NamedTensor> tensors = load_tensors(path);
    if (tensors.size() != params.size()) {
        throw IoError("checkpoint: expected " + std::to_string(params.size()) + " tensors, found " +
                      std::to_string(tensors.size()));
    }
    for (Parameter* p : params) {
        bool found = false;
        for (NamedTensor& nt : tensors) {
            if (nt.name != p->name) continue;
            if (nt.tensor.rows() != p->value.rows() || nt.tensor.cols() != p->value.cols()) {
                throw IoError("checkpoint: shape mismatch for " + p->name);
            }
            p->value = std::move(nt.tensor);
            found = true;
            break;
        }
        if (!found) throw IoError("checkpoint: missing tensor " + p->name);
    }
}

}  // namespace tgmem
