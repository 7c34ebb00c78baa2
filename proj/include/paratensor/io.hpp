#pragma once

#include "paratensor/grid.hpp"

#include <json.hpp>

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace paratensor {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// DTF: a JSON header <base>.dtf.json plus a sibling raw file <base>.dtf.raw of
// little-endian 64-bit floats in row-major order. Round-trips are bit-exact;
// the raw bytes are written explicitly LSB-first, independent of host order.
inline void write_dtf(const std::filesystem::path& base, const DyadicTensor& tensor) {
    const std::filesystem::path header_path = base.string() + ".dtf.json";
    const std::filesystem::path raw_path = base.string() + ".dtf.raw";

    nlohmann::json header;
    header["dims"] = tensor.dims();
    header["dtype"] = "f64le";
    header["order"] = "row-major";
    header["data"] = raw_path.filename().string();
    {
        std::ofstream out(header_path);
        if (!out) throw IoError("cannot write " + header_path.string());
        out << header.dump(2) << "\n";
    }
    std::ofstream raw(raw_path, std::ios::binary);
    if (!raw) throw IoError("cannot write " + raw_path.string());
    std::vector<unsigned char> bytes(static_cast<std::size_t>(tensor.size()) * 8);
    for (Index i = 0; i < tensor.size(); ++i) {
        const auto u = std::bit_cast<std::uint64_t>(tensor.array()[i]);
        for (int b = 0; b < 8; ++b)
            bytes[static_cast<std::size_t>(i) * 8 + static_cast<std::size_t>(b)] =
                static_cast<unsigned char>((u >> (8 * b)) & 0xFF);
    }
    raw.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!raw) throw IoError("short write to " + raw_path.string());
}

// Accepts either the header path (<base>.dtf.json) or the bare <base>.
inline DyadicTensor read_dtf(const std::filesystem::path& path) {
    std::filesystem::path header_path = path;
    if (header_path.extension() != ".json") header_path = path.string() + ".dtf.json";
    std::ifstream in(header_path);
    if (!in) throw IoError("cannot open " + header_path.string());
    nlohmann::json header;
    try {
        in >> header;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad DTF header " + header_path.string() + ": " + e.what());
    }
    if (header.value("dtype", "") != "f64le" || header.value("order", "") != "row-major")
        throw IoError("unsupported DTF encoding in " + header_path.string());
    std::vector<Index> dims = header.at("dims").get<std::vector<Index>>();
    Index total = 1;
    for (Index d : dims) total *= d;

    const std::filesystem::path raw_path =
        header_path.parent_path() / header.at("data").get<std::string>();
    std::ifstream raw(raw_path, std::ios::binary);
    if (!raw) throw IoError("cannot open " + raw_path.string());
    std::vector<unsigned char> bytes(static_cast<std::size_t>(total) * 8);
    raw.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (raw.gcount() != static_cast<std::streamsize>(bytes.size()))
        throw IoError("short read from " + raw_path.string());

    ArrayX<double> data(total);
    for (Index i = 0; i < total; ++i) {
        std::uint64_t u = 0;
        for (int b = 7; b >= 0; --b)
            u = (u << 8) | bytes[static_cast<std::size_t>(i) * 8 + static_cast<std::size_t>(b)];
        data[i] = std::bit_cast<double>(u);
    }
    return DyadicTensor(std::move(dims), std::move(data));
}

// Axis-aligned pixel rectangle, half-open, row = axis 0 of the tensor.
struct PixelBox {
    Index row0 = 0, col0 = 0, row1 = 0, col1 = 0;
};

// Binary 8-bit PGM of a rank-2 tensor, values min-max scaled; optional box
// outlines drawn at full intensity.
inline void write_pgm(const std::filesystem::path& path, const DyadicTensor& image,
                      const std::vector<PixelBox>& boxes = {}) {
    if (image.rank() != 2) throw std::invalid_argument("write_pgm: rank-2 tensor required");
    const Index rows = image.dim(0), cols = image.dim(1);
    const double lo = image.array().minCoeff();
    const double hi = image.array().maxCoeff();
    const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
    std::vector<unsigned char> pixels(static_cast<std::size_t>(rows * cols));
    for (Index i = 0; i < rows * cols; ++i)
        pixels[static_cast<std::size_t>(i)] =
            static_cast<unsigned char>((image.array()[i] - lo) * scale + 0.5);
    auto put = [&](Index r, Index c) {
        if (r >= 0 && r < rows && c >= 0 && c < cols)
            pixels[static_cast<std::size_t>(r * cols + c)] = 255;
    };
    for (const PixelBox& b : boxes) {
        for (Index c = b.col0; c < b.col1; ++c) {
            put(b.row0, c);
            put(b.row1 - 1, c);
        }
        for (Index r = b.row0; r < b.row1; ++r) {
            put(r, b.col0);
            put(r, b.col1 - 1);
        }
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "P5\n" << cols << " " << rows << "\n255\n";
    out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
    if (!out) throw IoError("short write to " + path.string());
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);  // binary: byte-identical output on every platform
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("short write to " + path.string());
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

}  // namespace paratensor
