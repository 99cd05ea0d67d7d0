#include "kinverify/io.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>

#include <unistd.h>

#include "kinverify/error.hpp"

namespace kinverify {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(bool(in), ErrorCode::io, "cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    require(!in.bad(), ErrorCode::io, "cannot read " + path.string());
    return bytes;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
    auto tmp = path;
    tmp += ".tmp" + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(bool(out), ErrorCode::io, "cannot write " + tmp.string());
        out.write(bytes.data(), std::streamsize(bytes.size()));
        out.flush();
        require(bool(out), ErrorCode::io, "cannot write " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        fail(ErrorCode::io, "cannot replace " + path.string());
    }
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace kinverify
