#include "kinverify/persistence.hpp"

#include <bit>
#include <cstring>

#include "kinverify/error.hpp"
#include "kinverify/io.hpp"

namespace kinverify {
namespace {

constexpr std::string_view kBankMagic = "KBSF";
constexpr std::string_view kFeatureMagic = "KFEA";
constexpr std::string_view kModelMagic = "KTXQ";

class Writer {
public:
    explicit Writer(std::string_view magic) {
        out_.append(magic);
        u32(kFormatVersion);
    }

    void u8(std::uint8_t v) { out_.push_back(char(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out_.push_back(char((v >> (8 * i)) & 0xff));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out_.push_back(char((v >> (8 * i)) & 0xff));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void dim(Eigen::Index v) {
        require(v >= 0 && v <= Eigen::Index(UINT32_MAX), ErrorCode::invalid_argument,
                "dimension does not fit the file format");
        u32(std::uint32_t(v));
    }
    // column-major for ColMajor matrices, row-major for RowMajor ones
    template <class M>
    void values(const M& m) {
        for (Eigen::Index i = 0; i < m.size(); ++i) f64(m.data()[i]);
    }
    void text(const std::string& s) {
        dim(Eigen::Index(s.size()));
        out_.append(s);
    }

    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class Reader {
public:
    Reader(std::string_view bytes, std::string_view magic, std::string name)
        : bytes_(bytes), name_(std::move(name)) {
        require(bytes.size() >= 8 && bytes.substr(0, 4) == magic, ErrorCode::decode,
                name_ + ": not a " + std::string(magic) + " file");
        pos_ = 4;
        const auto version = u32();
        require(version == kFormatVersion, ErrorCode::decode,
                name_ + ": unsupported format version " + std::to_string(version));
    }

    std::uint8_t u8() { return std::uint8_t(take(1)[0]); }
    std::uint32_t u32() {
        const auto b = take(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(b[i])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        const auto b = take(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(b[i])) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    template <class M>
    void values(M& m) {
        require(std::size_t(m.size()) <= remaining() / 8, ErrorCode::decode, name_ + ": truncated");
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = f64();
    }
    std::string text() {
        const auto n = u32();
        return std::string(take(n));
    }
    void finish() const {
        require(pos_ == bytes_.size(), ErrorCode::decode, name_ + ": trailing bytes");
    }
    const std::string& name() const { return name_; }

private:
    std::size_t remaining() const { return bytes_.size() - pos_; }
    std::string_view take(std::size_t n) {
        require(n <= remaining(), ErrorCode::decode, name_ + ": truncated");
        const auto out = bytes_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    std::string_view bytes_;
    std::string name_;
    std::size_t pos_ = 0;
};

// Guards allocations against corrupt headers.
void check_dims(const Reader& r, std::uint64_t a, std::uint64_t b, std::uint64_t limit = 1u << 28) {
    require(a * b <= limit, ErrorCode::decode, r.name() + ": implausible dimensions");
}

}  // namespace

std::string encode(const FilterBank& bank) {
    Writer w(kBankMagic);
    w.dim(bank.side);
    w.dim(bank.bits);
    w.u32(3);
    w.u64(bank.seed);
    for (const auto& f : bank.filters) {
        require(f.rows() == bank.bits && f.cols() == Eigen::Index(bank.side) * bank.side,
                ErrorCode::invalid_argument, "filter matrix does not match bank dimensions");
        w.values(f);
    }
    w.text(bank.source_tag);
    return w.take();
}

std::string encode(const FeatureTensor& t) {
    Writer w(kFeatureMagic);
    w.dim(t.mode1_dim());
    w.dim(t.mode2_dim());
    w.values(t.data);
    return w.take();
}

std::string encode(const SubspaceModel& m) {
    require(m.eigenvalues.size() == m.projections.size(), ErrorCode::invalid_argument,
            "model has mismatched eigenvalue and projection lists");
    Writer w(kModelMagic);
    w.dim(Eigen::Index(m.projections.size()));
    for (const auto& p : m.projections) {
        w.dim(p.rows());
        w.dim(p.cols());
        w.values(p);
    }
    w.u8(m.pca ? 1 : 0);
    if (m.pca) {
        w.dim(m.pca->basis.rows());
        w.dim(m.pca->basis.cols());
        require(m.pca->mean.size() == m.pca->basis.rows() &&
                    m.pca->variances.size() == m.pca->basis.cols(),
                ErrorCode::invalid_argument, "PCA block has inconsistent shapes");
        w.values(m.pca->basis);
        w.values(m.pca->mean);
        w.values(m.pca->variances);
    }
    for (const auto& e : m.eigenvalues) {
        w.dim(e.size());
        w.values(e);
    }
    require(m.sweeps >= 0, ErrorCode::invalid_argument, "negative sweep count");
    w.u32(std::uint32_t(m.sweeps));
    w.u64(m.seed);
    return w.take();
}

ArtifactKind sniff(std::string_view bytes, const std::string& name) {
    const auto magic = bytes.substr(0, 4);
    if (magic == kBankMagic) return ArtifactKind::filter_bank;
    if (magic == kFeatureMagic) return ArtifactKind::features;
    if (magic == kModelMagic) return ArtifactKind::subspace_model;
    fail(ErrorCode::decode, name + ": unknown artifact type");
}

FilterBank decode_filter_bank(std::string_view bytes, const std::string& name) {
    Reader r(bytes, kBankMagic, name);
    FilterBank bank;
    bank.side = int(r.u32());
    bank.bits = int(r.u32());
    const auto channels = r.u32();
    require(channels == 3, ErrorCode::decode, name + ": expected 3 channels");
    require(bank.side >= 1 && bank.bits >= 1 && bank.bits <= 16, ErrorCode::decode,
            name + ": invalid bank dimensions");
    check_dims(r, std::uint64_t(bank.side) * bank.side, std::uint64_t(bank.bits));
    bank.seed = r.u64();
    for (auto& f : bank.filters) {
        f.resize(bank.bits, Eigen::Index(bank.side) * bank.side);
        r.values(f);
    }
    bank.source_tag = r.text();
    r.finish();
    return bank;
}

FeatureTensor decode_features(std::string_view bytes, const std::string& name) {
    Reader r(bytes, kFeatureMagic, name);
    const auto d1 = r.u32();
    const auto d2 = r.u32();
    check_dims(r, d1, d2);
    FeatureTensor t;
    t.data.resize(d1, d2);
    r.values(t.data);
    r.finish();
    return t;
}

SubspaceModel decode_subspace_model(std::string_view bytes, const std::string& name) {
    Reader r(bytes, kModelMagic, name);
    SubspaceModel m;
    const auto modes = r.u32();
    require(modes <= 16, ErrorCode::decode, name + ": implausible mode count");
    for (std::uint32_t k = 0; k < modes; ++k) {
        const auto d = r.u32();
        const auto c = r.u32();
        check_dims(r, d, c);
        Eigen::MatrixXd p(d, c);
        r.values(p);
        m.projections.push_back(std::move(p));
    }
    if (r.u8()) {
        PcaProjection pca;
        const auto d = r.u32();
        const auto c = r.u32();
        check_dims(r, d, c);
        pca.basis.resize(d, c);
        pca.mean.resize(d);
        pca.variances.resize(c);
        r.values(pca.basis);
        r.values(pca.mean);
        r.values(pca.variances);
        m.pca = std::move(pca);
    }
    for (std::uint32_t k = 0; k < modes; ++k) {
        const auto n = r.u32();
        check_dims(r, n, 1);
        Eigen::VectorXd e(n);
        r.values(e);
        m.eigenvalues.push_back(std::move(e));
    }
    m.sweeps = int(r.u32());
    m.seed = r.u64();
    r.finish();
    return m;
}

void save(const FilterBank& bank, const std::filesystem::path& path) {
    write_file_atomic(path, encode(bank));
}
void save(const FeatureTensor& tensor, const std::filesystem::path& path) {
    write_file_atomic(path, encode(tensor));
}
void save(const SubspaceModel& model, const std::filesystem::path& path) {
    write_file_atomic(path, encode(model));
}

FilterBank load_filter_bank(const std::filesystem::path& path) {
    return decode_filter_bank(read_file(path), path.string());
}
FeatureTensor load_features(const std::filesystem::path& path) {
    return decode_features(read_file(path), path.string());
}
SubspaceModel load_subspace_model(const std::filesystem::path& path) {
    return decode_subspace_model(read_file(path), path.string());
}

}  // namespace kinverify
