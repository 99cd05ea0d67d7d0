#include "kinverify/bsif.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "kinverify/error.hpp"
#include "kinverify/rng.hpp"

namespace kinverify {
namespace {

constexpr int kMaxBits = 16;

// (W W^T)^{-1/2} W
Eigen::MatrixXd symmetric_orthogonalize(const Eigen::MatrixXd& w) {
    const Eigen::MatrixXd gram = w * w.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    require(es.info() == Eigen::Success && es.eigenvalues().minCoeff() > 0.0,
            ErrorCode::degenerate_input, "unmixing matrix became singular");
    const Eigen::VectorXd inv_sqrt = es.eigenvalues().cwiseSqrt().cwiseInverse();
    return es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose() * w;
}

}  // namespace

PatchSet sample_channel_patches(std::span<const ColorImage> images, int side, std::size_t count,
                                std::uint64_t seed, Channel channel) {
    require(side >= 1, ErrorCode::invalid_argument, "patch side must be >= 1");
    require(count >= 1, ErrorCode::invalid_argument, "patch count must be >= 1");
    require(!images.empty(), ErrorCode::invalid_argument, "no images to sample patches from");
    for (const auto& img : images)
        require(img.width() >= side && img.height() >= side, ErrorCode::invalid_argument,
                "image " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                    " smaller than patch side " + std::to_string(side));

    const auto dim = Eigen::Index(side) * side;
    PatchSet set{side, channel, Eigen::MatrixXd(dim, Eigen::Index(count))};
    Rng rng(seed, static_cast<std::uint64_t>(channel));
    std::vector<double> buf(static_cast<std::size_t>(dim));

    const std::size_t max_draws = 20 * count + 1000;
    std::size_t filled = 0;
    for (std::size_t draw = 0; draw < max_draws && filled < count; ++draw) {
        const auto& img = images[rng.below(images.size())];
        const int x = int(rng.below(std::uint64_t(img.width() - side + 1)));
        const int y = int(rng.below(std::uint64_t(img.height() - side + 1)));
        const Plane& p = img.plane(channel);
        for (int r = 0; r < side; ++r)
            for (int c = 0; c < side; ++c) buf[std::size_t(r * side + c)] = p(x + c, y + r);
        if (std::all_of(buf.begin(), buf.end(), [&](double v) { return v == buf[0]; })) continue;
        const auto normed = normalize_patch(buf);
        set.samples.col(Eigen::Index(filled)) =
            Eigen::Map<const Eigen::VectorXd>(normed.data(), dim);
        ++filled;
    }
    require(filled == count, ErrorCode::degenerate_input,
            "only " + std::to_string(filled) + " of " + std::to_string(count) +
                " non-constant patches found after " + std::to_string(max_draws) + " draws");
    return set;
}

std::array<PatchSet, 3> sample_patches(std::span<const ColorImage> images, int side,
                                       std::size_t count, std::uint64_t seed) {
    return {sample_channel_patches(images, side, count, seed, Channel::red),
            sample_channel_patches(images, side, count, seed, Channel::green),
            sample_channel_patches(images, side, count, seed, Channel::blue)};
}

LearnedFilters learn_filters(const PatchSet& patches, int bits, std::uint64_t seed,
                             const IcaOptions& options) {
    const Eigen::Index dim = patches.samples.rows();
    const Eigen::Index count = patches.samples.cols();
    require(dim == Eigen::Index(patches.side) * patches.side, ErrorCode::invalid_argument,
            "patch set rows do not match side^2");
    require(bits <= dim - 1, ErrorCode::rank_deficient,
            std::to_string(bits) + " filters requested but normalized " +
                std::to_string(patches.side) + "x" + std::to_string(patches.side) +
                " patches span at most " + std::to_string(dim - 1) + " dimensions");
    require(bits >= 1 && bits <= kMaxBits, ErrorCode::invalid_argument,
            "bit count must be in [1, " + std::to_string(kMaxBits) + "], got " +
                std::to_string(bits));
    require(count >= 10 * dim, ErrorCode::invalid_argument,
            "need at least 10*side^2 = " + std::to_string(10 * dim) + " patches, got " +
                std::to_string(count));

    const Eigen::VectorXd mean = patches.samples.rowwise().mean();
    const Eigen::MatrixXd centred = patches.samples.colwise() - mean;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
    cov.selfadjointView<Eigen::Lower>().rankUpdate(centred, 1.0 / double(count));
    cov = cov.selfadjointView<Eigen::Lower>();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    require(es.info() == Eigen::Success, ErrorCode::degenerate_input,
            "patch covariance eigendecomposition failed");
    // ascending -> take the top `bits` in descending order
    LearnedFilters out;
    out.eigenvalues = es.eigenvalues().tail(bits).reverse();
    const Eigen::MatrixXd basis = es.eigenvectors().rightCols(bits).rowwise().reverse();
    const double top = out.eigenvalues(0);
    require(top > 0.0 && out.eigenvalues(bits - 1) > 1e-10 * top, ErrorCode::rank_deficient,
            std::to_string(bits) + " filters exceed the numerical rank of the patch covariance");

    out.whitening = out.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal() * basis.transpose();
    const Eigen::MatrixXd z = out.whitening * centred;  // bits x count

    Rng rng(seed, 100 + static_cast<std::uint64_t>(patches.channel));
    Eigen::MatrixXd w(bits, bits);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.normal();
    w = symmetric_orthogonalize(w);

    const double inv_n = 1.0 / double(count);
    double delta = 1.0;
    int it = 0;
    while (it < options.max_iterations) {
        ++it;
        const Eigen::MatrixXd y = w * z;
        const Eigen::MatrixXd g = y.array().cube().matrix();
        const Eigen::VectorXd gprime_mean = (3.0 * y.array().square()).rowwise().mean();
        Eigen::MatrixXd next = g * z.transpose() * inv_n - gprime_mean.asDiagonal() * w;
        next = symmetric_orthogonalize(next);
        delta = (1.0 - (next * w.transpose()).diagonal().array().abs()).abs().maxCoeff();
        w = std::move(next);
        if (delta < options.tolerance) break;
    }
    require(delta < options.tolerance, ErrorCode::not_converged,
            "FastICA did not converge in " + std::to_string(options.max_iterations) +
                " iterations (last change " + std::to_string(delta) + ")");

    out.unmixing = w;
    out.stats.iterations = it;
    out.stats.final_delta = delta;
    out.stats.orthonormality_error =
        (w * w.transpose() - Eigen::MatrixXd::Identity(bits, bits)).cwiseAbs().maxCoeff();

    out.filters = w * out.whitening;
    for (Eigen::Index i = 0; i < out.filters.rows(); ++i) {
        auto row = out.filters.row(i);
        row /= row.norm();
        Eigen::Index arg = 0;
        row.cwiseAbs().maxCoeff(&arg);
        if (row(arg) < 0.0) row = -row;
    }
    return out;
}

BankLearning learn_filter_bank(std::span<const ColorImage> images, int side, int bits,
                               std::size_t count, std::uint64_t seed, std::uint64_t ica_seed,
                               const std::string& source_tag, const IcaOptions& options) {
    const int dim = side * side;
    require(side >= 2 && bits <= dim - 1, ErrorCode::rank_deficient,
            std::to_string(bits) + " filters requested but normalized " + std::to_string(side) +
                "x" + std::to_string(side) + " patches span at most " + std::to_string(dim - 1) +
                " dimensions");
    BankLearning out;
    out.bank.side = side;
    out.bank.bits = bits;
    out.bank.seed = seed;
    out.bank.source_tag = source_tag;
    for (Channel c : kChannels) {
        // one channel at a time: a 50000-patch set at side 17 is ~115 MB
        const PatchSet patches = sample_channel_patches(images, side, count, seed, c);
        auto learned = learn_filters(patches, bits, ica_seed, options);
        out.bank.filters[std::size_t(c)] = std::move(learned.filters);
        out.stats[std::size_t(c)] = learned.stats;
    }
    return out;
}

CodeMap bsif_encode(const Plane& plane, const FilterMatrix& filters, int side) {
    return bsif_encode(plane, filters, side, simd::kernels());
}

CodeMap bsif_encode(const Plane& plane, const FilterMatrix& filters, int side,
                    const simd::Kernels& kernels) {
    require(side >= 1 && filters.cols() == Eigen::Index(side) * side, ErrorCode::invalid_argument,
            "filter matrix does not hold side^2 taps per filter");
    const int n = int(filters.rows());
    require(n >= 1 && n <= kMaxBits, ErrorCode::invalid_argument,
            "filter count must be in [1, " + std::to_string(kMaxBits) + "]");
    require(plane.width() >= side && plane.height() >= side, ErrorCode::invalid_argument,
            "plane " + std::to_string(plane.width()) + "x" + std::to_string(plane.height()) +
                " smaller than filter side " + std::to_string(side));

    const int half = (side - 1) / 2;
    const int pw = plane.width() + side - 1;
    const int ph = plane.height() + side - 1;
    std::vector<double> padded(std::size_t(pw) * std::size_t(ph));
    for (int y = 0; y < ph; ++y) {
        const int sy = std::clamp(y - half, 0, plane.height() - 1);
        for (int x = 0; x < pw; ++x) {
            const int sx = std::clamp(x - half, 0, plane.width() - 1);
            padded[std::size_t(y) * std::size_t(pw) + std::size_t(x)] = plane(sx, sy);
        }
    }

    CodeMap out(plane.width(), plane.height(), n);
    for (int y = 0; y < out.height; ++y)
        kernels.bsif_row(padded.data() + std::size_t(y) * std::size_t(pw), std::size_t(pw),
                         std::size_t(out.width), filters.data(), n, side, out.row(y).data());
    return out;
}

std::vector<CodeMap> ms_bsif(const ColorImage& img, std::span<const FilterBank> banks) {
    require(!banks.empty(), ErrorCode::invalid_argument, "no filter banks given");
    std::vector<const FilterBank*> order;
    for (const auto& b : banks) order.push_back(&b);
    std::stable_sort(order.begin(), order.end(),
                     [](const FilterBank* a, const FilterBank* b) { return a->side < b->side; });

    std::vector<CodeMap> maps;
    maps.reserve(3 * order.size());
    for (Channel c : kChannels)
        for (const FilterBank* b : order)
            maps.push_back(bsif_encode(img.plane(c), b->filters[std::size_t(c)], b->side));
    return maps;
}

}  // namespace kinverify
