#include "kinverify/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "kinverify/error.hpp"
#include "kinverify/rng.hpp"

namespace kinverify {
namespace {

constexpr double kSymmetryTol = 1e-9;
constexpr double kRankTol = 1e-12;
constexpr Eigen::Index kExactPcaLimit = 512;

void canonicalize_columns(Eigen::MatrixXd& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        Eigen::Index arg = 0;
        m.col(j).cwiseAbs().maxCoeff(&arg);
        if (m(arg, j) < 0.0) m.col(j) = -m.col(j);
    }
}

void check_symmetric(const Eigen::MatrixXd& s, const char* what) {
    require(s.rows() == s.cols() && s.rows() >= 1, ErrorCode::invalid_argument,
            std::string(what) + " must be a non-empty square matrix");
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    require((s - s.transpose()).cwiseAbs().maxCoeff() <= kSymmetryTol * scale,
            ErrorCode::invalid_argument, std::string(what) + " is not symmetric");
}

Eigen::MatrixXd thin_q(const Eigen::MatrixXd& a) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    return qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
}

Eigen::MatrixXd truncated_identity(Eigen::Index d, Eigen::Index m) {
    return Eigen::MatrixXd::Identity(d, m);
}

Eigen::MatrixXd unit_columns(const Eigen::MatrixXd& w) {
    Eigen::MatrixXd out = w;
    for (Eigen::Index j = 0; j < out.cols(); ++j) out.col(j) /= out.col(j).norm();
    return out;
}

// Top-k principal directions of the centred columns of `centred`; when
// `clamp` is set, k shrinks to the numerical rank instead of failing.
PcaProjection principal_directions(const Eigen::MatrixXd& centred, Eigen::VectorXd mean, int k,
                                   std::uint64_t seed, bool clamp) {
    const Eigen::Index d = centred.rows();
    const Eigen::Index n = centred.cols();
    const double inv_n = 1.0 / double(n);

    Eigen::MatrixXd basis;
    Eigen::VectorXd spectrum;  // descending
    if (std::min(d, n) <= kExactPcaLimit) {
        if (d <= n) {
            Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
            cov.selfadjointView<Eigen::Lower>().rankUpdate(centred, inv_n);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
                Eigen::MatrixXd(cov.selfadjointView<Eigen::Lower>()));
            spectrum = es.eigenvalues().reverse();
            basis = es.eigenvectors().rowwise().reverse();
        } else {
            Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
            gram.selfadjointView<Eigen::Lower>().rankUpdate(centred.transpose(), inv_n);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
                Eigen::MatrixXd(gram.selfadjointView<Eigen::Lower>()));
            spectrum = es.eigenvalues().reverse();
            basis = centred * es.eigenvectors().rowwise().reverse();
            for (Eigen::Index j = 0; j < basis.cols(); ++j) {
                const double norm = basis.col(j).norm();
                if (norm > 0.0) basis.col(j) /= norm;
            }
        }
    } else {
        // randomized subspace iteration with Rayleigh-Ritz extraction
        const Eigen::Index l = std::min<Eigen::Index>(Eigen::Index(k) + 16, std::min(d, n));
        Rng rng(seed, 0x5043);
        Eigen::MatrixXd omega(n, l);
        for (Eigen::Index j = 0; j < l; ++j)
            for (Eigen::Index i = 0; i < n; ++i) omega(i, j) = rng.normal();
        Eigen::MatrixXd q = thin_q(centred * omega);
        for (int it = 0; it < 4; ++it) {
            const Eigen::MatrixXd z = thin_q(centred.transpose() * q);
            q = thin_q(centred * z);
        }
        const Eigen::MatrixXd b = q.transpose() * centred;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b * b.transpose() * inv_n);
        spectrum = es.eigenvalues().reverse();
        basis = q * es.eigenvectors().rowwise().reverse();
    }

    const double top = spectrum.size() > 0 ? spectrum(0) : 0.0;
    Eigen::Index rank = 0;
    while (rank < spectrum.size() && top > 0.0 && spectrum(rank) > kRankTol * top) ++rank;
    if (clamp) {
        k = int(std::min<Eigen::Index>(k, rank));
        require(k >= 1, ErrorCode::rank_deficient, "PCA input has zero variance");
    } else {
        require(k <= rank, ErrorCode::rank_deficient,
                "PCA target " + std::to_string(k) + " exceeds data rank " + std::to_string(rank));
    }

    PcaProjection out;
    out.mean = std::move(mean);
    out.basis = basis.leftCols(k);
    canonicalize_columns(out.basis);
    out.variances = spectrum.head(k);
    return out;
}

}  // namespace

ScatterPair scatters_from_differences(const Eigen::MatrixXd& kin_diffs,
                                      const Eigen::MatrixXd& nonkin_diffs) {
    require(kin_diffs.cols() >= 1, ErrorCode::degenerate_input, "no kin pairs for scatter");
    require(nonkin_diffs.cols() >= 1, ErrorCode::degenerate_input, "no non-kin pairs for scatter");
    require(kin_diffs.rows() == nonkin_diffs.rows(), ErrorCode::invalid_argument,
            "kin and non-kin differences differ in dimension");
    const Eigen::Index d = kin_diffs.rows();
    ScatterPair sc;
    sc.within = Eigen::MatrixXd::Zero(d, d);
    sc.within.selfadjointView<Eigen::Lower>().rankUpdate(kin_diffs, 1.0 / double(kin_diffs.cols()));
    sc.within = sc.within.selfadjointView<Eigen::Lower>();
    sc.between = Eigen::MatrixXd::Zero(d, d);
    sc.between.selfadjointView<Eigen::Lower>().rankUpdate(nonkin_diffs,
                                                          1.0 / double(nonkin_diffs.cols()));
    sc.between = sc.between.selfadjointView<Eigen::Lower>();
    return sc;
}

ScatterPair compute_sild_scatters(std::span<const VectorPair> pairs) {
    require(!pairs.empty(), ErrorCode::degenerate_input, "no pairs for scatter");
    const Eigen::Index d = pairs.front().parent.size();
    require(d >= 1, ErrorCode::invalid_argument, "empty feature vectors");
    Eigen::Index n_kin = 0;
    for (const auto& p : pairs) {
        require(p.parent.size() == d && p.child.size() == d, ErrorCode::invalid_argument,
                "pair vectors must all have length " + std::to_string(d));
        n_kin += p.kin ? 1 : 0;
    }
    Eigen::MatrixXd kin(d, n_kin), non(d, Eigen::Index(pairs.size()) - n_kin);
    Eigen::Index ik = 0, in = 0;
    for (const auto& p : pairs) (p.kin ? kin.col(ik++) : non.col(in++)) = p.parent - p.child;
    return scatters_from_differences(kin, non);
}

Eigen::MatrixXd matrix_exp_sym(const Eigen::MatrixXd& s, std::optional<SpectrumClip> clip) {
    check_symmetric(s, "matrix exponential input");
    const Eigen::MatrixXd sym = 0.5 * (s + s.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    require(es.info() == Eigen::Success, ErrorCode::degenerate_input,
            "eigendecomposition failed in matrix exponential");
    Eigen::VectorXd lambda = es.eigenvalues();
    if (clip) lambda = lambda.cwiseMax(clip->lo).cwiseMin(clip->hi);
    const Eigen::MatrixXd& q = es.eigenvectors();
    Eigen::MatrixXd out = q * lambda.array().exp().matrix().asDiagonal() * q.transpose();
    return 0.5 * (out + out.transpose());
}

void exponentiate(ScatterPair& sc, const SpectrumClip& clip) {
    sc.exp_within = matrix_exp_sym(sc.within, clip);
    sc.exp_between = matrix_exp_sym(sc.between, clip);
}

Eigen::MatrixXd regularized_within(const Eigen::MatrixXd& exp_within) {
    const auto d = exp_within.rows();
    const double ridge = 1e-6 * exp_within.trace() / double(d);
    return exp_within + ridge * Eigen::MatrixXd::Identity(d, d);
}

EdaSolution solve_eda(const ScatterPair& sc, int m) {
    require(sc.exp_within.size() > 0 && sc.exp_between.size() > 0, ErrorCode::invalid_argument,
            "scatter exponentials not computed");
    const Eigen::Index d = sc.exp_between.rows();
    require(sc.exp_within.rows() == d && sc.exp_within.cols() == d && sc.exp_between.cols() == d,
            ErrorCode::invalid_argument, "scatter exponentials differ in shape");
    require(m >= 1 && m <= d, ErrorCode::invalid_argument,
            "requested " + std::to_string(m) + " eigenvectors of a " + std::to_string(d) +
                "-dimensional problem");
    check_symmetric(sc.exp_between, "exp_between");
    check_symmetric(sc.exp_within, "exp_within");

    const Eigen::MatrixXd ew = regularized_within(sc.exp_within);
    Eigen::LLT<Eigen::MatrixXd> llt(ew);
    require(llt.info() == Eigen::Success, ErrorCode::degenerate_input,
            "exp_within is numerically singular after regularization");
    const auto lower = llt.matrixL();
    // M = L^-1 E_b L^-T
    Eigen::MatrixXd tmp = lower.solve(sc.exp_between);
    Eigen::MatrixXd reduced = lower.solve(tmp.transpose());
    reduced = 0.5 * (reduced + reduced.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(reduced);
    require(es.info() == Eigen::Success, ErrorCode::degenerate_input,
            "reduced eigenproblem failed");
    EdaSolution out;
    out.eigenvalues = es.eigenvalues().tail(m).reverse();
    const Eigen::MatrixXd y = es.eigenvectors().rightCols(m).rowwise().reverse();
    out.w = llt.matrixU().solve(y);  // L^-T y
    canonicalize_columns(out.w);
    out.residual = (sc.exp_between * out.w - ew * out.w * out.eigenvalues.asDiagonal())
                       .cwiseAbs()
                       .maxCoeff();
    return out;
}

PcaProjection pca_reduce(const Eigen::MatrixXd& samples, int target_dim, std::uint64_t seed) {
    const Eigen::Index n = samples.cols();
    require(target_dim >= 1, ErrorCode::invalid_argument, "PCA target must be >= 1");
    require(target_dim <= std::min(n - 1, samples.rows()), ErrorCode::rank_deficient,
            "PCA target " + std::to_string(target_dim) + " exceeds min(samples - 1, dim) = " +
                std::to_string(std::min(n - 1, samples.rows())));
    Eigen::VectorXd mean = samples.rowwise().mean();
    const Eigen::MatrixXd centred = samples.colwise() - mean;
    return principal_directions(centred, std::move(mean), target_dim, seed, false);
}

Eigen::Index SubspaceModel::input_mode1_dim() const {
    return pca ? pca->basis.rows() : projections.at(0).rows();
}
Eigen::Index SubspaceModel::input_mode2_dim() const { return projections.at(1).rows(); }
Eigen::Index SubspaceModel::output_dim() const {
    Eigen::Index n = 1;
    for (const auto& w : projections) n *= w.cols();
    return n;
}

bool operator==(const SubspaceModel& a, const SubspaceModel& b) {
    if (a.projections.size() != b.projections.size() ||
        a.eigenvalues.size() != b.eigenvalues.size() || a.pca.has_value() != b.pca.has_value() ||
        a.sweeps != b.sweeps || a.seed != b.seed)
        return false;
    for (std::size_t k = 0; k < a.projections.size(); ++k)
        if (!identical(a.projections[k], b.projections[k])) return false;
    for (std::size_t k = 0; k < a.eigenvalues.size(); ++k)
        if (!identical(a.eigenvalues[k], b.eigenvalues[k])) return false;
    return !a.pca || *a.pca == *b.pca;
}

TxqdaFit txqda_fit(std::span<const TensorPair> pairs, const TxqdaOptions& opt) {
    require(!pairs.empty(), ErrorCode::degenerate_input, "no training pairs");
    const Eigen::Index d1 = pairs.front().parent->mode1_dim();
    const Eigen::Index d2 = pairs.front().parent->mode2_dim();
    bool any_kin = false, any_non = false;
    for (const auto& p : pairs) {
        require(p.parent && p.child, ErrorCode::invalid_argument, "null tensor in pair");
        require(p.parent->mode1_dim() == d1 && p.parent->mode2_dim() == d2 &&
                    p.child->mode1_dim() == d1 && p.child->mode2_dim() == d2,
                ErrorCode::invalid_argument, "training tensors differ in shape");
        (p.kin ? any_kin : any_non) = true;
    }
    require(any_kin && any_non, ErrorCode::degenerate_input,
            "training pairs must include both kin and non-kin labels");
    require(opt.m1 >= 1 && opt.m1 <= d1 && opt.m2 >= 1 && opt.m2 <= d2,
            ErrorCode::invalid_argument,
            "projection sizes (" + std::to_string(opt.m1) + ", " + std::to_string(opt.m2) +
                ") exceed tensor dims (" + std::to_string(d1) + ", " + std::to_string(d2) + ")");
    require(opt.sweeps >= 0, ErrorCode::invalid_argument, "sweep count must be >= 0");

    TxqdaFit fit;
    SubspaceModel& model = fit.model;
    model.sweeps = opt.sweeps;
    model.seed = opt.seed;
    if (opt.sweeps == 0) {
        model.projections = {truncated_identity(d1, opt.m1), truncated_identity(d2, opt.m2)};
        model.eigenvalues = {Eigen::VectorXd::Ones(opt.m1), Eigen::VectorXd::Ones(opt.m2)};
        return fit;
    }

    // distinct tensors in first-appearance order
    std::vector<const FeatureTensor*> distinct;
    std::unordered_map<const FeatureTensor*, std::size_t> slot;
    for (const auto& p : pairs)
        for (const FeatureTensor* t : {p.parent, p.child})
            if (slot.emplace(t, distinct.size()).second) distinct.push_back(t);

    Eigen::MatrixXd fibres(d1, Eigen::Index(distinct.size()) * d2);
    for (std::size_t i = 0; i < distinct.size(); ++i)
        fibres.middleCols(Eigen::Index(i) * d2, d2) = distinct[i]->data;
    const int target = int(std::min<Eigen::Index>(
        {d1, Eigen::Index(pairs.size()) - 1, Eigen::Index(opt.pca_cap), fibres.cols() - 1}));
    require(target >= 1, ErrorCode::degenerate_input, "too few pairs for PCA pre-reduction");
    Eigen::VectorXd mean = fibres.rowwise().mean();
    fibres.colwise() -= mean;
    model.pca = principal_directions(fibres, std::move(mean), target, opt.seed, true);
    fibres.resize(0, 0);

    std::vector<Eigen::MatrixXd> reduced(distinct.size());
    for (std::size_t i = 0; i < distinct.size(); ++i)
        reduced[i] = model.pca->basis.transpose() *
                     (distinct[i]->data.colwise() - model.pca->mean);

    const Eigen::Index r1 = model.pca->basis.cols();
    const int m1 = int(std::min<Eigen::Index>(opt.m1, r1));
    model.projections = {truncated_identity(r1, m1), truncated_identity(d2, opt.m2)};
    model.eigenvalues = {Eigen::VectorXd::Ones(m1), Eigen::VectorXd::Ones(opt.m2)};

    Eigen::Index n_kin = 0;
    for (const auto& p : pairs) n_kin += p.kin ? 1 : 0;
    const Eigen::Index n_non = Eigen::Index(pairs.size()) - n_kin;

    for (int sweep = 1; sweep <= opt.sweeps; ++sweep) {
        for (int mode = 0; mode < 2; ++mode) {
            const int other = 1 - mode;
            const Eigen::MatrixXd dir = unit_columns(model.projections[std::size_t(other)]);
            const Eigen::Index dim = mode == 0 ? r1 : d2;
            const Eigen::Index per_pair = dir.cols();
            Eigen::MatrixXd kin(dim, n_kin * per_pair), non(dim, n_non * per_pair);
            Eigen::Index ik = 0, in = 0;
            for (const auto& p : pairs) {
                const Eigen::MatrixXd diff = reduced[slot[p.parent]] - reduced[slot[p.child]];
                const Eigen::MatrixXd unfolded =
                    mode == 0 ? Eigen::MatrixXd(diff * dir) : Eigen::MatrixXd(diff.transpose() * dir);
                if (p.kin) {
                    kin.middleCols(ik, per_pair) = unfolded;
                    ik += per_pair;
                } else {
                    non.middleCols(in, per_pair) = unfolded;
                    in += per_pair;
                }
            }
            ScatterPair sc = scatters_from_differences(kin, non);
            exponentiate(sc, opt.clip);
            const int m = mode == 0 ? m1 : opt.m2;
            EdaSolution sol = solve_eda(sc, m);
            fit.history.push_back({sweep, mode + 1, sol.residual});
            model.projections[std::size_t(mode)] = std::move(sol.w);
            model.eigenvalues[std::size_t(mode)] = std::move(sol.eigenvalues);
        }
    }
    return fit;
}

Eigen::VectorXd project(const SubspaceModel& model, const FeatureTensor& t) {
    require(model.projections.size() == 2, ErrorCode::invalid_argument,
            "model must hold two mode projections");
    require(t.mode1_dim() == model.input_mode1_dim() && t.mode2_dim() == model.input_mode2_dim(),
            ErrorCode::invalid_argument,
            "tensor " + std::to_string(t.mode1_dim()) + "x" + std::to_string(t.mode2_dim()) +
                " does not match model input " + std::to_string(model.input_mode1_dim()) + "x" +
                std::to_string(model.input_mode2_dim()));
    Eigen::MatrixXd core;
    if (model.pca)
        core = model.projections[0].transpose() *
               (model.pca->basis.transpose() * (t.data.colwise() - model.pca->mean)) *
               model.projections[1];
    else
        core = model.projections[0].transpose() * t.data * model.projections[1];
    return Eigen::Map<const Eigen::VectorXd>(core.data(), core.size());
}

}  // namespace kinverify
