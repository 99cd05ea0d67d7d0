#include <doctest.h>

#include <cmath>

#include "kinverify/subspace.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace kinverify;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    return m;
}

Eigen::MatrixXd random_spd(Rng& rng, Eigen::Index d) {
    const Eigen::MatrixXd a = random_matrix(rng, d, d);
    return a * a.transpose() / double(d) + 0.1 * Eigen::MatrixXd::Identity(d, d);
}

// Symmetric matrix with eigenvalues drawn uniformly from [lo, hi].
Eigen::MatrixXd random_symmetric(Rng& rng, Eigen::Index d, double lo, double hi) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_matrix(rng, d, d));
    const Eigen::MatrixXd q = qr.householderQ();
    Eigen::VectorXd l(d);
    for (Eigen::Index i = 0; i < d; ++i) l(i) = rng.uniform(lo, hi);
    return q * l.asDiagonal() * q.transpose();
}

double rel_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).norm() / b.norm();
}

struct TensorSet {
    std::vector<FeatureTensor> tensors;
    std::vector<TensorPair> pairs;
};

// Parent/child tensors where kin children are a noisy copy of their parent.
TensorSet tensor_pairs(Rng& rng, int n_pairs, Eigen::Index d1, Eigen::Index d2) {
    TensorSet s;
    s.tensors.reserve(std::size_t(2 * n_pairs));
    for (int i = 0; i < n_pairs; ++i) {
        const Eigen::MatrixXd parent = random_matrix(rng, d1, d2);
        const bool kin = i % 2 == 0;
        const Eigen::MatrixXd child =
            kin ? Eigen::MatrixXd(parent + 0.3 * random_matrix(rng, d1, d2)) : random_matrix(rng, d1, d2);
        s.tensors.push_back({parent});
        s.tensors.push_back({child});
    }
    for (int i = 0; i < n_pairs; ++i)
        s.pairs.push_back({&s.tensors[std::size_t(2 * i)], &s.tensors[std::size_t(2 * i + 1)], i % 2 == 0});
    return s;
}

}  // namespace

TEST_CASE("SILD scatters match the outer-product oracle") {
    Rng rng(51);
    std::vector<VectorPair> pairs;
    std::vector<Eigen::VectorXd> kin, non;
    for (int i = 0; i < 40; ++i) {
        VectorPair p{Eigen::VectorXd(6), Eigen::VectorXd(6), i % 3 == 0};
        for (int k = 0; k < 6; ++k) {
            p.parent(k) = rng.normal();
            p.child(k) = rng.normal();
        }
        (p.kin ? kin : non).push_back(p.parent - p.child);
        pairs.push_back(p);
    }
    const ScatterPair sc = compute_sild_scatters(pairs);
    CHECK(rel_error(sc.within, oracle::scatter(kin)) < 1e-12);
    CHECK(rel_error(sc.between, oracle::scatter(non)) < 1e-12);
    CHECK(identical(sc.within, Eigen::MatrixXd(sc.within.transpose())));

    std::vector<VectorPair> only_kin(pairs.begin(), pairs.begin() + 1);
    CHECK(support::error_of([&] { compute_sild_scatters(only_kin); }) == ErrorCode::degenerate_input);
}

TEST_CASE("symmetric matrix exponential matches scaling-and-squaring Taylor") {
    Rng rng(52);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd s = random_symmetric(rng, 8, 0.0, 5.0);
        CHECK(rel_error(matrix_exp_sym(s), oracle::expm_taylor(s)) <= 1e-8);
    }
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(4, 4);
    CHECK(rel_error(matrix_exp_sym(zero), Eigen::MatrixXd::Identity(4, 4)) < 1e-15);
}

TEST_CASE("spectrum clipping bounds the exponent") {
    Rng rng(53);
    const Eigen::MatrixXd s = random_symmetric(rng, 6, -3.0, 20.0);
    const Eigen::MatrixXd e = matrix_exp_sym(s, SpectrumClip{0.0, 8.0});
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(e);
    CHECK(es.eigenvalues().minCoeff() >= 1.0 - 1e-9);
    CHECK(es.eigenvalues().maxCoeff() <= std::exp(8.0) * (1.0 + 1e-9));
    Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(3, 3);
    asym(0, 1) = 1.0;
    CHECK(support::error_of([&] { matrix_exp_sym(asym); }) == ErrorCode::invalid_argument);
}

TEST_CASE("EDA solutions satisfy the generalized eigenproblem") {
    Rng rng(54);
    for (Eigen::Index d : {2, 5, 10, 20, 35, 50}) {
        ScatterPair sc;
        sc.exp_within = random_spd(rng, d);
        sc.exp_between = random_spd(rng, d);
        const int m = int(std::min<Eigen::Index>(d, 8));
        const EdaSolution sol = solve_eda(sc, m);
        const Eigen::MatrixXd ew = regularized_within(sc.exp_within);
        const Eigen::MatrixXd r = sc.exp_between * sol.w - ew * sol.w * sol.eigenvalues.asDiagonal();
        CHECK(r.cwiseAbs().maxCoeff() <= 1e-8);
        CHECK(sol.residual <= 1e-8);
        const Eigen::MatrixXd g = sol.w.transpose() * ew * sol.w;
        CHECK((g - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff() <= 1e-9);
        for (Eigen::Index i = 1; i < m; ++i) CHECK(sol.eigenvalues(i) <= sol.eigenvalues(i - 1));
        for (Eigen::Index j = 0; j < m; ++j) {
            Eigen::Index arg = 0;
            sol.w.col(j).cwiseAbs().maxCoeff(&arg);
            CHECK(sol.w(arg, j) > 0.0);
        }
    }
    ScatterPair sc{{}, {}, Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Identity(3, 3)};
    CHECK(support::error_of([&] { solve_eda(sc, 4); }) == ErrorCode::invalid_argument);
}

TEST_CASE("PCA basis is orthonormal with descending variances") {
    Rng rng(55);
    const Eigen::MatrixXd x = random_matrix(rng, 12, 60);
    const PcaProjection p = pca_reduce(x, 5);
    REQUIRE(p.basis.cols() == 5);
    CHECK((p.basis.transpose() * p.basis - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(rel_error(p.mean, x.rowwise().mean()) < 1e-14);
    for (Eigen::Index i = 1; i < 5; ++i) CHECK(p.variances(i) <= p.variances(i - 1));
    const Eigen::MatrixXd c = x.colwise() - p.mean;
    const Eigen::VectorXd var = (p.basis.transpose() * c).rowwise().squaredNorm() / 60.0;
    CHECK(rel_error(var, p.variances) < 1e-10);
    CHECK(pca_reduce(x, 5) == p);

    CHECK(support::error_of([&] { pca_reduce(x, 13); }) == ErrorCode::rank_deficient);
    const Eigen::MatrixXd low = random_matrix(rng, 12, 2) * random_matrix(rng, 2, 30);
    CHECK(support::error_of([&] { pca_reduce(low, 4); }) == ErrorCode::rank_deficient);
}

TEST_CASE("wide PCA input uses the Gram path and the randomized path on large data") {
    Rng rng(56);
    // low-rank signal plus small noise, so the top directions are well separated
    const Eigen::MatrixXd signal = random_matrix(rng, 700, 6) * Eigen::VectorXd::LinSpaced(6, 10, 5).asDiagonal() *
                                   random_matrix(rng, 6, 600);
    const Eigen::MatrixXd x = signal + 0.01 * random_matrix(rng, 700, 600);
    const PcaProjection p = pca_reduce(x, 6, 3);
    CHECK((p.basis.transpose() * p.basis - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-10);
    // compare with the exact covariance spectrum
    const Eigen::MatrixXd c = x.colwise() - x.rowwise().mean();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.transpose() * c / 600.0);
    const Eigen::VectorXd exact = es.eigenvalues().reverse().head(6);
    CHECK(rel_error(p.variances, exact) < 1e-8);
    CHECK(pca_reduce(x, 6, 3) == p);

    const Eigen::MatrixXd wide = random_matrix(rng, 40, 20);
    const PcaProjection g = pca_reduce(wide, 10);
    CHECK((g.basis.transpose() * g.basis - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("TXQDA alternates both modes and records small residuals") {
    Rng rng(57);
    const TensorSet s = tensor_pairs(rng, 60, 30, 6);
    TxqdaOptions opt;
    opt.m1 = 5;
    opt.m2 = 3;
    opt.sweeps = 2;
    opt.pca_cap = 20;
    opt.seed = 9;
    const TxqdaFit fit = txqda_fit(s.pairs, opt);
    REQUIRE(fit.history.size() == 4);
    for (std::size_t i = 0; i < fit.history.size(); ++i) {
        CHECK(fit.history[i].sweep == int(i / 2) + 1);
        CHECK(fit.history[i].mode == int(i % 2) + 1);
        CHECK(fit.history[i].residual <= 1e-6);
    }
    REQUIRE(fit.model.pca.has_value());
    CHECK(fit.model.pca->basis.cols() == 20);
    CHECK(fit.model.input_mode1_dim() == 30);
    CHECK(fit.model.input_mode2_dim() == 6);
    CHECK(fit.model.output_dim() == 15);
    CHECK(project(fit.model, s.tensors[0]).size() == 15);
    CHECK(txqda_fit(s.pairs, opt).model == fit.model);

    // kin pairs end up closer than non-kin pairs in the learned space
    double kin = 0.0, non = 0.0;
    for (const auto& p : s.pairs) {
        const double dist = (project(fit.model, *p.parent) - project(fit.model, *p.child)).norm();
        (p.kin ? kin : non) += dist;
    }
    CHECK(kin < non);
}

TEST_CASE("zero sweeps keep truncated identities and no PCA") {
    Rng rng(58);
    const TensorSet s = tensor_pairs(rng, 10, 8, 4);
    TxqdaOptions opt;
    opt.m1 = 3;
    opt.m2 = 2;
    opt.sweeps = 0;
    const TxqdaFit fit = txqda_fit(s.pairs, opt);
    CHECK(fit.history.empty());
    CHECK_FALSE(fit.model.pca.has_value());
    const Eigen::VectorXd z = project(fit.model, s.tensors[0]);
    REQUIRE(z.size() == 6);
    CHECK(z(0) == s.tensors[0].data(0, 0));
    CHECK(z(4) == s.tensors[0].data(1, 1));
}

TEST_CASE("TXQDA preconditions") {
    Rng rng(59);
    TensorSet s = tensor_pairs(rng, 8, 8, 4);
    TxqdaOptions opt;
    opt.m1 = 9;
    opt.m2 = 2;
    CHECK(support::error_of([&] { txqda_fit(s.pairs, opt); }) == ErrorCode::invalid_argument);
    opt.m1 = 2;
    std::vector<TensorPair> kin_only{s.pairs[0], s.pairs[2]};
    CHECK(support::error_of([&] { txqda_fit(kin_only, opt); }) == ErrorCode::degenerate_input);
    const FeatureTensor wrong{Eigen::MatrixXd::Zero(7, 4)};
    const TxqdaFit fit = txqda_fit(s.pairs, opt);
    CHECK(support::error_of([&] { project(fit.model, wrong); }) == ErrorCode::invalid_argument);
}
