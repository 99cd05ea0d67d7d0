#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "kinverify/eigen_util.hpp"
#include "kinverify/features.hpp"

namespace kinverify {

/// Side-information scatters. `within` accumulates kin-pair differences,
/// `between` non-kin-pair differences; both are divided by their sample
/// counts. The exponentials are filled in by `exponentiate`.
struct ScatterPair {
    Eigen::MatrixXd within;
    Eigen::MatrixXd between;
    Eigen::MatrixXd exp_within;
    Eigen::MatrixXd exp_between;
};

struct VectorPair {
    Eigen::VectorXd parent;
    Eigen::VectorXd child;
    bool kin = false;
};

ScatterPair compute_sild_scatters(std::span<const VectorPair> pairs);

/// Scatters from difference samples stored one per column.
ScatterPair scatters_from_differences(const Eigen::MatrixXd& kin_diffs,
                                      const Eigen::MatrixXd& nonkin_diffs);

/// Eigenvalue window applied before exponentiating a scatter.
struct SpectrumClip {
    double lo = 0.0;
    double hi = 50.0;
};

/// exp(S) = Q exp(L) Q^T for symmetric S, optionally clamping L first.
Eigen::MatrixXd matrix_exp_sym(const Eigen::MatrixXd& s,
                               std::optional<SpectrumClip> clip = std::nullopt);

void exponentiate(ScatterPair& sc, const SpectrumClip& clip = {});

/// exp_within + 1e-6 * trace(exp_within) / d * I
Eigen::MatrixXd regularized_within(const Eigen::MatrixXd& exp_within);

struct EdaSolution {
    Eigen::MatrixXd w;            // d x m, w_i^T E_w w_i = 1
    Eigen::VectorXd eigenvalues;  // descending
    double residual = 0.0;        // max |E_b W - E_w W diag(lambda)|
};

/// Top-m solutions of exp_between w = lambda * regularized(exp_within) w via
/// Cholesky reduction. Each column is sign-canonical (largest |entry| > 0).
EdaSolution solve_eda(const ScatterPair& sc, int m);

struct PcaProjection {
    Eigen::VectorXd mean;       // d
    Eigen::MatrixXd basis;      // d x d', orthonormal columns
    Eigen::VectorXd variances;  // d', descending

    friend bool operator==(const PcaProjection& a, const PcaProjection& b) {
        return identical(a.mean, b.mean) && identical(a.basis, b.basis) &&
               identical(a.variances, b.variances);
    }
};

/// Mean-centred principal projection onto the top `target_dim` directions of
/// the columns of `samples`. Exact for small problems; large ones use seeded
/// randomized subspace iteration.
PcaProjection pca_reduce(const Eigen::MatrixXd& samples, int target_dim, std::uint64_t seed = 0);

struct SubspaceModel {
    std::vector<Eigen::MatrixXd> projections;  // per mode, d_k x m_k
    std::vector<Eigen::VectorXd> eigenvalues;  // per mode, m_k
    std::optional<PcaProjection> pca;          // applied along mode 1
    int sweeps = 0;
    std::uint64_t seed = 0;

    /// Expected input dims (before PCA).
    Eigen::Index input_mode1_dim() const;
    Eigen::Index input_mode2_dim() const;
    Eigen::Index output_dim() const;

    friend bool operator==(const SubspaceModel& a, const SubspaceModel& b);
};

struct TensorPair {
    const FeatureTensor* parent = nullptr;
    const FeatureTensor* child = nullptr;
    bool kin = false;
};

struct TxqdaOptions {
    int m1 = 40;
    int m2 = 8;
    int sweeps = 2;
    int pca_cap = 200;
    std::uint64_t seed = 0;
    SpectrumClip clip{};
};

struct ModeFitRecord {
    int sweep = 0;
    int mode = 0;
    double residual = 0.0;
};

struct TxqdaFit {
    SubspaceModel model;
    std::vector<ModeFitRecord> history;
};

/// Alternating per-mode SILD + EDA. Mode 1 is PCA-reduced to
/// min(d1, pairs - 1, pca_cap, rank) first. While one mode is updated, the
/// other mode's projection is applied with unit-norm columns so the update
/// does not depend on the other mode's eigen-normalization.
TxqdaFit txqda_fit(std::span<const TensorPair> pairs, const TxqdaOptions& options);

Eigen::VectorXd project(const SubspaceModel& model, const FeatureTensor& t);

}  // namespace kinverify
