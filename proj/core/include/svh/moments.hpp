#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "svh/claims.hpp"
#include "svh/heston.hpp"
#include "svh/quadrature.hpp"

namespace svh {

struct QuadSettings {
    double strip_tol = 1e-10;    // innermost strip integrals
    double outer_tol = 1e-9;     // outer strip of the double-strip entries
    double price_tol = 1e-10;    // option prices
    int time_nodes = 64;         // Gauss-Legendre nodes on [0, T]
    int threads = 0;             // 0 = hardware concurrency
    bool check_imaginary = false;  // integrate full strips and assert Im ~ 0
};

struct EntryMeta {
    double abs_err = 0.0;
    std::size_t n_evals = 0;
};

// Residual (co)variances of the GKW decompositions: scalar A for the swap,
// vector B (swap vs option i), matrix C (option i vs option j), plus the
// quadrature metadata per entry and the swap-rate context for the solvers.
struct MomentData {
    double a = 0.0;
    Eigen::VectorXd b;
    Eigen::MatrixXd c;
    double k_star = 0.0;  // model swap rate E[qv]
    double swap_k = 0.0;  // contractual swap strike
    EntryMeta a_meta;
    std::vector<EntryMeta> b_meta;
    std::vector<EntryMeta> c_meta;  // upper triangle, row-major (i <= j)
    std::string params_hash;

    double rcond() const;  // reciprocal condition number of C (symmetric)
};

// A in closed form (the time integral has an elementary antiderivative).
double compute_a(const HestonParams& p);

// Single entries by Fourier integration over the claim strips.
double compute_b_entry(const ClaimSpec& claim, const HestonParams& p, const QuadSettings& s,
                       EntryMeta* meta = nullptr);
double compute_c_entry(const ClaimSpec& ci, const ClaimSpec& cj, const HestonParams& p,
                       const QuadSettings& s, EntryMeta* meta = nullptr);

// Forward price of a claim at t = 0 via its strip integral.
double option_price(const ClaimSpec& claim, const HestonParams& p, double abs_tol = 1e-10);

// FNV-1a hash of the canonical (params, claims, settings) encoding; 16 hex chars.
std::string params_hash(const HestonParams& p, const ClaimSet& claims, const QuadSettings& s);

// Full assembly: every entry is an independent integral, computed in parallel
// over entries; results are bitwise identical for any thread count.  When
// cache_dir is given, a JSON snapshot keyed by params_hash is reused/written.
MomentData compute_moments(const HestonParams& p, const ClaimSet& claims, const QuadSettings& s,
                           const std::optional<std::filesystem::path>& cache_dir = std::nullopt);

// JSON (de)serialization; numbers carry 17 significant digits and round-trip.
std::string to_json(const MomentData& m, const HestonParams& p, const ClaimSet& claims,
                    const QuadSettings& s);
MomentData moments_from_json(const std::string& text);

void save_moments(const std::filesystem::path& file, const MomentData& m, const HestonParams& p,
                  const ClaimSet& claims, const QuadSettings& s);
std::optional<MomentData> load_moments(const std::filesystem::path& file,
                                       const std::string& expected_hash);

}  // namespace svh
