// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace dmimo {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Raised for any precondition violation on caller-supplied data.
class InvalidInput : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Default threshold below which a precoder entry counts as switched off (sqrt(W)).
inline constexpr double kDefaultZeroTol = 1e-6;

/// Noise-normalized downlink channel. Row k holds the gains from every AP to UE k,
/// already divided by sqrt(N0 * bandwidth), so all SINR arithmetic uses unit noise.
class ChannelMatrix {
  public:
    ChannelMatrix() = default;
    ChannelMatrix(CMatrix entries, double bandwidth_hz = 200e3, double noise_density_dbm_per_hz = -174.0);

    [[nodiscard]] int num_ues() const { return static_cast<int>(entries_.rows()); }
    [[nodiscard]] int num_aps() const { return static_cast<int>(entries_.cols()); }
    [[nodiscard]] const CMatrix& entries() const { return entries_; }
    [[nodiscard]] cplx operator()(int k, int m) const { return entries_(k, m); }
    [[nodiscard]] double bandwidth_hz() const { return bandwidth_hz_; }
    [[nodiscard]] double noise_density_dbm_per_hz() const { return noise_density_dbm_per_hz_; }

  private:
    CMatrix entries_;
    double bandwidth_hz_ = 200e3;
    double noise_density_dbm_per_hz_ = -174.0;
};

/// Linear precoder, M rows (APs) by K columns (UEs), in sqrt(W).
class PrecoderMatrix {
  public:
    PrecoderMatrix() = default;
    explicit PrecoderMatrix(CMatrix entries);
    static PrecoderMatrix zeros(int num_aps, int num_ues);

    [[nodiscard]] int num_aps() const { return static_cast<int>(entries_.rows()); }
    [[nodiscard]] int num_ues() const { return static_cast<int>(entries_.cols()); }
    [[nodiscard]] const CMatrix& entries() const { return entries_; }
    [[nodiscard]] cplx operator()(int m, int k) const { return entries_(m, k); }
    void set(int m, int k, cplx value) { entries_(m, k) = value; }

  private:
    CMatrix entries_;
};

enum class SharingVariant { Total, PerUE };

/// The data-sharing limit on AP-UE pairings.
struct SharingBudget {
    SharingVariant variant = SharingVariant::Total;
    int b_tot = 1;

    /// floor(b_tot / K); only meaningful for the PerUE variant.
    [[nodiscard]] int per_ue_cap(int num_ues) const { return b_tot / num_ues; }
};

/// Binary AP-UE association, M x K. a(m, k) = 1 means AP m holds UE k's data.
class PairingMatrix {
  public:
    using Entries = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

    PairingMatrix() = default;
    /// Throws InvalidInput if a UE is left unserved or the budget is exceeded.
    PairingMatrix(Entries entries, SharingBudget budget);

    /// Full data sharing, with the non-binding budget b_tot = M * K.
    static PairingMatrix full(int num_aps, int num_ues);

    [[nodiscard]] int num_aps() const { return static_cast<int>(entries_.rows()); }
    [[nodiscard]] int num_ues() const { return static_cast<int>(entries_.cols()); }
    [[nodiscard]] const Entries& entries() const { return entries_; }
    [[nodiscard]] bool active(int m, int k) const { return entries_(m, k) != 0; }
    [[nodiscard]] const SharingBudget& budget() const { return budget_; }

    [[nodiscard]] int total_active() const;
    [[nodiscard]] int column_active(int k) const;
    [[nodiscard]] std::vector<int> active_per_ue() const;

    /// Every column covered and the budget row(s) satisfied.
    [[nodiscard]] bool satisfies_budget() const;
    [[nodiscard]] bool covers_every_ue() const;
    [[nodiscard]] bool is_valid() const { return covers_every_ue() && satisfies_budget(); }

  private:
    Entries entries_;
    SharingBudget budget_;
};

/// (AP, UE) entries of the precoder forced to zero.
class ZeroSet {
  public:
    ZeroSet() = default;
    ZeroSet(int num_aps, int num_ues) : mask_(PairingMatrix::Entries::Zero(num_aps, num_ues)) {}
    /// Complement of the pairing's support.
    static ZeroSet from_pairing(const PairingMatrix::Entries& pairing);

    [[nodiscard]] int num_aps() const { return static_cast<int>(mask_.rows()); }
    [[nodiscard]] int num_ues() const { return static_cast<int>(mask_.cols()); }
    [[nodiscard]] bool contains(int m, int k) const { return mask_(m, k) != 0; }
    void insert(int m, int k) { mask_(m, k) = 1; }
    void erase(int m, int k) { mask_(m, k) = 0; }
    [[nodiscard]] int size() const;
    [[nodiscard]] int free_in_column(int k) const;
    /// Pairing that is active exactly off the zero set.
    [[nodiscard]] PairingMatrix::Entries support() const;

    friend bool operator==(const ZeroSet& a, const ZeroSet& b) { return a.mask_ == b.mask_; }

  private:
    PairingMatrix::Entries mask_;
};

/// Throws InvalidInput unless the budget admits at least one covering pairing.
void validate_budget(const SharingBudget& budget, int num_aps, int num_ues);

struct PowerBudget {
    double p_max_watt = 1.0;
    explicit PowerBudget(double p = 1.0);
};

struct SinrReport {
    std::vector<double> per_ue_sinr;
    std::vector<double> per_ap_power;
    double min_sinr = 0.0;
};

/// gamma_k = |h_k w_k|^2 / (1 + sum_{i != k} |h_k w_i|^2).
double compute_sinr(const ChannelMatrix& channel, const PrecoderMatrix& precoder, int ue);

/// P_m = sum_k |w_mk|^2.
double per_ap_power(const PrecoderMatrix& precoder, int ap);

SinrReport sinr_report(const ChannelMatrix& channel, const PrecoderMatrix& precoder);

/// bandwidth * log2(1 + t), in bit/s.
double shannon_rate(double sinr, double bandwidth_hz);

/// a_mk = 1 iff |w_mk| > zero_tol. No budget validation is applied.
PairingMatrix::Entries pairing_support(const PrecoderMatrix& precoder, double zero_tol = kDefaultZeroTol);

}  // namespace dmimo
